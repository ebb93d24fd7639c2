#pragma once

// Weighted multinomial logit pieces shared by the R-step and inference.
// Free coefficients are rows 2..p of alpha, flattened row-major.

#include "phmoe/matcore.hpp"
#include "phmoe/moe.hpp"

#include <vector>

namespace phmoe::detail {

struct AggregatedDesign {
  Matrix X;      // G x d distinct design rows
  Matrix B;      // G x p, sum of w_i * B_i over the group
  Vector mass;   // G, sum of w_i * sum_k B_ik
};

AggregatedDesign aggregate(const Matrix& B, const std::vector<DesignRow>& designs,
                           const Vector& weights);

double objective(const AggregatedDesign& a, const Matrix& alpha, double ridge);
Vector gradient(const AggregatedDesign& a, const Matrix& alpha, double ridge);
/// Negative Hessian (observed information) of the objective.
Matrix information(const AggregatedDesign& a, const Matrix& alpha,
                   double ridge);

}  // namespace phmoe::detail
