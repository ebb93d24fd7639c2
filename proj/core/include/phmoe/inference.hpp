#pragma once

// Partial-likelihood inference for the gating coefficients, treating the
// E-step weights B as fixed. Standard errors are lower bounds: uncertainty in
// T and theta is not propagated.

#include "phmoe/emfit.hpp"

#include <optional>
#include <string>
#include <vector>

namespace phmoe {

struct CoefficientRow {
  int state = 2;            // 1-based, >= 2
  std::string column;
  double estimate = 0.0;
  std::optional<double> standard_error;  // empty when not identifiable
  std::optional<double> z_value;
  std::optional<double> p_value;

  bool missing() const { return !standard_error.has_value(); }
  std::string stars() const;
};

struct CoefficientTable {
  std::vector<CoefficientRow> rows;  // state-major, then design column
  bool singular = false;             // information was rank deficient
};

/// Inverse observed information of the weighted multinomial objective at
/// alpha_hat. Directions with eigenvalue below 1e-10 of the largest are
/// treated as null; coefficients loading on them get no standard error.
CoefficientTable gating_inference(const Matrix& B,
                                  const std::vector<DesignRow>& designs,
                                  const Vector& weights,
                                  const GatingCoefficients& alpha_hat,
                                  const std::vector<std::string>& column_names = {});

/// Convenience overload: B from the E-step at the fitted model.
CoefficientTable gating_inference(const PhMoeModel& model,
                                  const std::vector<Observation>& data);

struct InformationCriteria {
  double loglik = 0.0;
  int dof = 0;
  double n = 0.0;
  double aic = 0.0;
  double bic = 0.0;
};

InformationCriteria information_criteria(double loglik, int dof, double n);
/// N is the total weight of the data.
InformationCriteria information_criteria(const FitResult& fit,
                                         const std::vector<Observation>& data);

}  // namespace phmoe
