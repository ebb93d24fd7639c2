#pragma once

// Phase-type (PH) and inhomogeneous phase-type (IPH) distributions:
// density, survival, quantiles, moments and conditional tail behaviour.

#include "phmoe/matcore.hpp"
#include "phmoe/transforms.hpp"

#include <optional>
#include <vector>

namespace phmoe {

/// PH(pi, T): absorption time of a Markov jump process started from pi.
class PhaseDistribution {
 public:
  PhaseDistribution(RowVector pi, SubIntensityMatrix T);

  int order() const { return T_.order(); }
  const RowVector& pi() const { return pi_; }
  const SubIntensityMatrix& T() const { return T_; }

 private:
  RowVector pi_;
  SubIntensityMatrix T_;
};

/// Y = g(Z) with Z ~ PH(pi, T).
struct IphDistribution {
  PhaseDistribution base;
  Transform transform;
};

struct TailReport {
  double eta = 0.0;
  int block_size = 1;
  std::vector<int> accessible_states;  // zero-based state indices
  std::optional<double> tail_index;    // 1/eta for Pareto-type tails
};

/// Survival of the homogeneous PH law, pi exp(Tz) 1.
double ph_survival(const PhaseDistribution& d, double z);

/// lambda(y) pi exp(G(y) T) t. Negative y is an error; y = 0 returns the
/// boundary value.
double iph_density(const IphDistribution& d, double y);

/// pi exp(G(y) T) 1; equal to 1 at y = 0.
double iph_survival(const IphDistribution& d, double y);

/// y with F(y) = q, by bracketing and bisection in operational time.
double iph_quantile(const IphDistribution& d, double q);

/// pi (-T)^{-1} 1.
double ph_mean(const PhaseDistribution& d);

/// E[Y^zeta] for the Weibull transform with shape theta:
/// Gamma(1 + zeta/theta) pi (-T)^{-zeta/theta} 1.
double weibull_fractional_moment(const PhaseDistribution& d, double theta,
                                 double zeta);

/// Mean of the IPH law. Identity and Weibull use closed forms; the remaining
/// families integrate the survival function numerically in operational time.
/// Throws InfiniteMean for Pareto-type tails with eta <= 1.
double iph_mean(const IphDistribution& d);

/// States reachable from {k : pi_k > zero_tolerance} through positive
/// off-diagonal rates, and the dominant decay rate of T restricted to them.
TailReport tail_report(const RowVector& pi, const SubIntensityMatrix& T,
                       const Transform& transform,
                       double zero_tolerance = 1e-8);

}  // namespace phmoe
