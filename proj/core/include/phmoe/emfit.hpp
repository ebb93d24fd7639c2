#pragma once

// Estimation of PH-MoE models by the EM algorithm: E-step conditional
// expectations for exact and interval-censored data, the explicit M-step for
// T, the weighted multinomial R-step for the gating, and direct likelihood
// maximization over the transform parameters.

#include "phmoe/matcore.hpp"
#include "phmoe/moe.hpp"
#include "phmoe/transforms.hpp"

#include "phmoe/error.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace phmoe {

/// Exact value y > 0, or an interval (a, b] with 0 <= a < b <= +inf.
class Response {
 public:
  static Response exact(double y);
  static Response interval(double a, double b);
  static Response right_censored(double a) {
    return interval(a, std::numeric_limits<double>::infinity());
  }

  bool is_exact() const { return exact_; }
  bool is_right_censored() const { return !exact_ && std::isinf(upper_); }
  double value() const { return lower_; }  // exact responses
  double lower() const { return lower_; }
  double upper() const { return upper_; }

  bool operator==(const Response&) const = default;

 private:
  Response(bool exact, double lo, double hi)
      : exact_(exact), lower_(lo), upper_(hi) {}
  bool exact_ = true;
  double lower_ = 1.0;
  double upper_ = 1.0;
};

struct Observation {
  Response response;
  DesignRow design;
  double weight = 1.0;
};

/// Conditional expectations for a single observation.
struct EStepContribution {
  RowVector start;   // E[B_k]
  Vector sojourn;    // E[V_k]
  Matrix jumps;      // E[N_kl], zero diagonal
  Vector exits;      // E[N_k]
  double log_term = 0.0;  // log pi exp(Tz) t, or log of the interval mass
};

/// Aggregated expected sufficient statistics.
struct SufficientStats {
  Matrix start;      // N x p, rows E[B(x_i)] (unweighted, on the simplex)
  Vector sojourn;    // sum_i w_i E[V_k(x_i)]
  Matrix jumps;      // sum_i w_i E[N_kl(x_i)]
  Vector exits;      // sum_i w_i E[N_k(x_i)]
};

EStepContribution estep_exact(const RowVector& pi, const SubIntensityMatrix& T,
                              double z);
/// Interval (a, b] in operational time; b may be +inf.
EStepContribution estep_censored(const RowVector& pi,
                                 const SubIntensityMatrix& T, double a,
                                 double b);

struct EStepBatch {
  SufficientStats stats;
  double loglik = 0.0;  // incomplete log-likelihood at the current model
};

/// E-step over a dataset. Exact observations sharing a design row are
/// propagated incrementally in sorted order of operational time; the
/// reduction is in index order, independent of worker count.
EStepBatch estep_batch(const PhMoeModel& model,
                       const std::vector<Observation>& data);

/// Per-row E[B_k | data] at the given model.
Matrix posterior_start_weights(const PhMoeModel& model,
                               const std::vector<Observation>& data);

struct MStepResult {
  SubIntensityMatrix T;
  std::vector<int> starved_states;  // rows kept from `previous`
};

inline constexpr double kSojournFloor = 1e-12;

/// t_kl = N_kl / V_k, t_k = N_k / V_k. States with V_k below kSojournFloor
/// keep their row from `previous` (if given; otherwise an error).
MStepResult mstep(const SufficientStats& stats,
                  const SubIntensityMatrix* previous = nullptr);

struct RStepConfig {
  int max_iterations = 100;
  int max_halvings = 30;
  double ridge = 0.0;          // on non-intercept coefficients
  double coefficient_cap = 30.0;
  double gradient_tolerance = 1e-10;
};

struct RStepResult {
  GatingCoefficients alpha;
  double objective = 0.0;
  double gradient_norm = 0.0;  // max-norm over free coefficients
  int iterations = 0;
  bool separation = false;     // some coefficient sits on the cap
  bool diverged = false;       // line search exhausted its halvings
};

/// Weighted multinomial objective sum_i w_i sum_k B_ik log pi_k(x_i; alpha)
/// minus the ridge penalty.
double rstep_objective(const Matrix& B, const std::vector<DesignRow>& designs,
                       const Vector& weights, const GatingCoefficients& alpha,
                       double ridge = 0.0);

/// Gradient of rstep_objective over the free coefficients, laid out as
/// (p-1) blocks of d entries (state 2 first).
Vector rstep_gradient(const Matrix& B, const std::vector<DesignRow>& designs,
                      const Vector& weights, const GatingCoefficients& alpha,
                      double ridge = 0.0);

/// Newton-Raphson with step halving, started from `start`.
RStepResult rstep(const Matrix& B, const std::vector<DesignRow>& designs,
                  const Vector& weights, const GatingCoefficients& start,
                  const RStepConfig& config = {});

/// Incomplete log-likelihood sum_i w_i log(term_i).
double log_likelihood(const PhMoeModel& model,
                      const std::vector<Observation>& data);

struct ThetaStepResult {
  Transform transform;
  double loglik = 0.0;
  bool warning = false;
};

/// Maximizes the incomplete likelihood over theta (Nelder-Mead on log theta),
/// and over the threshold on a grid of order statistics when it is not fixed.
ThetaStepResult theta_step(const std::vector<Observation>& data,
                           const PhMoeModel& model);

enum class InitStrategy { RandomGeneral, RandomCoxian };

struct FitConfig {
  int p = 3;
  int max_iterations = 2000;
  double loglik_tolerance = 1e-8;  // relative
  int r_step_max_newton = 30;      // step halvings per Newton iteration
  int r_step_max_iterations = 100;
  double r_step_ridge = 0.0;
  int theta_step_every = 1;
  std::uint64_t seed = 1;
  InitStrategy init_strategy = InitStrategy::RandomGeneral;
  std::optional<double> theta0;
  std::optional<double> threshold;
  bool threshold_fixed = true;
};

struct FitResult {
  PhMoeModel model;
  std::vector<double> trace;  // trace[i]: log-likelihood after i iterations
  bool converged = false;
  int iterations = 0;
  int dof = 0;
  std::vector<std::string> warnings;
};

/// A step failed; carries the iteration and the last valid model.
class FitError : public NumericalError {
 public:
  FitError(int iteration, std::optional<PhMoeModel> last, const std::string& what)
      : NumericalError("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration),
        last_(std::move(last)) {}
  int iteration() const { return iteration_; }
  const std::optional<PhMoeModel>& last_valid_model() const { return last_; }

 private:
  int iteration_;
  std::optional<PhMoeModel> last_;
};

/// p^2 + (p-1) d + dim(theta).
int degrees_of_freedom(int p, int d, const Transform& transform);

struct Initialization {
  GatingCoefficients alpha;
  SubIntensityMatrix T;
  Transform transform;
};

Initialization initialize(int p, const CovariateSchema& schema,
                          const std::vector<Observation>& data,
                          TransformFamily family, const FitConfig& config);

FitResult fit(const std::vector<Observation>& data,
              const CovariateSchema& schema, TransformFamily family,
              const FitConfig& config);

}  // namespace phmoe
