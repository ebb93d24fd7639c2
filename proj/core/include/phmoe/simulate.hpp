#pragma once

// Exact simulation of PH-MoE responses through the underlying jump process,
// the four-Gamma-group benchmark scenario, and censoring schemes.
//
// Rng wraps std::mt19937_64. Row i of any batch simulation draws from
// substream(i), seeded by std::seed_seq over (seed, i), so output does not
// depend on worker count.

#include "phmoe/emfit.hpp"
#include "phmoe/io.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace phmoe {

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  Rng substream(std::uint64_t index) const;
  std::mt19937_64& engine() { return engine_; }

  double uniform();                  // (0, 1)
  double exponential(double rate);
  double gamma(double shape, double scale);
  double normal();

 private:
  Rng(std::uint64_t seed, std::mt19937_64 engine)
      : seed_(seed), engine_(std::move(engine)) {}
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

struct AbsorptionDraw {
  double time = 0.0;
  int start_state = 0;  // zero-based
};

AbsorptionDraw sample_absorption(const RowVector& pi, const SubIntensityMatrix& T,
                                 Rng& rng);

/// Y = g(Z) with Z drawn from the PH law with pi = softmax_pi(x).
double sample_response(const PhMoeModel& model, const DesignRow& x, Rng& rng);

/// One exact response per design row; row i uses substream i of `seed`.
std::vector<double> sample_responses(const PhMoeModel& model,
                                     const std::vector<DesignRow>& designs,
                                     std::uint64_t seed);

/// Four groups A..D of `per_group` rows with Gamma(shape, scale) responses
/// (1,3), (3,9), (1,9), (3,3); covariate `group` is categorical.
Dataset scenario_gamma_groups(std::uint64_t seed, int per_group = 500);

/// n rows from a model. Covariates are drawn per column: categorical levels
/// uniformly, numeric columns as center + scale * N(0, 1).
Dataset simulate_from_model(const PhMoeModel& model, std::size_t n,
                            std::uint64_t seed);

struct CensoringScheme {
  enum class Kind { None, RightAt, RandomExponential, IntervalGrid };
  Kind kind = Kind::None;
  double value = 0.0;  // cutoff, rate or grid width

  static CensoringScheme none() { return {}; }
  static CensoringScheme right_at(double c) { return {Kind::RightAt, c}; }
  static CensoringScheme random_exponential(double rate) {
    return {Kind::RandomExponential, rate};
  }
  static CensoringScheme interval_grid(double w) { return {Kind::IntervalGrid, w}; }

  /// "none", "right@C", "exp@RATE", "grid@W".
  static CensoringScheme parse(const std::string& text);
};

/// Replaces exact responses according to the scheme. Random censoring draws
/// row i from substream i of rng.seed().
void apply_censoring(std::vector<Observation>& data, const CensoringScheme& scheme,
                     const Rng& rng);

}  // namespace phmoe
