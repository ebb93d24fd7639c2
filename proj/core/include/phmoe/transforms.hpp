#pragma once

// Inhomogeneity transforms. A transform is fixed by its intensity lambda(y);
// G(y) = int_0^y lambda(s) ds maps a response onto the operational time of the
// underlying Markov jump process, and g = G^{-1} maps back.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace phmoe {

enum class TransformFamily {
  Identity,
  Pareto,
  Weibull,
  SemiCompositeWeibullTail,
  SemiCompositeParetoTail,
};

std::string_view family_name(TransformFamily f);
/// Accepts the names produced by family_name, with '-' allowed for '_'.
TransformFamily parse_family(std::string_view name);

bool is_semi_composite(TransformFamily f);
/// Number of free transform parameters (theta, plus the threshold when it is
/// estimated).
int parameter_count(TransformFamily f, bool threshold_fixed);

struct Transform {
  TransformFamily family = TransformFamily::Identity;
  double theta = 1.0;                // Pareto scale or Weibull shape
  std::optional<double> threshold;   // y0, semi-composite families only
  bool threshold_fixed = true;

  static Transform identity() { return {}; }
  static Transform pareto(double theta) {
    return {TransformFamily::Pareto, theta, std::nullopt, true};
  }
  static Transform weibull(double theta) {
    return {TransformFamily::Weibull, theta, std::nullopt, true};
  }
  static Transform semi_composite_weibull(double theta, double y0,
                                          bool fixed = true) {
    return {TransformFamily::SemiCompositeWeibullTail, theta, y0, fixed};
  }
  static Transform semi_composite_pareto(double theta, double y0,
                                         bool fixed = true) {
    return {TransformFamily::SemiCompositeParetoTail, theta, y0, fixed};
  }

  bool operator==(const Transform&) const = default;
};

/// Intensity lambda(y). y = 0 is allowed and returns the boundary value, which
/// is +inf for Weibull shapes below one.
double lambda(const Transform& tr, double y);

/// G(y) = int_0^y lambda(s) ds.
double g_inverse(const Transform& tr, double y);

/// g(z), the inverse of g_inverse.
double g_forward(const Transform& tr, double z);

/// Point in operational time where a semi-composite transform switches
/// pieces (equal to y0, since the body is the identity); nullopt otherwise.
std::optional<double> kink(const Transform& tr);

/// Empty when the transform is valid; otherwise one message per violation.
std::vector<std::string> validate(const Transform& tr);

}  // namespace phmoe
