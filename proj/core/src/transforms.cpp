#include "phmoe/transforms.hpp"

#include "phmoe/error.hpp"

#include <cmath>
#include <limits>

namespace phmoe {

namespace {

void require_valid(const Transform& tr) {
  const auto v = validate(tr);
  if (!v.empty()) throw InvalidArgument("invalid transform: " + v.front());
}

double y0_of(const Transform& tr) { return *tr.threshold; }

}  // namespace

std::string_view family_name(TransformFamily f) {
  switch (f) {
    case TransformFamily::Identity: return "identity";
    case TransformFamily::Pareto: return "pareto";
    case TransformFamily::Weibull: return "weibull";
    case TransformFamily::SemiCompositeWeibullTail:
      return "semi_composite_weibull_tail";
    case TransformFamily::SemiCompositeParetoTail:
      return "semi_composite_pareto_tail";
  }
  return "identity";
}

TransformFamily parse_family(std::string_view name) {
  std::string s(name);
  for (auto& c : s)
    if (c == '-') c = '_';
  for (auto f : {TransformFamily::Identity, TransformFamily::Pareto,
                 TransformFamily::Weibull,
                 TransformFamily::SemiCompositeWeibullTail,
                 TransformFamily::SemiCompositeParetoTail})
    if (family_name(f) == s) return f;
  throw InvalidArgument("unknown transform family '" + std::string(name) + "'");
}

bool is_semi_composite(TransformFamily f) {
  return f == TransformFamily::SemiCompositeWeibullTail ||
         f == TransformFamily::SemiCompositeParetoTail;
}

int parameter_count(TransformFamily f, bool threshold_fixed) {
  if (f == TransformFamily::Identity) return 0;
  if (is_semi_composite(f)) return threshold_fixed ? 1 : 2;
  return 1;
}

std::vector<std::string> validate(const Transform& tr) {
  std::vector<std::string> out;
  if (tr.family == TransformFamily::Identity) return out;
  if (!(tr.theta > 0.0) || !std::isfinite(tr.theta))
    out.emplace_back("theta must be positive");
  if (is_semi_composite(tr.family)) {
    if (!tr.threshold)
      out.emplace_back("threshold is required");
    else if (!(*tr.threshold > 0.0) || !std::isfinite(*tr.threshold))
      out.emplace_back("threshold must be positive");
  }
  return out;
}

std::optional<double> kink(const Transform& tr) {
  if (is_semi_composite(tr.family) && tr.threshold) return *tr.threshold;
  return std::nullopt;
}

double lambda(const Transform& tr, double y) {
  if (!(y >= 0.0)) throw InvalidArgument("lambda: y must be nonnegative");
  require_valid(tr);
  const double th = tr.theta;
  switch (tr.family) {
    case TransformFamily::Identity: return 1.0;
    case TransformFamily::Pareto: return 1.0 / (y + th);
    case TransformFamily::Weibull:
      if (y == 0.0)
        return th < 1.0 ? std::numeric_limits<double>::infinity()
                        : (th == 1.0 ? 1.0 : 0.0);
      return th * std::pow(y, th - 1.0);
    case TransformFamily::SemiCompositeWeibullTail: {
      const double y0 = y0_of(tr);
      if (y <= y0) return 1.0;
      return th * std::pow(y - y0, th - 1.0);
    }
    case TransformFamily::SemiCompositeParetoTail: {
      const double y0 = y0_of(tr);
      if (y <= y0) return 1.0;
      return 1.0 / (y - y0 + th);
    }
  }
  return 1.0;
}

double g_inverse(const Transform& tr, double y) {
  if (!(y >= 0.0)) throw InvalidArgument("g_inverse: y must be nonnegative");
  require_valid(tr);
  const double th = tr.theta;
  switch (tr.family) {
    case TransformFamily::Identity: return y;
    case TransformFamily::Pareto: return std::log1p(y / th);
    case TransformFamily::Weibull: return std::pow(y, th);
    case TransformFamily::SemiCompositeWeibullTail: {
      const double y0 = y0_of(tr);
      if (y <= y0) return y;
      return y0 + std::pow(y - y0, th);
    }
    case TransformFamily::SemiCompositeParetoTail: {
      const double y0 = y0_of(tr);
      if (y <= y0) return y;
      return y0 + std::log1p((y - y0) / th);
    }
  }
  return y;
}

double g_forward(const Transform& tr, double z) {
  if (!(z >= 0.0)) throw InvalidArgument("g_forward: z must be nonnegative");
  require_valid(tr);
  const double th = tr.theta;
  switch (tr.family) {
    case TransformFamily::Identity: return z;
    case TransformFamily::Pareto: return th * std::expm1(z);
    case TransformFamily::Weibull: return std::pow(z, 1.0 / th);
    case TransformFamily::SemiCompositeWeibullTail: {
      const double y0 = y0_of(tr);
      if (z <= y0) return z;
      return y0 + std::pow(z - y0, 1.0 / th);
    }
    case TransformFamily::SemiCompositeParetoTail: {
      const double y0 = y0_of(tr);
      if (z <= y0) return z;
      return y0 + th * std::expm1(z - y0);
    }
  }
  return z;
}

}  // namespace phmoe
