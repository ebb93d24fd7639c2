#include "phmoe/phcore.hpp"

#include "phmoe/error.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace phmoe {

namespace {

RowVector checked_pi(RowVector pi, int p) {
  if (pi.size() != p)
    throw InvalidArgument("initial distribution length does not match T");
  if (!pi.allFinite() || (pi.array() < 0.0).any())
    throw InvalidArgument("initial distribution must be nonnegative");
  if (std::abs(pi.sum() - 1.0) > 1e-12)
    throw InvalidArgument("initial distribution must sum to one");
  return pi;
}

// log g'(z) = -log lambda(g(z)), written per family so that it stays finite
// where g(z) itself overflows.
double log_g_prime(const Transform& tr, double z) {
  const double th = tr.theta;
  switch (tr.family) {
    case TransformFamily::Identity: return 0.0;
    case TransformFamily::Pareto: return std::log(th) + z;
    case TransformFamily::Weibull:
      return -std::log(th) + (1.0 / th - 1.0) * std::log(z);
    case TransformFamily::SemiCompositeWeibullTail: {
      const double y0 = *tr.threshold;
      if (z <= y0) return 0.0;
      return -std::log(th) + (1.0 / th - 1.0) * std::log(z - y0);
    }
    case TransformFamily::SemiCompositeParetoTail: {
      const double y0 = *tr.threshold;
      if (z <= y0) return 0.0;
      return std::log(th) + (z - y0);
    }
  }
  return 0.0;
}

bool pareto_tail(TransformFamily f) {
  return f == TransformFamily::Pareto ||
         f == TransformFamily::SemiCompositeParetoTail;
}

}  // namespace

PhaseDistribution::PhaseDistribution(RowVector pi, SubIntensityMatrix T)
    : pi_(checked_pi(std::move(pi), T.order())), T_(std::move(T)) {}

double ph_survival(const PhaseDistribution& d, double z) {
  if (z <= 0.0) return 1.0;
  const double s = (d.pi() * expm(d.T().matrix(), z)).sum();
  return std::clamp(s, 0.0, 1.0);
}

double iph_density(const IphDistribution& d, double y) {
  if (!(y >= 0.0)) throw InvalidArgument("iph_density: y must be nonnegative");
  const double lam = lambda(d.transform, y);
  const double z = g_inverse(d.transform, y);
  const double base =
      d.base.pi() * expm(d.base.T().matrix(), z) * d.base.T().exit_rates();
  if (std::isinf(lam)) return base > 0.0 ? lam : 0.0;
  return std::max(0.0, lam * base);
}

double iph_survival(const IphDistribution& d, double y) {
  if (!(y >= 0.0)) throw InvalidArgument("iph_survival: y must be nonnegative");
  if (y == 0.0) return 1.0;
  return ph_survival(d.base, g_inverse(d.transform, y));
}

double iph_quantile(const IphDistribution& d, double q) {
  if (!(q > 0.0 && q < 1.0))
    throw InvalidArgument("iph_quantile: q must lie in (0, 1)");
  const double target = 1.0 - q;
  double lo = 0.0;
  double hi = ph_mean(d.base);
  while (ph_survival(d.base, hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12)
      throw NumericalError("iph_quantile: bracket expansion exceeded 1e12");
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double s = ph_survival(d.base, mid);
    if (std::abs(s - target) <= 1e-13) break;
    if (s > target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  return g_forward(d.transform, mid);
}

double ph_mean(const PhaseDistribution& d) {
  const Matrix negT = -d.T().matrix();
  Eigen::FullPivLU<Matrix> lu(negT);
  if (!lu.isInvertible()) throw NumericalError("ph_mean: T is singular");
  const Vector ones = Vector::Ones(d.order());
  return d.pi().dot(lu.solve(ones));
}

double weibull_fractional_moment(const PhaseDistribution& d, double theta,
                                 double zeta) {
  if (!(theta > 0.0) || !(zeta > 0.0))
    throw InvalidArgument("weibull_fractional_moment: theta, zeta must be > 0");
  const double s = zeta / theta;
  const Matrix P = fractional_power(-d.T().matrix(), -s);
  const Vector ones = Vector::Ones(d.order());
  return std::tgamma(1.0 + s) * d.pi().dot(P * ones);
}

double iph_mean(const IphDistribution& d) {
  const Transform& tr = d.transform;
  switch (tr.family) {
    case TransformFamily::Identity: return ph_mean(d.base);
    case TransformFamily::Weibull:
      return weibull_fractional_moment(d.base, tr.theta, 1.0);
    default: break;
  }
  if (pareto_tail(tr.family)) {
    const auto rep = tail_report(d.base.pi(), d.base.T(), tr, 0.0);
    if (rep.eta <= 1.0)
      throw InfiniteMean("mean is infinite: Pareto-type tail with eta = " +
                         std::to_string(rep.eta) + " <= 1");
  }

  // E[Y] = int_0^inf g'(z) S_Z(z) dz, split at the semi-composite kink.
  auto integrand = [&](double z) {
    const double s = ph_survival(d.base, z);
    if (s <= 0.0) return 0.0;
    return std::exp(log_g_prime(tr, z) + std::log(s));
  };
  const double split = kink(tr).value_or(0.0);
  double body = 0.0;
  if (split > 0.0) {
    // Body of a semi-composite model: g' = 1, so the integral is exact.
    const Vector ones = Vector::Ones(d.base.order());
    body = d.base.pi().dot(expm_cumulative(d.base.T(), 0.0, split) * ones);
  }
  boost::math::quadrature::exp_sinh<double> tail_rule;
  double err = 0.0;
  const double tail = tail_rule.integrate(
      [&](double u) { return integrand(split + u); }, 1e-12, &err);
  const double total = body + tail;
  if (!std::isfinite(total) || total <= 0.0)
    throw NumericalError("iph_mean: quadrature failed");
  return total;
}

TailReport tail_report(const RowVector& pi, const SubIntensityMatrix& T,
                       const Transform& transform, double zero_tolerance) {
  const int p = T.order();
  if (pi.size() != p)
    throw InvalidArgument("tail_report: dimension mismatch");
  std::vector<char> seen(static_cast<std::size_t>(p), 0);
  std::deque<int> queue;
  for (int k = 0; k < p; ++k)
    if (pi(k) > zero_tolerance) {
      seen[k] = 1;
      queue.push_back(k);
    }
  if (queue.empty()) {
    Eigen::Index k;
    pi.maxCoeff(&k);
    seen[k] = 1;
    queue.push_back(static_cast<int>(k));
  }
  while (!queue.empty()) {
    const int k = queue.front();
    queue.pop_front();
    for (int l = 0; l < p; ++l)
      if (l != k && !seen[l] && T(k, l) > 0.0) {
        seen[l] = 1;
        queue.push_back(l);
      }
  }
  TailReport out;
  for (int k = 0; k < p; ++k)
    if (seen[k]) out.accessible_states.push_back(k);
  const int m = static_cast<int>(out.accessible_states.size());
  Matrix sub(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      sub(i, j) = T(out.accessible_states[i], out.accessible_states[j]);
  const auto spec = dominant_eigen(SubIntensityMatrix(sub));
  out.eta = spec.eta;
  out.block_size = spec.block_size;
  if (pareto_tail(transform.family)) out.tail_index = 1.0 / spec.eta;
  return out;
}

}  // namespace phmoe
