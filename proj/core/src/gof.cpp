#include "phmoe/gof.hpp"

#include "phmoe/error.hpp"
#include "phmoe/phcore.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace phmoe {

ResidualSample residuals(const PhMoeModel& model,
                         const std::vector<Observation>& data) {
  ResidualSample out;
  for (const auto& o : data) {
    const Response& r = o.response;
    if (!r.is_exact() && !r.is_right_censored()) {
      ++out.excluded_intervals;
      continue;
    }
    const double y = r.is_exact() ? r.value() : r.lower();
    const double s = iph_survival(model.conditional(o.design), y);
    out.r.push_back(s > 0.0 ? -std::log(s)
                            : std::numeric_limits<double>::infinity());
    out.delta.push_back(r.is_exact() ? 1 : 0);
  }
  return out;
}

SurvivalCurve kaplan_meier(const ResidualSample& sample, double level) {
  const std::size_t n = sample.r.size();
  if (n == 0 || sample.delta.size() != n)
    throw InvalidArgument("kaplan_meier: empty or inconsistent sample");
  if (!(level > 0.0 && level < 1.0))
    throw InvalidArgument("kaplan_meier: level must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return sample.r[a] < sample.r[b]; });

  const double q = boost::math::quantile(boost::math::normal(),
                                         0.5 + 0.5 * level);
  SurvivalCurve c;
  c.level = level;
  double s = 1.0, greenwood = 0.0;
  std::size_t at_risk = n;
  for (std::size_t i = 0; i < n;) {
    const double t = sample.r[order[i]];
    std::size_t events = 0, total = 0;
    for (; i < n && sample.r[order[i]] == t; ++i, ++total)
      events += sample.delta[order[i]] ? 1 : 0;
    if (events > 0) {
      const double ni = static_cast<double>(at_risk);
      const double di = static_cast<double>(events);
      s *= 1.0 - di / ni;
      if (at_risk > events) greenwood += di / (ni * (ni - di));
    }
    at_risk -= total;
    const double var = s > 0.0 ? s * s * greenwood : 0.0;
    const double half = q * std::sqrt(var);
    c.times.push_back(t);
    c.survival.push_back(s);
    c.variance.push_back(var);
    c.lower.push_back(std::clamp(s - half, 0.0, 1.0));
    c.upper.push_back(std::clamp(s + half, 0.0, 1.0));
  }
  return c;
}

std::vector<std::pair<double, double>> pp_points(
    const PhMoeModel& model, const std::vector<Observation>& data) {
  std::vector<double> fitted;
  for (const auto& o : data)
    if (o.response.is_exact())
      fitted.push_back(1.0 - iph_survival(model.conditional(o.design),
                                          o.response.value()));
  std::sort(fitted.begin(), fitted.end());
  std::vector<std::pair<double, double>> out;
  const double denom = static_cast<double>(fitted.size() + 1);
  for (std::size_t i = 0; i < fitted.size(); ++i)
    out.emplace_back(static_cast<double>(i + 1) / denom, fitted[i]);
  return out;
}

std::vector<std::pair<int, double>> hill_estimator(std::vector<double> sample,
                                                   int k_min, int k_max) {
  const auto n = static_cast<long>(sample.size());
  if (k_min < 1 || k_max < k_min || n <= k_max + 1)
    throw InvalidArgument("hill_estimator: need 1 <= k_min <= k_max < n - 1");
  for (const double v : sample)
    if (!(v > 0.0) || !std::isfinite(v))
      throw InvalidArgument("hill_estimator: values must be positive and finite");
  std::sort(sample.begin(), sample.end(), std::greater<>());
  std::vector<std::pair<int, double>> out;
  double sum_log = 0.0;  // sum of log X_(n-i+1), i = 1..k
  for (int k = 1; k <= k_max; ++k) {
    sum_log += std::log(sample[k - 1]);
    if (k < k_min) continue;
    const double h = sum_log / k - std::log(sample[k]);
    out.emplace_back(k, h);
  }
  return out;
}

double ks_statistic(std::vector<double> sample,
                    const std::function<double(double)>& cdf) {
  if (sample.empty()) throw InvalidArgument("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f,
                  f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_statistic_uniform(std::vector<double> u) {
  return ks_statistic(std::move(u),
                      [](double x) { return std::clamp(x, 0.0, 1.0); });
}

double ks_critical_value(std::size_t n, double level) {
  if (n == 0 || !(level > 0.0 && level < 1.0))
    throw InvalidArgument("ks_critical_value: bad arguments");
  return std::sqrt(-0.5 * std::log(0.5 * level)) /
         std::sqrt(static_cast<double>(n));
}

}  // namespace phmoe
