#pragma once

// Goodness-of-fit diagnostics: Cox-Snell-type residuals, Kaplan-Meier with
// Greenwood bands, PP-plot points, the Hill estimator and Kolmogorov-Smirnov
// helpers.

#include "phmoe/emfit.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace phmoe {

struct ResidualSample {
  std::vector<double> r;
  std::vector<int> delta;         // 1 = event, 0 = right-censored
  std::size_t excluded_intervals = 0;
};

/// r_i = -log S(y_i | x_i). Right-censored rows use the lower bound; finite
/// intervals are skipped and counted.
ResidualSample residuals(const PhMoeModel& model,
                         const std::vector<Observation>& data);

struct SurvivalCurve {
  std::vector<double> times;      // distinct sorted values
  std::vector<double> survival;   // S(t) just after each time
  std::vector<double> variance;   // Greenwood
  std::vector<double> lower;
  std::vector<double> upper;
  double level = 0.95;
};

/// Product-limit estimator with tied events grouped.
SurvivalCurve kaplan_meier(const ResidualSample& sample, double level = 0.95);

/// (empirical, fitted) pairs over exact rows, sorted by fitted value;
/// empirical is i / (N + 1).
std::vector<std::pair<double, double>> pp_points(
    const PhMoeModel& model, const std::vector<Observation>& data);

/// (k, H_k) for k in [k_min, k_max].
std::vector<std::pair<int, double>> hill_estimator(std::vector<double> sample,
                                                   int k_min, int k_max);

/// sup |F_n - F| for a continuous reference CDF.
double ks_statistic(std::vector<double> sample,
                    const std::function<double(double)>& cdf);
double ks_statistic_uniform(std::vector<double> u);
/// Asymptotic critical value sqrt(-log(level/2)/2) / sqrt(n).
double ks_critical_value(std::size_t n, double level);

}  // namespace phmoe
