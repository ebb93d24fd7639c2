#include "phmoe/emfit.hpp"

#include "phmoe/error.hpp"
#include "phmoe/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace phmoe {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Maximizes f by Nelder-Mead from x0. The returned point is the best vertex
// seen, so f(result) >= f(x0).
struct NelderMeadResult {
  Vector x;
  double value = kNegInf;
};

NelderMeadResult nelder_mead_max(const std::function<double(const Vector&)>& f,
                                 const Vector& x0, double step, int max_evals,
                                 double ftol) {
  const Eigen::Index n = x0.size();
  std::vector<Vector> xs(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> fs(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) xs[i + 1](i) += step;
  int evals = 0;
  for (std::size_t i = 0; i < xs.size(); ++i, ++evals) fs[i] = f(xs[i]);

  std::vector<std::size_t> order(xs.size());
  auto sort_vertices = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fs[a] > fs[b]; });
  };
  while (evals < max_evals) {
    sort_vertices();
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];
    if (std::isfinite(fs[worst]) &&
        std::abs(fs[best] - fs[worst]) <=
            ftol * std::max(1.0, std::abs(fs[best])))
      break;
    Vector centroid = Vector::Zero(n);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += xs[order[i]];
    centroid /= static_cast<double>(n);

    const Vector xr = centroid + (centroid - xs[worst]);
    const double fr = f(xr);
    ++evals;
    if (fr > fs[best]) {
      const Vector xe = centroid + 2.0 * (centroid - xs[worst]);
      const double fe = f(xe);
      ++evals;
      if (fe > fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
      continue;
    }
    if (fr > fs[second]) {
      xs[worst] = xr;
      fs[worst] = fr;
      continue;
    }
    const bool outside = fr > fs[worst];
    const Vector xc = outside ? Vector(centroid + 0.5 * (xr - centroid))
                              : Vector(centroid + 0.5 * (xs[worst] - centroid));
    const double fc = f(xc);
    ++evals;
    if (fc > std::max(fr, fs[worst])) {
      xs[worst] = xc;
      fs[worst] = fc;
      continue;
    }
    for (std::size_t i = 1; i < order.size(); ++i) {
      const std::size_t v = order[i];
      xs[v] = xs[best] + 0.5 * (xs[v] - xs[best]);
      fs[v] = f(xs[v]);
      ++evals;
    }
  }
  sort_vertices();
  return {xs[order.front()], fs[order.front()]};
}

// Representative operational-time value of a response, used for initial
// scaling only.
double representative(const Response& r) {
  if (r.is_exact()) return r.value();
  if (std::isinf(r.upper())) return r.lower() > 0.0 ? r.lower() : 1.0;
  return 0.5 * (r.lower() + r.upper());
}

double weighted_median(std::vector<std::pair<double, double>> vw) {
  std::sort(vw.begin(), vw.end());
  double total = 0.0;
  for (const auto& [v, w] : vw) total += w;
  double acc = 0.0;
  for (const auto& [v, w] : vw) {
    acc += w;
    if (acc >= 0.5 * total) return v;
  }
  return vw.back().first;
}

std::vector<double> threshold_candidates(const std::vector<Observation>& data,
                                         double incoming) {
  std::vector<double> ys;
  for (const auto& o : data)
    if (o.response.is_exact()) ys.push_back(o.response.value());
  if (ys.empty())
    for (const auto& o : data) ys.push_back(representative(o.response));
  std::sort(ys.begin(), ys.end());
  std::vector<double> out{incoming};
  for (const double q : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95}) {
    const auto idx = static_cast<std::size_t>(
        std::floor(q * static_cast<double>(ys.size() - 1)));
    const double c = ys[idx];
    if (c > 0.0 && std::find(out.begin(), out.end(), c) == out.end())
      out.push_back(c);
  }
  return out;
}

}  // namespace

MStepResult mstep(const SufficientStats& stats,
                  const SubIntensityMatrix* previous) {
  const Eigen::Index p = stats.sojourn.size();
  if (stats.jumps.rows() != p || stats.jumps.cols() != p ||
      stats.exits.size() != p)
    throw InvalidArgument("mstep: inconsistent statistic dimensions");
  if (previous && previous->order() != p)
    throw InvalidArgument("mstep: previous T has the wrong order");
  Matrix T = Matrix::Zero(p, p);
  std::vector<int> starved;
  for (Eigen::Index k = 0; k < p; ++k) {
    const double v = stats.sojourn(k);
    bool keep = !(v >= kSojournFloor);
    if (!keep) {
      double total = 0.0;
      for (Eigen::Index l = 0; l < p; ++l) {
        if (l == k) continue;
        T(k, l) = std::max(0.0, stats.jumps(k, l)) / v;
        total += T(k, l);
      }
      const double exit = std::max(0.0, stats.exits(k)) / v;
      T(k, k) = -(total + exit);
      keep = !(T(k, k) < 0.0);
    }
    if (keep) {
      if (!previous)
        throw NumericalError("mstep: state " + std::to_string(k + 1) +
                             " has no expected sojourn");
      T.row(k) = previous->matrix().row(k);
      starved.push_back(static_cast<int>(k));
    }
  }
  return {SubIntensityMatrix(std::move(T)), std::move(starved)};
}

double log_likelihood(const PhMoeModel& model,
                      const std::vector<Observation>& data) {
  if (data.empty()) throw InvalidArgument("log_likelihood: empty dataset");
  const Matrix& M = model.T.matrix();
  const Vector& t = model.T.exit_rates();
  const Vector ones = Vector::Ones(model.states());
  const Transform& tr = model.transform;
  const std::size_t n = data.size();

  std::map<std::vector<double>, std::vector<std::size_t>> groups;
  std::vector<std::vector<std::size_t>> units;
  std::vector<double> z(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (data[i].response.is_exact()) {
      z[i] = g_inverse(tr, data[i].response.value());
      const Vector& x = data[i].design.values();
      groups[std::vector<double>(x.data(), x.data() + x.size())].push_back(i);
    } else {
      units.push_back({i});
    }
  }
  for (auto& [key, idx] : groups) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return z[a] < z[b]; });
    units.push_back(std::move(idx));
  }

  std::vector<double> terms(n, 0.0);
  parallel_for(units.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      const auto& idx = units[u];
      const RowVector pi = softmax_pi(data[idx.front()].design, model.gating);
      const Response& first = data[idx.front()].response;
      if (!first.is_exact()) {
        const double za = g_inverse(tr, first.lower());
        double mass = (pi * expm(M, za)).dot(ones);
        if (std::isfinite(first.upper()))
          mass -= (pi * expm(M, g_inverse(tr, first.upper()))).dot(ones);
        if (!(mass > 0.0) || !std::isfinite(mass))
          throw DegenerateObservation(idx.front(), "interval has zero probability");
        terms[idx.front()] = std::log(mass);
        continue;
      }
      RowVector v = pi;
      double z_prev = 0.0;
      for (const std::size_t i : idx) {
        if (z[i] > z_prev) {
          v = v * expm(M, z[i] - z_prev);
          z_prev = z[i];
        }
        const double dens = v.dot(t);
        const double lam = lambda(tr, data[i].response.value());
        if (!(dens > 0.0) || !std::isfinite(dens) || !(lam > 0.0) ||
            !std::isfinite(lam))
          throw DegenerateObservation(i, "density is zero or not finite");
        terms[i] = std::log(dens) + std::log(lam);
      }
    }
  });
  double ll = 0.0;
  for (std::size_t i = 0; i < n; ++i) ll += data[i].weight * terms[i];
  return ll;
}

ThetaStepResult theta_step(const std::vector<Observation>& data,
                           const PhMoeModel& model) {
  const Transform incoming = model.transform;
  if (incoming.family == TransformFamily::Identity)
    return {incoming, log_likelihood(model, data), false};

  PhMoeModel work = model;
  auto objective_at = [&](double theta, std::optional<double> y0) {
    work.transform.theta = theta;
    work.transform.threshold = y0;
    try {
      const double ll = log_likelihood(work, data);
      return std::isfinite(ll) ? ll : kNegInf;
    } catch (const NumericalError&) {
      return kNegInf;
    } catch (const InvalidArgument&) {
      return kNegInf;
    }
  };

  const double lo = std::log(1e-6), hi = std::log(1e6);
  ThetaStepResult best{incoming, objective_at(incoming.theta, incoming.threshold),
                       false};
  if (!std::isfinite(best.loglik)) best.warning = true;

  std::vector<std::optional<double>> thresholds{incoming.threshold};
  if (is_semi_composite(incoming.family) && !incoming.threshold_fixed) {
    thresholds.clear();
    for (const double c : threshold_candidates(data, *incoming.threshold))
      thresholds.emplace_back(c);
  }
  for (const auto& y0 : thresholds) {
    auto f = [&](const Vector& u) {
      if (u(0) < lo || u(0) > hi) return kNegInf;
      return objective_at(std::exp(u(0)), y0);
    };
    const Vector u0 = Vector::Constant(1, std::log(incoming.theta));
    const auto nm = nelder_mead_max(f, u0, 0.1, 120, 1e-12);
    if (nm.value > best.loglik) {
      best.loglik = nm.value;
      best.transform = incoming;
      best.transform.theta = std::exp(nm.x(0));
      best.transform.threshold = y0;
    }
  }
  return best;
}

int degrees_of_freedom(int p, int d, const Transform& transform) {
  return p * p + (p - 1) * d +
         parameter_count(transform.family, transform.threshold_fixed);
}

Initialization initialize(int p, const CovariateSchema& schema,
                          const std::vector<Observation>& data,
                          TransformFamily family, const FitConfig& config) {
  if (p < 1) throw InvalidArgument("initialize: p must be >= 1");
  if (data.empty()) throw InvalidArgument("initialize: empty dataset");

  std::vector<std::pair<double, double>> reps;
  reps.reserve(data.size());
  for (const auto& o : data) reps.emplace_back(representative(o.response), o.weight);
  const double median = weighted_median(reps);

  Transform tr;
  tr.family = family;
  switch (family) {
    case TransformFamily::Identity: break;
    case TransformFamily::Pareto: tr.theta = config.theta0.value_or(median); break;
    case TransformFamily::Weibull: tr.theta = config.theta0.value_or(1.0); break;
    case TransformFamily::SemiCompositeWeibullTail:
    case TransformFamily::SemiCompositeParetoTail:
      tr.theta = config.theta0.value_or(1.0);
      tr.threshold = config.threshold.value_or(median);
      tr.threshold_fixed = config.threshold_fixed;
      break;
  }
  if (const auto v = validate(tr); !v.empty())
    throw InvalidArgument("initialize: " + v.front());

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  Matrix T = Matrix::Zero(p, p);
  for (int k = 0; k < p; ++k) {
    double row = 0.0;
    for (int l = 0; l < p; ++l) {
      if (l == k) continue;
      const bool allowed = config.init_strategy == InitStrategy::RandomGeneral ||
                           l == k + 1;
      if (allowed) {
        T(k, l) = unif(rng);
        row += T(k, l);
      }
    }
    const double exit = unif(rng);
    T(k, k) = -(row + exit);
  }

  double num = 0.0, den = 0.0;
  for (const auto& o : data) {
    num += o.weight * g_inverse(tr, representative(o.response));
    den += o.weight;
  }
  const double target = num / den;
  if (!(target > 0.0) || !std::isfinite(target))
    throw InvalidArgument("initialize: transformed sample mean must be positive");
  const RowVector uniform = RowVector::Constant(p, 1.0 / p);
  const double m0 = ph_mean(PhaseDistribution(uniform, SubIntensityMatrix(T)));
  T *= m0 / target;

  return {GatingCoefficients::zeros(p, schema.design_width()),
          SubIntensityMatrix(std::move(T)), tr};
}

FitResult fit(const std::vector<Observation>& data,
              const CovariateSchema& schema, TransformFamily family,
              const FitConfig& config) {
  if (data.empty()) throw InvalidArgument("fit: empty dataset");
  if (config.max_iterations < 1 || config.theta_step_every < 1 ||
      !(config.loglik_tolerance > 0.0))
    throw InvalidArgument("fit: invalid configuration");
  const int d = schema.design_width();
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data[i].design.size() != d || !(data[i].weight > 0.0))
      throw InvalidArgument("fit: observation " + std::to_string(i) +
                            " has a bad design row or weight");

  auto init = initialize(config.p, schema, data, family, config);
  PhMoeModel model(schema, init.alpha, init.T, init.transform);

  std::vector<DesignRow> designs;
  designs.reserve(data.size());
  Vector weights(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    designs.push_back(data[i].design);
    weights(static_cast<Eigen::Index>(i)) = data[i].weight;
  }
  RStepConfig rcfg;
  rcfg.max_iterations = config.r_step_max_iterations;
  rcfg.max_halvings = config.r_step_max_newton;
  rcfg.ridge = config.r_step_ridge;

  FitResult res{model, {}, false, 0, degrees_of_freedom(config.p, d, model.transform), {}};
  EStepBatch batch;
  try {
    batch = estep_batch(model, data);
  } catch (const std::exception& e) {
    throw FitError(0, std::nullopt, e.what());
  }
  res.trace.push_back(batch.loglik);

  std::vector<int> starved_run(static_cast<std::size_t>(config.p), 0);
  std::vector<char> starved_warned(static_cast<std::size_t>(config.p), 0);
  bool separation_warned = false, divergence_warned = false;

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    try {
      auto m = mstep(batch.stats, &model.T);
      std::vector<char> starved_now(static_cast<std::size_t>(config.p), 0);
      for (int k : m.starved_states) starved_now[k] = 1;
      for (int k = 0; k < config.p; ++k) {
        starved_run[k] = starved_now[k] ? starved_run[k] + 1 : 0;
        if (starved_run[k] >= 10 && !starved_warned[k]) {
          starved_warned[k] = 1;
          res.warnings.push_back("state " + std::to_string(k + 1) +
                                 " starved for 10 iterations; consider a smaller p");
        }
      }

      auto r = rstep(batch.stats.start, designs, weights, model.gating, rcfg);
      if (r.separation && !separation_warned) {
        separation_warned = true;
        res.warnings.push_back(
            "gating coefficients reached the magnitude cap (separation)");
      }
      if (r.diverged && !divergence_warned) {
        divergence_warned = true;
        res.warnings.push_back("R-step line search exhausted its halvings");
      }

      PhMoeModel next(schema, r.alpha, m.T, model.transform);
      if (family != TransformFamily::Identity &&
          iter % config.theta_step_every == 0) {
        auto th = theta_step(data, next);
        if (th.warning)
          res.warnings.push_back("theta step failed at iteration " +
                                 std::to_string(iter) + "; kept incoming theta");
        next.transform = th.transform;
      }
      batch = estep_batch(next, data);
      model = std::move(next);
    } catch (const FitError&) {
      throw;
    } catch (const std::exception& e) {
      throw FitError(iter, model, e.what());
    }

    const double prev = res.trace.back();
    res.trace.push_back(batch.loglik);
    res.iterations = iter;
    const double gain = (batch.loglik - prev) / std::max(1.0, std::abs(prev));
    if (gain < config.loglik_tolerance) {
      res.converged = true;
      break;
    }
  }
  res.model = model;
  res.dof = degrees_of_freedom(config.p, d, model.transform);
  return res;
}

}  // namespace phmoe
