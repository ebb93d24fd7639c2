#include "phmoe/emfit.hpp"

#include "multinomial.hpp"
#include "phmoe/error.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace phmoe {

namespace detail {

AggregatedDesign aggregate(const Matrix& B, const std::vector<DesignRow>& designs,
                           const Vector& weights) {
  const Eigen::Index n = B.rows();
  if (static_cast<std::size_t>(n) != designs.size() || weights.size() != n)
    throw InvalidArgument("rstep: B, designs and weights disagree in length");
  if (n == 0) throw InvalidArgument("rstep: no observations");
  const Eigen::Index d = designs.front().size();
  std::map<std::vector<double>, Eigen::Index> slot;
  std::vector<Eigen::Index> group(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector& x = designs[i].values();
    if (x.size() != d) throw InvalidArgument("rstep: ragged design rows");
    auto key = std::vector<double>(x.data(), x.data() + d);
    const auto [it, inserted] =
        slot.emplace(std::move(key), static_cast<Eigen::Index>(slot.size()));
    group[i] = it->second;
  }
  AggregatedDesign a;
  const Eigen::Index G = static_cast<Eigen::Index>(slot.size());
  a.X.resize(G, d);
  a.B = Matrix::Zero(G, B.cols());
  a.mass = Vector::Zero(G);
  for (const auto& [key, g] : slot)
    a.X.row(g) = Eigen::Map<const RowVector>(key.data(), d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index g = group[i];
    a.B.row(g) += weights(i) * B.row(i);
    a.mass(g) += weights(i) * B.row(i).sum();
  }
  return a;
}

namespace {

Matrix probabilities(const AggregatedDesign& a, const Matrix& alpha) {
  Matrix eta = a.X * alpha.transpose();  // G x p
  for (Eigen::Index g = 0; g < eta.rows(); ++g) {
    const double m = eta.row(g).maxCoeff();
    eta.row(g) = (eta.row(g).array() - m).exp().matrix();
    eta.row(g) /= eta.row(g).sum();
  }
  return eta;
}

double penalty(const Matrix& alpha) {
  // Intercept column excluded.
  return alpha.rightCols(alpha.cols() - 1).squaredNorm();
}

}  // namespace

double objective(const AggregatedDesign& a, const Matrix& alpha, double ridge) {
  double f = 0.0;
  for (Eigen::Index g = 0; g < a.X.rows(); ++g) {
    const Vector eta = alpha * a.X.row(g).transpose();
    const double m = eta.maxCoeff();
    const double lse = m + std::log((eta.array() - m).exp().sum());
    for (Eigen::Index k = 0; k < alpha.rows(); ++k)
      if (a.B(g, k) != 0.0) f += a.B(g, k) * (eta(k) - lse);
  }
  return f - 0.5 * ridge * penalty(alpha);
}

Vector gradient(const AggregatedDesign& a, const Matrix& alpha, double ridge) {
  const Eigen::Index p = alpha.rows();
  const Eigen::Index d = alpha.cols();
  const Matrix P = probabilities(a, alpha);
  Vector grad = Vector::Zero((p - 1) * d);
  for (Eigen::Index g = 0; g < a.X.rows(); ++g)
    for (Eigen::Index k = 1; k < p; ++k)
      grad.segment((k - 1) * d, d) +=
          (a.B(g, k) - a.mass(g) * P(g, k)) * a.X.row(g).transpose();
  if (ridge > 0.0)
    for (Eigen::Index k = 1; k < p; ++k)
      for (Eigen::Index j = 1; j < d; ++j)
        grad((k - 1) * d + j) -= ridge * alpha(k, j);
  return grad;
}

Matrix information(const AggregatedDesign& a, const Matrix& alpha,
                   double ridge) {
  const Eigen::Index p = alpha.rows();
  const Eigen::Index d = alpha.cols();
  const Eigen::Index q = (p - 1) * d;
  const Matrix P = probabilities(a, alpha);
  Matrix info = Matrix::Zero(q, q);
  for (Eigen::Index g = 0; g < a.X.rows(); ++g) {
    const Matrix xx = a.X.row(g).transpose() * a.X.row(g);
    for (Eigen::Index k = 1; k < p; ++k)
      for (Eigen::Index l = 1; l < p; ++l) {
        const double c =
            a.mass(g) * (P(g, k) * ((k == l) ? 1.0 : 0.0) - P(g, k) * P(g, l));
        if (c != 0.0) info.block((k - 1) * d, (l - 1) * d, d, d) += c * xx;
      }
  }
  if (ridge > 0.0)
    for (Eigen::Index k = 1; k < p; ++k)
      for (Eigen::Index j = 1; j < d; ++j)
        info((k - 1) * d + j, (k - 1) * d + j) += ridge;
  return info;
}

}  // namespace detail

namespace {

Matrix unflatten(const Matrix& base, const Vector& free) {
  Matrix alpha = base;
  const Eigen::Index d = base.cols();
  for (Eigen::Index k = 1; k < base.rows(); ++k)
    alpha.row(k) = free.segment((k - 1) * d, d).transpose();
  return alpha;
}

Vector flatten(const Matrix& alpha) {
  const Eigen::Index d = alpha.cols();
  Vector v((alpha.rows() - 1) * d);
  for (Eigen::Index k = 1; k < alpha.rows(); ++k)
    v.segment((k - 1) * d, d) = alpha.row(k).transpose();
  return v;
}

// Gradient with components zeroed where the cap is active and the gradient
// points outward (KKT conditions of the box-constrained problem).
Vector projected(const Vector& grad, const Vector& x, double cap) {
  Vector g = grad;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) >= cap && g(i) > 0.0) g(i) = 0.0;
    if (x(i) <= -cap && g(i) < 0.0) g(i) = 0.0;
  }
  return g;
}

}  // namespace

double rstep_objective(const Matrix& B, const std::vector<DesignRow>& designs,
                       const Vector& weights, const GatingCoefficients& alpha,
                       double ridge) {
  return detail::objective(detail::aggregate(B, designs, weights),
                           alpha.alpha(), ridge);
}

Vector rstep_gradient(const Matrix& B, const std::vector<DesignRow>& designs,
                      const Vector& weights, const GatingCoefficients& alpha,
                      double ridge) {
  return detail::gradient(detail::aggregate(B, designs, weights),
                          alpha.alpha(), ridge);
}

RStepResult rstep(const Matrix& B, const std::vector<DesignRow>& designs,
                  const Vector& weights, const GatingCoefficients& start,
                  const RStepConfig& config) {
  if (B.cols() != start.states())
    throw InvalidArgument("rstep: B columns must equal the number of states");
  const auto agg = detail::aggregate(B, designs, weights);
  if (agg.X.cols() != start.width())
    throw InvalidArgument("rstep: design width does not match alpha");
  const double cap = config.coefficient_cap;
  const double ridge = config.ridge;

  RStepResult res{start, detail::objective(agg, start.alpha(), ridge), 0.0, 0,
                  false, false};
  if (start.states() == 1) return res;

  Matrix alpha = start.alpha();
  Vector x = flatten(alpha).cwiseMax(-cap).cwiseMin(cap);
  alpha = unflatten(alpha, x);
  double f = detail::objective(agg, alpha, ridge);
  // Clamping the start can only move a capped start inward; keep whichever
  // is better so the ascent contract holds against the incoming alpha.
  if (f < res.objective) {
    alpha = start.alpha();
    x = flatten(alpha);
    f = res.objective;
  }
  const double tol = std::max(config.gradient_tolerance,
                              1e-15 * std::max(1.0, agg.mass.sum()));

  Vector grad = projected(detail::gradient(agg, alpha, ridge), x, cap);
  // Newton direction on the coordinates not pinned at the cap, with the
  // gradient restricted to the same coordinates.
  auto newton = [&](Vector& dir, Vector& g, Vector& step) -> bool {
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (!((x(i) >= cap && grad(i) >= 0.0) || (x(i) <= -cap && grad(i) <= 0.0)))
        active.push_back(i);
    if (active.empty()) return false;
    const Matrix info_full = detail::information(agg, alpha, ridge);
    const Eigen::Index m = static_cast<Eigen::Index>(active.size());
    Matrix H(m, m);
    g.resize(m);
    step.resize(0);
    for (Eigen::Index i = 0; i < m; ++i) {
      g(i) = grad(active[i]);
      for (Eigen::Index j = 0; j < m; ++j) H(i, j) = info_full(active[i], active[j]);
    }
    double damping = 0.0;
    const double diag_scale = std::max(1e-300, H.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 20; ++attempt) {
      Eigen::LDLT<Matrix> ldlt(H + damping * Matrix::Identity(m, m));
      if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
          (ldlt.vectorD().array() > 1e-14 * diag_scale).all()) {
        step = ldlt.solve(g);
        if (step.allFinite()) break;
      }
      damping = damping == 0.0 ? 1e-10 * diag_scale : damping * 10.0;
      step.resize(0);
    }
    if (step.size() == 0) step = g / diag_scale;  // gradient fallback
    dir = Vector::Zero(x.size());
    for (Eigen::Index i = 0; i < m; ++i) dir(active[i]) = step(i);
    return true;
  };

  int it = 0;
  for (; it < config.max_iterations; ++it) {
    Vector dir, g, step;
    if (grad.lpNorm<Eigen::Infinity>() <= tol) {
      // Under separation the gradient vanishes only asymptotically while the
      // Newton step stays of order one. Follow that ray out to the cap.
      if (newton(dir, g, step) && dir.lpNorm<Eigen::Infinity>() > 1.0) {
        double reach = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < x.size(); ++i)
          if (dir(i) != 0.0)
            reach = std::min(reach, (cap - std::copysign(1.0, dir(i)) * x(i)) / std::abs(dir(i)));
        const Vector trial = (x + reach * dir).cwiseMax(-cap).cwiseMin(cap);
        const Matrix a_trial = unflatten(alpha, trial);
        const double f_trial = detail::objective(agg, a_trial, ridge);
        if (f_trial >= f) {
          x = trial;
          alpha = a_trial;
          f = f_trial;
          grad = projected(detail::gradient(agg, alpha, ridge), x, cap);
        }
      }
      break;
    }
    if (!newton(dir, g, step)) break;

    // Once the predicted gain is below the rounding noise of f, objective
    // comparisons are meaningless; the full step is then judged by the
    // gradient it leaves behind.
    const bool noise_regime =
        0.5 * g.dot(step) <= 1e-13 * std::max(1.0, std::abs(f));
    double s = 1.0;
    bool accepted = false;
    for (int h = 0; h <= config.max_halvings; ++h, s *= 0.5) {
      const Vector trial = (x + s * dir).cwiseMax(-cap).cwiseMin(cap);
      const Matrix a_trial = unflatten(alpha, trial);
      const double f_trial = detail::objective(agg, a_trial, ridge);
      if (h == 0 && noise_regime && std::isfinite(f_trial)) {
        const Vector g_trial =
            projected(detail::gradient(agg, a_trial, ridge), trial, cap);
        if (g_trial.lpNorm<Eigen::Infinity>() < grad.lpNorm<Eigen::Infinity>()) {
          x = trial;
          alpha = a_trial;
          f = f_trial;
          accepted = true;
          break;
        }
      }
      if (f_trial > f) {
        x = trial;
        alpha = a_trial;
        f = f_trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No ascent along the Newton direction: either at the optimum to
      // machine precision or the line search failed.
      if (grad.lpNorm<Eigen::Infinity>() > 1e-6 * std::max(1.0, std::abs(f)))
        res.diverged = true;
      break;
    }
    grad = projected(detail::gradient(agg, alpha, ridge), x, cap);
  }

  res.alpha = GatingCoefficients(alpha);
  res.objective = f;
  res.gradient_norm = grad.lpNorm<Eigen::Infinity>();
  res.iterations = it;
  res.separation = (x.array().abs() >= cap).any();
  return res;
}

}  // namespace phmoe
