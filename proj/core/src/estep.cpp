#include "phmoe/emfit.hpp"

#include "phmoe/error.hpp"
#include "phmoe/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace phmoe {

Response Response::exact(double y) {
  if (!(y > 0.0) || !std::isfinite(y))
    throw InvalidArgument("exact response must be finite and positive");
  return Response(true, y, y);
}

Response Response::interval(double a, double b) {
  if (!(a >= 0.0) || !std::isfinite(a))
    throw InvalidArgument("interval lower bound must be finite and >= 0");
  if (std::isnan(b) || !(a < b))
    throw InvalidArgument("interval requires lower < upper");
  return Response(false, a, b);
}

namespace {

constexpr double kDensityFloor = 1e-300;

Matrix block_generator(const Matrix& T, const Vector& c, const RowVector& pi) {
  const Eigen::Index p = T.rows();
  Matrix block = Matrix::Zero(2 * p, 2 * p);
  block.topLeftCorner(p, p) = T;
  block.topRightCorner(p, p) = c * pi;
  block.bottomRightCorner(p, p) = T;
  return block;
}

// Exact-observation statistics from E = exp(Tz) and J = int exp(T(z-u)) t pi
// exp(Tu) du.
EStepContribution exact_from_blocks(const RowVector& pi, const Matrix& T,
                                    const Vector& t, const Matrix& E,
                                    const Matrix& J) {
  const Eigen::Index p = T.rows();
  const Vector a = E * t;
  const double denom = pi.dot(a);
  if (!(denom > kDensityFloor) || !std::isfinite(denom))
    throw DegenerateObservation(0, "density underflow in E-step");
  EStepContribution c;
  c.start = (pi.array() * a.transpose().array()).matrix() / denom;
  const RowVector piE = pi * E;
  c.exits = (t.array() * piE.transpose().array()).matrix() / denom;
  c.sojourn = J.diagonal() / denom;
  c.jumps = Matrix::Zero(p, p);
  for (Eigen::Index k = 0; k < p; ++k)
    for (Eigen::Index l = 0; l < p; ++l)
      if (l != k && T(k, l) > 0.0) c.jumps(k, l) = T(k, l) * J(l, k) / denom;
  c.log_term = std::log(denom);
  return c;
}

}  // namespace

EStepContribution estep_exact(const RowVector& pi, const SubIntensityMatrix& T,
                              double z) {
  if (!(z > 0.0) || !std::isfinite(z))
    throw InvalidArgument("estep_exact: z must be finite and positive");
  const auto blocks = expm_rank_one_integral(T, T.exit_rates(), pi, z);
  return exact_from_blocks(pi, T.matrix(), T.exit_rates(), blocks.exp_tz,
                           blocks.integral);
}

EStepContribution estep_censored(const RowVector& pi,
                                 const SubIntensityMatrix& T, double a,
                                 double b) {
  if (!(a >= 0.0) || !std::isfinite(a) || std::isnan(b) || !(a < b))
    throw InvalidArgument("estep_censored: requires 0 <= a < b");
  const Matrix& M = T.matrix();
  const Vector& t = T.exit_rates();
  const Eigen::Index p = T.order();
  const Vector ones = Vector::Ones(p);

  // Convolution kernels use the survival vector 1, not the exit vector t:
  // E[V_k; Z in (a,b]] = int P(J_u = k) P_k(Z' in (a-u, b-u]) du.
  const auto at_a = expm_rank_one_integral(M, ones, pi, a);
  const Vector Sa = at_a.exp_tz * ones;
  Vector Sb = Vector::Zero(p);
  Matrix Jb = Matrix::Zero(p, p);
  if (std::isfinite(b)) {
    const auto at_b = expm_rank_one_integral(M, ones, pi, b);
    Sb = at_b.exp_tz * ones;
    Jb = at_b.integral;
  }
  const double denom = pi.dot(Sa - Sb);
  if (!(denom > kDensityFloor) || !std::isfinite(denom))
    throw DegenerateObservation(0, "interval has zero probability");
  const RowVector occupancy = pi * expm_cumulative(T, a, b);  // int pi e^{Tu}
  const Matrix& Ja = at_a.integral;

  EStepContribution c;
  c.start = (pi.array() * (Sa - Sb).transpose().array()).matrix() / denom;
  c.sojourn.resize(p);
  c.exits.resize(p);
  c.jumps = Matrix::Zero(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    c.sojourn(k) = std::max(0.0, occupancy(k) - Jb(k, k) + Ja(k, k)) / denom;
    c.exits(k) = t(k) * occupancy(k) / denom;
    for (Eigen::Index l = 0; l < p; ++l)
      if (l != k && M(k, l) > 0.0)
        c.jumps(k, l) =
            M(k, l) * std::max(0.0, occupancy(k) - Jb(l, k) + Ja(l, k)) / denom;
  }
  c.log_term = std::log(denom);
  return c;
}

EStepBatch estep_batch(const PhMoeModel& model,
                       const std::vector<Observation>& data) {
  const int p = model.states();
  const std::size_t n = data.size();
  const Matrix& M = model.T.matrix();
  const Vector& t = model.T.exit_rates();
  const Transform& tr = model.transform;

  // Group exact observations by design row; censored ones stand alone.
  std::map<std::vector<double>, std::vector<std::size_t>> groups;
  std::vector<std::vector<std::size_t>> units;
  std::vector<double> z(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = data[i].response;
    if (r.is_exact()) {
      z[i] = g_inverse(tr, r.value());
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

  std::vector<EStepContribution> contrib(n);
  parallel_for(units.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      const auto& idx = units[u];
      const RowVector pi = softmax_pi(data[idx.front()].design, model.gating);
      const auto& first = data[idx.front()].response;
      if (!first.is_exact()) {
        const std::size_t i = idx.front();
        try {
          const double lo = g_inverse(tr, first.lower());
          const double hi = std::isinf(first.upper())
                                ? first.upper()
                                : g_inverse(tr, first.upper());
          contrib[i] = estep_censored(pi, model.T, lo, hi);
        } catch (const DegenerateObservation& e) {
          throw DegenerateObservation(i, "interval has zero probability");
        }
        continue;
      }
      const Matrix gen = block_generator(M, t, pi);
      Matrix E = Matrix::Identity(2 * p, 2 * p);
      double z_prev = 0.0;
      for (const std::size_t i : idx) {
        if (z[i] > z_prev) {
          E = expm(gen, z[i] - z_prev) * E;
          z_prev = z[i];
        }
        try {
          contrib[i] = exact_from_blocks(pi, M, t, E.topLeftCorner(p, p),
                                         E.topRightCorner(p, p));
        } catch (const DegenerateObservation&) {
          throw DegenerateObservation(i, "density underflow in E-step");
        }
      }
    }
  });

  EStepBatch out;
  auto& s = out.stats;
  s.start.resize(static_cast<Eigen::Index>(n), p);
  s.sojourn = Vector::Zero(p);
  s.jumps = Matrix::Zero(p, p);
  s.exits = Vector::Zero(p);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = data[i].weight;
    const auto& c = contrib[i];
    s.start.row(static_cast<Eigen::Index>(i)) = c.start;
    s.sojourn += w * c.sojourn;
    s.jumps += w * c.jumps;
    s.exits += w * c.exits;
    double term = c.log_term;
    if (data[i].response.is_exact())
      term += std::log(lambda(tr, data[i].response.value()));
    out.loglik += w * term;
  }
  return out;
}

Matrix posterior_start_weights(const PhMoeModel& model,
                               const std::vector<Observation>& data) {
  return estep_batch(model, data).stats.start;
}

}  // namespace phmoe
