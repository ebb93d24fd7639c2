#include "phmoe/matcore.hpp"

#include "phmoe/error.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>

namespace phmoe {

namespace {

bool all_finite(const Matrix& A) { return A.allFinite(); }

double one_norm(const Matrix& A) {
  return A.cwiseAbs().colwise().sum().maxCoeff();
}

// Pade coefficients b_0..b_m for m = 3, 5, 7, 9, 13.
constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0,
                                          420.0,   30.0,    1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0,
                                          277200.0,   25200.0,   1512.0,
                                          56.0,       1.0};
constexpr std::array<double, 10> kPade9 = {
    17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
    2162160.0,     110880.0,     3960.0,       90.0,        1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

// theta_m: largest 1-norm for which the degree-m approximant meets unit
// roundoff without scaling.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

template <std::size_t N>
Matrix pade_low(const Matrix& A, const std::array<double, N>& b) {
  const Eigen::Index n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix A2 = A * A;
  Matrix even = b[0] * I;
  Matrix odd = b[1] * I;
  Matrix power = I;
  for (std::size_t j = 2; j + 1 < N; j += 2) {
    power = power * A2;
    even += b[j] * power;
    odd += b[j + 1] * power;
  }
  const Matrix U = A * odd;
  return (even - U).partialPivLu().solve(even + U);
}

Matrix pade13(const Matrix& A) {
  const auto& b = kPade13;
  const Eigen::Index n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  const Matrix U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) +
                        b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
  const Matrix V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 +
                   b[4] * A4 + b[2] * A2 + b[0] * I;
  return (V - U).partialPivLu().solve(V + U);
}

}  // namespace

SubIntensityMatrix::SubIntensityMatrix(Matrix T) : T_(std::move(T)) {
  const auto problems = violations(T_);
  if (!problems.empty()) {
    std::string msg = "invalid sub-intensity matrix:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw InvalidArgument(msg);
  }
  exit_ = (-T_.rowwise().sum()).cwiseMax(0.0);
}

std::vector<std::string> SubIntensityMatrix::violations(const Matrix& T) {
  std::vector<std::string> out;
  if (T.rows() == 0 || T.rows() != T.cols()) {
    out.emplace_back("matrix must be square with order >= 1");
    return out;
  }
  if (!T.allFinite()) {
    out.emplace_back("entries must be finite");
    return out;
  }
  const Eigen::Index p = T.rows();
  Vector exit(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    if (!(T(k, k) < 0.0))
      out.push_back("diagonal entry " + std::to_string(k + 1) +
                    " must be negative");
    double row = 0.0;
    for (Eigen::Index l = 0; l < p; ++l) {
      row += T(k, l);
      if (l != k && T(k, l) < 0.0)
        out.push_back("off-diagonal entry (" + std::to_string(k + 1) + "," +
                      std::to_string(l + 1) + ") must be nonnegative");
    }
    if (row > 1e-12 * std::abs(T(k, k)))
      out.push_back("row " + std::to_string(k + 1) + " sums above zero");
    exit(k) = -row;
  }
  if (!out.empty()) return out;

  // Absorption must be reachable from every state (equivalently T is
  // invertible). Backward reachability from the states with exit > 0.
  const double exit_floor = 1e-14 * one_norm(T);
  std::vector<char> reaches(static_cast<std::size_t>(p), 0);
  bool changed = true;
  for (Eigen::Index k = 0; k < p; ++k)
    if (exit(k) > exit_floor) reaches[k] = 1;
  while (changed) {
    changed = false;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (reaches[k]) continue;
      for (Eigen::Index l = 0; l < p; ++l) {
        if (l != k && T(k, l) > 0.0 && reaches[l]) {
          reaches[k] = 1;
          changed = true;
          break;
        }
      }
    }
  }
  for (Eigen::Index k = 0; k < p; ++k)
    if (!reaches[k])
      out.push_back("state " + std::to_string(k + 1) +
                    " never reaches absorption (T singular)");
  return out;
}

Matrix expm(const Matrix& A, double scale) {
  if (A.rows() != A.cols()) throw InvalidArgument("expm: matrix not square");
  if (!std::isfinite(scale) || !all_finite(A))
    throw InvalidArgument("expm: non-finite input");
  const Eigen::Index n = A.rows();
  if (n == 1) {
    Matrix r(1, 1);
    r(0, 0) = std::exp(scale * A(0, 0));
    return r;
  }
  const Matrix X = scale * A;
  const double norm = one_norm(X);
  if (norm == 0.0) return Matrix::Identity(n, n);
  if (norm <= kTheta3) return pade_low(X, kPade3);
  if (norm <= kTheta5) return pade_low(X, kPade5);
  if (norm <= kTheta7) return pade_low(X, kPade7);
  if (norm <= kTheta9) return pade_low(X, kPade9);

  int s = 0;
  if (norm > kTheta13)
    s = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
  Matrix R = pade13(X / std::ldexp(1.0, s));
  for (int i = 0; i < s; ++i) R = R * R;
  return R;
}

ExpIntegral expm_rank_one_integral(const Matrix& T, const Vector& c,
                                   const RowVector& pi, double z) {
  if (!(z >= 0.0) || !std::isfinite(z))
    throw InvalidArgument("expm_rank_one_integral: z must be finite and >= 0");
  const Eigen::Index p = T.rows();
  if (T.cols() != p || c.size() != p || pi.size() != p)
    throw InvalidArgument("expm_rank_one_integral: dimension mismatch");
  if (z == 0.0) return {Matrix::Identity(p, p), Matrix::Zero(p, p)};

  Matrix block = Matrix::Zero(2 * p, 2 * p);
  block.topLeftCorner(p, p) = T;
  block.topRightCorner(p, p) = c * pi;
  block.bottomRightCorner(p, p) = T;
  const Matrix E = expm(block, z);
  return {E.topLeftCorner(p, p), E.topRightCorner(p, p)};
}

ExpIntegral expm_rank_one_integral(const SubIntensityMatrix& T,
                                   const Vector& c, const RowVector& pi,
                                   double z) {
  return expm_rank_one_integral(T.matrix(), c, pi, z);
}

Matrix expm_cumulative(const SubIntensityMatrix& T, double a, double b) {
  if (!(a >= 0.0) || !std::isfinite(a))
    throw InvalidArgument("expm_cumulative: a must be finite and >= 0");
  if (std::isnan(b) || a > b)
    throw InvalidArgument("expm_cumulative: requires a <= b");
  const Eigen::Index p = T.order();
  const Matrix& M = T.matrix();
  if (a == b) return Matrix::Zero(p, p);

  if (std::isinf(b)) {
    // int_a^inf exp(Tu) du = -T^{-1} exp(Ta)
    Eigen::FullPivLU<Matrix> lu(M);
    if (!lu.isInvertible())
      throw NumericalError("expm_cumulative: T is numerically singular");
    return -lu.solve(expm(M, a));
  }

  // exp(Ta) * int_0^{b-a} exp(Tu) du, the latter from the block
  // exponential of [[T, I], [0, 0]]; no inverse of T and no cancellation
  // for short intervals.
  Matrix block = Matrix::Zero(2 * p, 2 * p);
  block.topLeftCorner(p, p) = M;
  block.topRightCorner(p, p) = Matrix::Identity(p, p);
  const Matrix E = expm(block, b - a);
  const Matrix head = E.topRightCorner(p, p);
  if (a == 0.0) return head;
  return expm(M, a) * head;
}

Matrix fractional_power(const Matrix& A, double s) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw InvalidArgument("fractional_power: matrix not square");
  if (!A.allFinite() || !std::isfinite(s))
    throw InvalidArgument("fractional_power: non-finite input");
  if (s == 0.0) return Matrix::Identity(A.rows(), A.cols());
  if (s == 1.0) return A;

  Eigen::EigenSolver<Matrix> es(A, false);
  if (es.info() != Eigen::Success)
    throw NumericalError("fractional_power: eigenvalue computation failed");
  const double scale = std::max(1.0, one_norm(A));
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const std::complex<double> ev = es.eigenvalues()(i);
    if (ev.real() <= 0.0 && std::abs(ev.imag()) <= 1e-12 * scale)
      throw NumericalError(
          "fractional_power: spectrum touches the closed negative real axis");
  }
  const Matrix L = A.log();
  if (!L.allFinite())
    throw NumericalError("fractional_power: matrix logarithm failed");
  return expm(L, s);
}

SpectralSummary dominant_eigen(const SubIntensityMatrix& T) {
  const Matrix& M = T.matrix();
  SpectralSummary out;
  out.multiplicity_tolerance = 1e-6 * one_norm(M);
  if (M.rows() == 1) {
    out.eta = -M(0, 0);
    return out;
  }
  Eigen::EigenSolver<Matrix> es(M, false);
  if (es.info() != Eigen::Success)
    throw NumericalError("dominant_eigen: eigenvalue computation failed");
  const auto& ev = es.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < ev.size(); ++i)
    if (ev(i).real() > ev(best).real()) best = i;

  // A defective eigenvalue of multiplicity m splits into a cluster of radius
  // ~eps^{1/m}; the cluster mean is accurate to roundoff.
  int count = 0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i) - ev(best)) <= out.multiplicity_tolerance) {
      ++count;
      sum += ev(i).real();
    }
  }
  out.block_size = count;
  out.eta = -sum / count;
  return out;
}

}  // namespace phmoe
