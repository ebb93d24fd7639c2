#pragma once

// Dense matrix kernels: matrix exponentials, exponential integrals,
// fractional powers and dominant-eigenvalue analysis of sub-intensity
// matrices. Everything here is a pure function of its arguments.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace phmoe {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Sub-intensity matrix T of a transient Markov jump process, together with
/// its exit-rate vector t = -T*1.
///
/// Construction validates: strictly negative diagonal, nonnegative
/// off-diagonal, row sums <= 0 (up to rounding), and that absorption is
/// reachable from every state, which is equivalent to T being invertible.
class SubIntensityMatrix {
 public:
  explicit SubIntensityMatrix(Matrix T);

  int order() const { return static_cast<int>(T_.rows()); }
  const Matrix& matrix() const { return T_; }
  const Vector& exit_rates() const { return exit_; }
  double operator()(int k, int l) const { return T_(k, l); }

  /// Returns a list of violated invariants; empty when T is valid.
  static std::vector<std::string> violations(const Matrix& T);

 private:
  Matrix T_;
  Vector exit_;
};

struct SpectralSummary {
  double eta = 0.0;       // minus the largest real eigenvalue
  int block_size = 1;     // estimate of the Jordan block size at -eta
  double multiplicity_tolerance = 0.0;
};

/// exp(scale * A) by scaling and squaring with Pade approximants of degree
/// 3..13 (Higham 2005).
Matrix expm(const Matrix& A, double scale = 1.0);

struct ExpIntegral {
  Matrix exp_tz;    // exp(T z)
  Matrix integral;  // int_0^z exp(T (z-u)) c pi exp(T u) du
};

/// Van Loan block exponential of [[T, c*pi], [0, T]] * z. The top-left block
/// is exp(Tz) and the top-right block is the convolution integral.
ExpIntegral expm_rank_one_integral(const Matrix& T, const Vector& c,
                                   const RowVector& pi, double z);
ExpIntegral expm_rank_one_integral(const SubIntensityMatrix& T,
                                   const Vector& c, const RowVector& pi,
                                   double z);

/// int_a^b exp(T u) du for 0 <= a <= b; b may be +infinity.
Matrix expm_cumulative(const SubIntensityMatrix& T, double a, double b);

/// A^s = exp(s log A) with the principal logarithm. Requires the spectrum of
/// A to avoid the closed negative real axis.
Matrix fractional_power(const Matrix& A, double s);

/// Dominant (largest real part) eigenvalue of T and the number of eigenvalues
/// clustered within 1e-6 * ||T||_1 of it. The cluster count is an estimate of
/// the Jordan block size; exact Jordan structure is not computable in floating
/// point.
SpectralSummary dominant_eigen(const SubIntensityMatrix& T);

}  // namespace phmoe
