#include "oracles.hpp"

#include "phmoe/emfit.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace phmoe;

namespace {

struct Problem {
  Matrix B;
  std::vector<DesignRow> x;
  Vector w;
};

Problem random_problem(int n, int p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Problem pr{Matrix(n, p), {}, Vector(n)};
  for (int i = 0; i < n; ++i) {
    Vector v(2);
    v << 1.0, nd(gen);
    pr.x.emplace_back(v);
    pr.B.row(i) = oracle::random_simplex(p, gen);
    pr.w(i) = 1.0 + (i % 4);
  }
  return pr;
}

}  // namespace

TEST(RStep, InterceptOnlyClosedForm) {
  const int n = 50, m = 12;
  Matrix B = Matrix::Zero(n, 2);
  for (int i = 0; i < n; ++i) B(i, i < m ? 1 : 0) = 1.0;
  const auto r = rstep(B, std::vector<DesignRow>(n), Vector::Ones(n),
                       GatingCoefficients::zeros(2, 1));
  EXPECT_NEAR(r.alpha.alpha()(1, 0), std::log(12.0 / 38.0), 1e-10);
  EXPECT_FALSE(r.separation);
}

TEST(RStep, GradientVanishesAndObjectiveRises) {
  const auto pr = random_problem(200, 4, 8);
  const auto start = GatingCoefficients::zeros(4, 2);
  const auto r = rstep(pr.B, pr.x, pr.w, start);
  EXPECT_LT(rstep_gradient(pr.B, pr.x, pr.w, r.alpha).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_GT(r.objective, rstep_objective(pr.B, pr.x, pr.w, start));
  EXPECT_NEAR(r.objective, rstep_objective(pr.B, pr.x, pr.w, r.alpha), 1e-12);
}

TEST(RStep, GradientMatchesFiniteDifferences) {
  const auto pr = random_problem(60, 3, 9);
  Matrix a = Matrix::Zero(3, 2);
  a.row(1) << 0.3, -0.4;
  a.row(2) << -0.1, 0.8;
  const GatingCoefficients alpha(a);
  const Vector g = rstep_gradient(pr.B, pr.x, pr.w, alpha, 0.5);
  int idx = 0;
  for (int k = 1; k < 3; ++k)
    for (int j = 0; j < 2; ++j, ++idx) {
      Matrix up = a, dn = a;
      up(k, j) += 1e-6;
      dn(k, j) -= 1e-6;
      const double fd = (rstep_objective(pr.B, pr.x, pr.w, GatingCoefficients(up), 0.5) -
                         rstep_objective(pr.B, pr.x, pr.w, GatingCoefficients(dn), 0.5)) /
                        2e-6;
      EXPECT_NEAR(g(idx), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST(RStep, AggregationDoesNotChangeTheAnswer) {
  // Duplicating every row with half the weight leaves the optimum unchanged.
  const auto pr = random_problem(80, 3, 10);
  Problem twice{Matrix(160, 3), {}, Vector(160)};
  for (int i = 0; i < 80; ++i) {
    twice.B.row(2 * i) = twice.B.row(2 * i + 1) = pr.B.row(i);
    twice.x.push_back(pr.x[i]);
    twice.x.push_back(pr.x[i]);
    twice.w(2 * i) = twice.w(2 * i + 1) = 0.5 * pr.w(i);
  }
  const auto a = rstep(pr.B, pr.x, pr.w, GatingCoefficients::zeros(3, 2));
  const auto b = rstep(twice.B, twice.x, twice.w, GatingCoefficients::zeros(3, 2));
  EXPECT_TRUE(a.alpha.alpha().isApprox(b.alpha.alpha(), 1e-9));
}

TEST(RStep, SeparationHitsTheCap) {
  // State 2 exactly when x > 0: the slope diverges without a cap.
  const int n = 40;
  Matrix B = Matrix::Zero(n, 2);
  std::vector<DesignRow> x;
  for (int i = 0; i < n; ++i) {
    Vector v(2);
    v << 1.0, (i < n / 2 ? -1.0 : 1.0) * (1 + i % 3);
    x.emplace_back(v);
    B(i, i < n / 2 ? 0 : 1) = 1.0;
  }
  const auto r = rstep(B, x, Vector::Ones(n), GatingCoefficients::zeros(2, 2));
  EXPECT_TRUE(r.separation);
  EXPECT_LE(r.alpha.alpha().cwiseAbs().maxCoeff(), 30.0);
}

TEST(RStep, RidgeShrinksSlopes) {
  const auto pr = random_problem(100, 3, 12);
  RStepConfig cfg;
  const auto free = rstep(pr.B, pr.x, pr.w, GatingCoefficients::zeros(3, 2), cfg);
  cfg.ridge = 50.0;
  const auto ridged = rstep(pr.B, pr.x, pr.w, GatingCoefficients::zeros(3, 2), cfg);
  EXPECT_LT(ridged.alpha.alpha().col(1).norm(), free.alpha.alpha().col(1).norm());
}

TEST(RStep, SingleStateIsNoOp) {
  const auto r = rstep(Matrix::Ones(5, 1), std::vector<DesignRow>(5), Vector::Ones(5),
                       GatingCoefficients::zeros(1, 1));
  EXPECT_EQ(r.iterations, 0);
}

TEST(RStep, DegenerateWeightsReachTheCap) {
  const int n = 30;
  Matrix B = Matrix::Zero(n, 3);
  B.col(0).setOnes();
  const auto r = rstep(B, std::vector<DesignRow>(n), Vector::Ones(n), GatingCoefficients::zeros(3, 1));
  EXPECT_TRUE(r.separation);
  EXPECT_NEAR(r.alpha.alpha()(1, 0), -30.0, 1e-12);
  EXPECT_NEAR(r.alpha.alpha()(2, 0), -30.0, 1e-12);
  EXPECT_GT(r.objective, -1e-11);
}
