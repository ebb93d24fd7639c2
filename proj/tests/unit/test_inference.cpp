#include "oracles.hpp"

#include "phmoe/inference.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace phmoe;

TEST(Inference, InterceptOnlyBinomial) {
  const int n = 120, m = 45;
  Matrix B = Matrix::Zero(n, 2);
  for (int i = 0; i < n; ++i) B(i, i < m ? 1 : 0) = 1.0;
  const std::vector<DesignRow> x(n);
  const Vector w = Vector::Ones(n);
  const auto r = rstep(B, x, w, GatingCoefficients::zeros(2, 1));
  const auto t = gating_inference(B, x, w, r.alpha, {"(Intercept)"});
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_NEAR(t.rows[0].estimate, std::log(45.0 / 75.0), 1e-12);
  ASSERT_TRUE(t.rows[0].standard_error);
  EXPECT_NEAR(*t.rows[0].standard_error, std::sqrt(1.0 / 45 + 1.0 / 75), 1e-12);
  EXPECT_EQ(t.rows[0].state, 2);
}

TEST(Inference, ZAndPConsistent) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  const int n = 150;
  Matrix B(n, 3);
  std::vector<DesignRow> x;
  for (int i = 0; i < n; ++i) {
    Vector v(2);
    v << 1.0, nd(gen);
    x.emplace_back(v);
    B.row(i) = oracle::random_simplex(3, gen);
  }
  const Vector w = Vector::Ones(n);
  const auto r = rstep(B, x, w, GatingCoefficients::zeros(3, 2));
  const auto t = gating_inference(B, x, w, r.alpha);
  for (const auto& row : t.rows) {
    ASSERT_TRUE(row.standard_error);
    EXPECT_GT(*row.standard_error, 0.0);
    EXPECT_NEAR(*row.z_value, row.estimate / *row.standard_error, 1e-10);
    EXPECT_NEAR(*row.p_value, std::erfc(std::abs(*row.z_value) / std::sqrt(2.0)), 1e-10);
    EXPECT_GE(*row.p_value, 0.0);
    EXPECT_LE(*row.p_value, 1.0);
  }
}

TEST(Inference, CollinearColumnFlagged) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  const int n = 100;
  Matrix B(n, 2);
  std::vector<DesignRow> x;
  for (int i = 0; i < n; ++i) {
    const double z = nd(gen);
    Vector v(3);
    v << 1.0, z, z;
    x.emplace_back(v);
    B.row(i) = oracle::random_simplex(2, gen);
  }
  const Vector w = Vector::Ones(n);
  const auto r = rstep(B, x, w, GatingCoefficients::zeros(2, 3));
  const auto t = gating_inference(B, x, w, r.alpha, {"(Intercept)", "z", "z_copy"});
  EXPECT_TRUE(t.singular);
  EXPECT_FALSE(t.rows[0].missing());
  EXPECT_TRUE(t.rows[1].missing());
  EXPECT_TRUE(t.rows[2].missing());
  EXPECT_EQ(t.rows[1].stars(), "");
}

TEST(Inference, ShiftInvariance) {
  std::mt19937_64 gen(5);
  const int n = 90;
  Matrix B(n, 3);
  std::vector<DesignRow> x;
  for (int i = 0; i < n; ++i) {
    Vector v(2);
    v << 1.0, 0.1 * (i % 10);
    x.emplace_back(v);
    B.row(i) = oracle::random_simplex(3, gen);
  }
  const Vector w = Vector::Ones(n);
  const auto r = rstep(B, x, w, GatingCoefficients::zeros(3, 2));
  Matrix shifted = r.alpha.alpha();
  shifted.rowwise() += RowVector::Constant(2, 0.7);
  const auto a = gating_inference(B, x, w, r.alpha);
  const auto b = gating_inference(B, x, w, GatingCoefficients::normalized(shifted));
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_NEAR(a.rows[i].estimate, b.rows[i].estimate, 1e-10);
    EXPECT_NEAR(*a.rows[i].standard_error, *b.rows[i].standard_error, 1e-10);
  }
}

TEST(Inference, Stars) {
  CoefficientRow r;
  r.p_value = 0.0005;
  EXPECT_EQ(r.stars(), "***");
  r.p_value = 0.005;
  EXPECT_EQ(r.stars(), "**");
  r.p_value = 0.03;
  EXPECT_EQ(r.stars(), "*");
  r.p_value = 0.2;
  EXPECT_EQ(r.stars(), "");
}

TEST(InformationCriteria, TrivialValues) {
  const auto ic = information_criteria(0.0, 1, std::exp(2.0));
  EXPECT_NEAR(ic.aic, 2.0, 1e-15);
  EXPECT_NEAR(ic.bic, 2.0, 1e-14);
  const auto ic2 = information_criteria(-100.0, 5, 50.0);
  EXPECT_NEAR(ic2.aic, 210.0, 1e-12);
  EXPECT_NEAR(ic2.bic, 200.0 + 5 * std::log(50.0), 1e-12);
}
