#include "phmoe/error.hpp"
#include "phmoe/gof.hpp"
#include "phmoe/simulate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace phmoe;

namespace {

PhMoeModel exponential_model(double rate) {
  return PhMoeModel(CovariateSchema(), GatingCoefficients::zeros(1, 1),
                    SubIntensityMatrix(Matrix::Constant(1, 1, -rate)), Transform::identity());
}

}  // namespace

TEST(Residuals, ExponentialValueAndCensoring) {
  const auto m = exponential_model(1.0);
  std::vector<Observation> data{{Response::exact(2.0), DesignRow(), 1.0},
                                {Response::right_censored(0.5), DesignRow(), 1.0},
                                {Response::interval(1.0, 2.0), DesignRow(), 1.0}};
  const auto r = residuals(m, data);
  ASSERT_EQ(r.r.size(), 2u);
  EXPECT_NEAR(r.r[0], 2.0, 1e-14);
  EXPECT_NEAR(r.r[1], 0.5, 1e-14);
  EXPECT_EQ(r.delta, (std::vector<int>{1, 0}));
  EXPECT_EQ(r.excluded_intervals, 1u);
}

TEST(Residuals, MedianGivesLog2) {
  Matrix T(2, 2);
  T << -1.0, 0.5, 0.2, -0.7;
  Matrix alpha = Matrix::Zero(2, 1);
  alpha(1, 0) = 0.3;
  const PhMoeModel m(CovariateSchema(), GatingCoefficients(alpha), SubIntensityMatrix(T),
                     Transform::pareto(2.0));
  const double med = iph_quantile(m.conditional(DesignRow()), 0.5);
  const auto r = residuals(m, {{Response::exact(med), DesignRow(), 1.0}});
  EXPECT_NEAR(r.r[0], std::log(2.0), 1e-9);
}

TEST(Residuals, CalibratedOnModelData) {
  const auto m = exponential_model(0.3);
  Matrix T(3, 3);
  T << -2.0, 1.0, 0.5, 0.0, -1.0, 0.2, 0.1, 0.0, -0.4;
  const PhMoeModel model(CovariateSchema(), GatingCoefficients::zeros(3, 1),
                         SubIntensityMatrix(T), Transform::weibull(1.4));
  const auto ys = sample_responses(model, std::vector<DesignRow>(10000), 12);
  std::vector<Observation> data;
  for (const double y : ys) data.push_back({Response::exact(y), DesignRow(), 1.0});
  const auto r = residuals(model, data);
  double mean = 0.0;
  std::vector<double> u;
  for (const double v : r.r) {
    mean += v / r.r.size();
    u.push_back(std::exp(-v));
  }
  EXPECT_NEAR(mean, 1.0, 0.05);
  EXPECT_LT(ks_statistic_uniform(u), ks_critical_value(u.size(), 0.01));
}

TEST(KaplanMeier, NoCensoringIsEmpiricalSurvival) {
  ResidualSample s{{0.3, 1.2, 0.7, 2.0}, {1, 1, 1, 1}};
  const auto c = kaplan_meier(s);
  ASSERT_EQ(c.times, (std::vector<double>{0.3, 0.7, 1.2, 2.0}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(c.survival[i], 1.0 - (i + 1) / 4.0, 1e-15);
}

TEST(KaplanMeier, AllCensoredIsFlat) {
  ResidualSample s{{0.3, 1.2, 0.7}, {0, 0, 0}};
  const auto c = kaplan_meier(s);
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    EXPECT_EQ(c.survival[i], 1.0);
    EXPECT_EQ(c.variance[i], 0.0);
  }
}

TEST(KaplanMeier, TextbookSixPoints) {
  // Events at 1, 3, 4, 5; censored at 2 and at a tie with the event at 4.
  ResidualSample s{{1, 2, 3, 4, 4, 5}, {1, 0, 1, 1, 0, 1}};
  const auto c = kaplan_meier(s);
  ASSERT_EQ(c.times, (std::vector<double>{1, 2, 3, 4, 5}));
  const double s1 = 5.0 / 6.0, s3 = s1 * 3.0 / 4.0, s4 = s3 * 2.0 / 3.0;
  EXPECT_NEAR(c.survival[0], s1, 1e-12);
  EXPECT_NEAR(c.survival[1], s1, 1e-12);
  EXPECT_NEAR(c.survival[2], s3, 1e-12);
  EXPECT_NEAR(c.survival[3], s4, 1e-12);
  EXPECT_NEAR(c.survival[4], 0.0, 1e-12);
  const double gw = 1.0 / 30.0 + 1.0 / 12.0 + 1.0 / 6.0;
  EXPECT_NEAR(c.variance[0], s1 * s1 / 30.0, 1e-12);
  EXPECT_NEAR(c.variance[3], s4 * s4 * gw, 1e-12);
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    EXPECT_GE(c.lower[i], 0.0);
    EXPECT_LE(c.upper[i], 1.0);
    EXPECT_LE(c.lower[i], c.survival[i]);
  }
}

TEST(KaplanMeier, RejectsEmpty) {
  EXPECT_THROW(kaplan_meier(ResidualSample{}), InvalidArgument);
}

TEST(PPPoints, SingleObservation) {
  const auto m = exponential_model(1.0);
  const auto pp = pp_points(m, {{Response::exact(1.0), DesignRow(), 1.0}});
  ASSERT_EQ(pp.size(), 1u);
  EXPECT_DOUBLE_EQ(pp[0].first, 0.5);
  EXPECT_NEAR(pp[0].second, 1.0 - std::exp(-1.0), 1e-15);
}

TEST(PPPoints, InvariantUnderTransform) {
  // PP of (Z, PH) equals PP of (g(Z), IPH).
  Matrix T(2, 2);
  T << -1.5, 0.5, 0.3, -0.8;
  const PhMoeModel ph(CovariateSchema(), GatingCoefficients::zeros(2, 1), SubIntensityMatrix(T),
                      Transform::identity());
  PhMoeModel iph = ph;
  iph.transform = Transform::pareto(1.7);
  std::vector<Observation> zs, ys;
  for (const double z : {0.1, 0.4, 1.3, 2.2, 5.0}) {
    zs.push_back({Response::exact(z), DesignRow(), 1.0});
    ys.push_back({Response::exact(g_forward(iph.transform, z)), DesignRow(), 1.0});
  }
  const auto a = pp_points(ph, zs);
  const auto b = pp_points(iph, ys);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_NEAR(a[i].second, b[i].second, 1e-10);
  }
}

TEST(Hill, DefinitionAndScaleInvariance) {
  std::vector<double> x{1.0, 2.0, 5.0, 3.0, 10.0, 4.0};
  const auto h = hill_estimator(x, 1, 3);
  EXPECT_NEAR(h[0].second, std::log(10.0 / 5.0), 1e-15);
  EXPECT_NEAR(h[1].second, 0.5 * (std::log(10.0) + std::log(5.0)) - std::log(4.0), 1e-15);
  for (auto& v : x) v *= 7.0;
  const auto h7 = hill_estimator(x, 1, 3);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(h[i].second, h7[i].second, 1e-12);
  x[0] = -1.0;
  EXPECT_THROW(hill_estimator(x, 1, 3), InvalidArgument);
}

TEST(Hill, ParetoSample) {
  Rng rng(4);
  std::vector<double> x;
  for (int i = 0; i < 100000; ++i) x.push_back(std::pow(rng.uniform(), -0.5));
  const auto h = hill_estimator(x, 1000, 1000);
  EXPECT_NEAR(h[0].second, 0.5, 0.05);
}

TEST(KS, CriticalValues) {
  EXPECT_NEAR(ks_critical_value(100, 0.05), 0.1358, 1e-4);
  EXPECT_NEAR(ks_critical_value(100, 0.01), 0.1628, 1e-4);
  EXPECT_NEAR(ks_statistic_uniform({0.5}), 0.5, 1e-15);
}
