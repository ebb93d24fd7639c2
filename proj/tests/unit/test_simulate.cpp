#include "phmoe/gof.hpp"
#include "phmoe/simulate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace phmoe;

TEST(Rng, SubstreamsAreReproducibleAndDistinct) {
  const Rng r(42);
  Rng a = r.substream(3), b = r.substream(3), c = r.substream(4);
  const double va = a.uniform();
  EXPECT_EQ(va, b.uniform());
  EXPECT_NE(va, c.uniform());
}

TEST(Absorption, ExponentialMean) {
  Rng rng(1);
  RowVector pi(1);
  pi << 1.0;
  const SubIntensityMatrix T(Matrix::Constant(1, 1, -2.0));
  const int n = 1000000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = sample_absorption(pi, T, rng).time;
    s += y;
    s2 += y * y;
  }
  const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, 0.5, 3 * se);
}

TEST(Absorption, ErlangCoefficientOfVariation) {
  Rng rng(2);
  RowVector pi(2);
  pi << 1.0, 0.0;
  Matrix T(2, 2);
  T << -3.0, 3.0, 0.0, -3.0;
  const SubIntensityMatrix S(T);
  const int n = 1000000;
  std::vector<double> ys(n);
  double s = 0.0;
  for (auto& y : ys) s += (y = sample_absorption(pi, S, rng).time);
  const double mean = s / n;
  double ss = 0.0;
  for (const double y : ys) ss += (y - mean) * (y - mean);
  const double cv2 = ss / (n - 1) / (mean * mean);
  // Delta method for Gamma(2): Var(cv^2) ~= 0.75 / n.
  EXPECT_NEAR(cv2, 0.5, 3 * std::sqrt(0.75 / n));
}

TEST(Absorption, MatchesSurvival) {
  Matrix T(3, 3);
  T << -2.0, 1.0, 0.5, 0.3, -1.0, 0.2, 0.0, 0.4, -0.6;
  RowVector pi(3);
  pi << 0.5, 0.2, 0.3;
  const PhMoeModel m(CovariateSchema(), GatingCoefficients::normalized(
                                            Matrix(pi.array().log().matrix().transpose())),
                     SubIntensityMatrix(T), Transform::identity());
  // One KS test per seed is a 5% coin flip; count rejections over 100 seeds
  // instead. Binomial(100, 0.05) exceeds 14 with probability about 2e-4.
  const auto dist = m.conditional(DesignRow());
  int rejections = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto ys = sample_responses(m, std::vector<DesignRow>(10000), seed);
    const double d = ks_statistic(ys, [&](double y) { return 1.0 - iph_survival(dist, y); });
    rejections += d > ks_critical_value(ys.size(), 0.05);
  }
  EXPECT_LE(rejections, 14);
}

TEST(SampleResponse, LomaxPoint) {
  const PhMoeModel m(CovariateSchema(), GatingCoefficients::zeros(1, 1),
                     SubIntensityMatrix(Matrix::Constant(1, 1, -2.0)), Transform::pareto(1.0));
  const auto ys = sample_responses(m, std::vector<DesignRow>(1000000), 8);
  double above = 0.0;
  for (const double y : ys) above += y > 1.0;
  const double p = above / ys.size();
  EXPECT_NEAR(p, 0.25, 3 * std::sqrt(0.25 * 0.75 / ys.size()));
}

TEST(SampleResponse, WeibullFractionalMoment) {
  Matrix T(2, 2);
  T << -1.0, 0.6, 0.0, -2.0;
  const PhMoeModel m(CovariateSchema(), GatingCoefficients::zeros(2, 1), SubIntensityMatrix(T),
                     Transform::weibull(1.5));
  const auto ys = sample_responses(m, std::vector<DesignRow>(200000), 9);
  double s = 0.0, s2 = 0.0;
  for (const double y : ys) {
    const double v = std::pow(y, 0.8);
    s += v;
    s2 += v * v;
  }
  const double n = ys.size(), mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
  const double want = weibull_fractional_moment(m.conditional(DesignRow()).base, 1.5, 0.8);
  EXPECT_NEAR(mean, want, 3 * se);
}

TEST(SampleResponse, StartStateFrequencies) {
  Matrix alpha = Matrix::Zero(3, 1);
  alpha(1, 0) = 0.7;
  alpha(2, 0) = -0.5;
  const GatingCoefficients g(alpha);
  const RowVector pi = softmax_pi(DesignRow(), g);
  Rng rng(10);
  const SubIntensityMatrix T(-Matrix::Identity(3, 3));
  const int n = 100000;
  Vector counts = Vector::Zero(3);
  for (int i = 0; i < n; ++i) counts(sample_absorption(pi, T, rng).start_state) += 1.0;
  for (int k = 0; k < 3; ++k)
    EXPECT_NEAR(counts(k) / n, pi(k), 3 * std::sqrt(pi(k) * (1 - pi(k)) / n));
}

TEST(Scenario, GammaGroups) {
  const auto ds = scenario_gamma_groups(5);
  ASSERT_EQ(ds.size(), 2000u);
  std::map<std::string, int> counts;
  for (const auto& row : ds.covariates) ++counts[row[0]];
  for (const auto& lv : {"A", "B", "C", "D"}) EXPECT_EQ(counts[lv], 500);
  EXPECT_EQ(ds.schema.design_width(), 4);

  std::ostringstream a, b;
  write_dataset_csv(a, scenario_gamma_groups(5));
  write_dataset_csv(b, scenario_gamma_groups(5));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Scenario, GroupMeansOverReplications) {
  double sums[4] = {0, 0, 0, 0};
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    const auto ds = scenario_gamma_groups(100 + r);
    for (std::size_t i = 0; i < ds.size(); ++i) sums[i / 500] += ds.observations[i].response.value();
  }
  const double truth[4] = {3, 27, 9, 9};
  const double sd[4] = {3, 15.59, 9, 5.196};
  for (int g = 0; g < 4; ++g)
    EXPECT_NEAR(sums[g] / (500.0 * reps), truth[g], 4 * sd[g] / std::sqrt(500.0 * reps));
}

TEST(Censoring, Schemes) {
  std::vector<Observation> data;
  for (const double y : {0.5, 1.0, 2.5, 7.0}) data.push_back({Response::exact(y), DesignRow(), 1.0});

  auto same = data;
  apply_censoring(same, CensoringScheme::right_at(std::numeric_limits<double>::infinity()), Rng(1));
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_EQ(same[i].response, data[i].response);

  auto right = data;
  apply_censoring(right, CensoringScheme::right_at(2.0), Rng(1));
  EXPECT_TRUE(right[1].response.is_exact());
  EXPECT_EQ(right[2].response, Response::right_censored(2.0));
  EXPECT_EQ(right[3].response, Response::right_censored(2.0));

  auto grid = data;
  apply_censoring(grid, CensoringScheme::interval_grid(1.0), Rng(1));
  EXPECT_EQ(grid[0].response, Response::interval(0.0, 1.0));
  EXPECT_EQ(grid[1].response, Response::interval(0.0, 1.0));
  EXPECT_EQ(grid[2].response, Response::interval(2.0, 3.0));

  auto random = data;
  apply_censoring(random, CensoringScheme::random_exponential(0.5), Rng(3));
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!random[i].response.is_exact())
      EXPECT_LT(random[i].response.lower(), data[i].response.value());

  EXPECT_EQ(CensoringScheme::parse("right@5").kind, CensoringScheme::Kind::RightAt);
  EXPECT_EQ(CensoringScheme::parse("grid@0.5").value, 0.5);
  EXPECT_THROW(CensoringScheme::parse("left@1"), InvalidArgument);
}
