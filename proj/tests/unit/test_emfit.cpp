#include "oracles.hpp"

#include "phmoe/emfit.hpp"
#include "phmoe/error.hpp"
#include "phmoe/simulate.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace phmoe;

namespace {

std::vector<Observation> exact_rows(const std::vector<double>& ys) {
  std::vector<Observation> out;
  for (const double y : ys) out.push_back({Response::exact(y), DesignRow(), 1.0});
  return out;
}

}  // namespace

TEST(Fit, SinglePhaseIsExponentialMle) {
  const auto data = exact_rows({0.5, 1.0, 2.5, 4.0, 0.2});
  FitConfig cfg;
  cfg.p = 1;
  const auto res = fit(data, CovariateSchema(), TransformFamily::Identity, cfg);
  EXPECT_NEAR(-res.model.T(0, 0), 5.0 / 8.2, 1e-12);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.dof, 1);
}

TEST(Fit, WeightsActLikeReplication) {
  auto data = exact_rows({0.5, 1.0});
  data[1].weight = 3.0;
  FitConfig cfg;
  cfg.p = 1;
  const auto res = fit(data, CovariateSchema(), TransformFamily::Identity, cfg);
  EXPECT_NEAR(-res.model.T(0, 0), 4.0 / 3.5, 1e-12);
}

TEST(Fit, TraceIsMonotoneAndDeterministic) {
  const auto ds = scenario_gamma_groups(3, 60);
  FitConfig cfg;
  cfg.p = 3;
  cfg.max_iterations = 60;
  cfg.seed = 4;
  const auto a = fit(ds.observations, ds.schema, TransformFamily::Weibull, cfg);
  const auto b = fit(ds.observations, ds.schema, TransformFamily::Weibull, cfg);
  for (std::size_t i = 1; i < a.trace.size(); ++i) EXPECT_GE(a.trace[i], a.trace[i - 1] - 1e-8);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.model.T.matrix(), b.model.T.matrix());
  EXPECT_EQ(a.model.transform, b.model.transform);
  EXPECT_EQ(a.trace.size(), static_cast<std::size_t>(a.iterations) + 1);
  EXPECT_NEAR(a.trace.back(), log_likelihood(a.model, ds.observations),
              1e-9 * std::abs(a.trace.back()));
}

TEST(Fit, InitializationIsSeeded) {
  const auto ds = scenario_gamma_groups(1, 20);
  FitConfig cfg;
  cfg.p = 4;
  cfg.seed = 9;
  const auto a = initialize(4, ds.schema, ds.observations, TransformFamily::Identity, cfg);
  const auto b = initialize(4, ds.schema, ds.observations, TransformFamily::Identity, cfg);
  EXPECT_EQ(a.T.matrix(), b.T.matrix());
  cfg.seed = 10;
  const auto c = initialize(4, ds.schema, ds.observations, TransformFamily::Identity, cfg);
  EXPECT_NE(a.T.matrix(), c.T.matrix());
  cfg.init_strategy = InitStrategy::RandomCoxian;
  const auto cox = initialize(4, ds.schema, ds.observations, TransformFamily::Identity, cfg);
  EXPECT_EQ(cox.T(2, 0), 0.0);
  EXPECT_EQ(cox.T(0, 2), 0.0);
}

TEST(ThetaStep, ImprovesAWrongTheta) {
  const CovariateSchema none;
  const PhMoeModel truth(none, GatingCoefficients::zeros(1, 1),
                         SubIntensityMatrix(Matrix::Constant(1, 1, -1.0)), Transform::weibull(2.0));
  const auto ys = sample_responses(truth, std::vector<DesignRow>(2000), 5);
  const auto data = exact_rows(ys);
  PhMoeModel off = truth;
  off.transform.theta = 0.8;
  const auto r = theta_step(data, off);
  EXPECT_GT(r.loglik, log_likelihood(off, data));
  EXPECT_NEAR(r.transform.theta, 2.0, 0.15);
}

TEST(ThetaStep, ThresholdSearchNeverLowersLikelihood) {
  const CovariateSchema none;
  const PhMoeModel m(none, GatingCoefficients::zeros(1, 1),
                     SubIntensityMatrix(Matrix::Constant(1, 1, -0.8)),
                     Transform::semi_composite_pareto(1.0, 1.5, false));
  const auto data = exact_rows(sample_responses(m, std::vector<DesignRow>(500), 6));
  const auto r = theta_step(data, m);
  EXPECT_GE(r.loglik, log_likelihood(m, data));
  ASSERT_TRUE(r.transform.threshold.has_value());
}

TEST(Fit, DegreesOfFreedom) {
  EXPECT_EQ(degrees_of_freedom(5, 21, Transform::pareto(1.0)), 110);
  EXPECT_EQ(degrees_of_freedom(2, 1, Transform::identity()), 5);
  EXPECT_EQ(degrees_of_freedom(3, 2, Transform::semi_composite_weibull(1.0, 2.0, false)), 15);
}

TEST(Fit, RejectsBadInput) {
  FitConfig cfg;
  EXPECT_THROW(fit({}, CovariateSchema(), TransformFamily::Identity, cfg), InvalidArgument);
  auto data = exact_rows({1.0});
  cfg.max_iterations = 0;
  EXPECT_THROW(fit(data, CovariateSchema(), TransformFamily::Identity, cfg), InvalidArgument);
}

TEST(Fit, CensoredSinglePhase) {
  // Exponential MLE with right censoring: events / total exposure.
  std::vector<Observation> data = exact_rows({1.0, 2.0, 3.0});
  data.push_back({Response::right_censored(4.0), DesignRow(), 1.0});
  FitConfig cfg;
  cfg.p = 1;
  cfg.loglik_tolerance = 1e-14;
  const auto res = fit(data, CovariateSchema(), TransformFamily::Identity, cfg);
  EXPECT_NEAR(-res.model.T(0, 0), 3.0 / 10.0, 1e-7);
}
