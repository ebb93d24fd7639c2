#include "phmoe/error.hpp"
#include "phmoe/transforms.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace phmoe;

namespace {

std::vector<Transform> all_transforms() {
  return {Transform::identity(), Transform::pareto(2.5), Transform::weibull(0.7),
          Transform::weibull(1.8), Transform::semi_composite_weibull(0.6, 3.0),
          Transform::semi_composite_pareto(1.7, 2.0)};
}

}  // namespace

TEST(Transforms, RoundTrip) {
  for (const auto& tr : all_transforms())
    for (const double y : {1e-6, 0.3, 1.0, 2.0, 3.0, 7.5, 1e3}) {
      const double z = g_inverse(tr, y);
      EXPECT_NEAR(g_forward(tr, z), y, 1e-12 * std::max(1.0, y))
          << family_name(tr.family) << " y=" << y;
    }
}

TEST(Transforms, LambdaIsDerivativeOfG) {
  for (const auto& tr : all_transforms())
    for (const double y : {0.2, 1.1, 2.6, 5.0}) {
      const double h = 1e-6 * y;
      const double fd = (g_inverse(tr, y + h) - g_inverse(tr, y - h)) / (2 * h);
      EXPECT_NEAR(lambda(tr, y), fd, 1e-6 * std::max(1.0, fd)) << family_name(tr.family);
    }
}

TEST(Transforms, ClosedForms) {
  EXPECT_NEAR(g_inverse(Transform::pareto(2.0), 2.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(g_inverse(Transform::weibull(2.0), 3.0), 9.0, 1e-13);
  EXPECT_NEAR(lambda(Transform::pareto(2.0), 0.0), 0.5, 1e-15);
  EXPECT_TRUE(std::isinf(lambda(Transform::weibull(0.5), 0.0)));
  EXPECT_THROW(lambda(Transform::pareto(1.0), -1.0), InvalidArgument);
}

TEST(Transforms, SemiCompositeBodyIsIdentity) {
  const auto tr = Transform::semi_composite_pareto(1.5, 4.0);
  EXPECT_DOUBLE_EQ(g_inverse(tr, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(g_forward(tr, 3.9), 3.9);
  ASSERT_TRUE(kink(tr).has_value());
  EXPECT_DOUBLE_EQ(*kink(tr), 4.0);
  EXPECT_FALSE(kink(Transform::pareto(1.0)).has_value());
  // Continuous at the threshold.
  EXPECT_NEAR(g_inverse(tr, 4.0 + 1e-12), 4.0, 1e-11);
}

TEST(Transforms, Validation) {
  EXPECT_FALSE(validate(Transform::pareto(-1.0)).empty());
  Transform missing{TransformFamily::SemiCompositeWeibullTail, 1.0, std::nullopt, true};
  EXPECT_FALSE(validate(missing).empty());
  EXPECT_TRUE(validate(Transform::semi_composite_weibull(1.0, 2.0)).empty());
}

TEST(Transforms, NamesAndCounts) {
  EXPECT_EQ(parse_family("semi-composite-pareto-tail"), TransformFamily::SemiCompositeParetoTail);
  EXPECT_EQ(parse_family("weibull"), TransformFamily::Weibull);
  EXPECT_THROW(parse_family("lognormal"), InvalidArgument);
  EXPECT_EQ(parameter_count(TransformFamily::Identity, true), 0);
  EXPECT_EQ(parameter_count(TransformFamily::Pareto, true), 1);
  EXPECT_EQ(parameter_count(TransformFamily::SemiCompositeParetoTail, false), 2);
}
