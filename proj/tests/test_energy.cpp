#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "support.hpp"

using namespace uamflow;
using namespace uamflow::energy;

namespace {

const VehicleParams kDefaults{};
constexpr double kMile = 5280.0;

}  // namespace

TEST(Vehicle, DefaultsValidate) { EXPECT_NO_THROW(kDefaults.validate()); }

TEST(Vehicle, InvalidParametersAllReported) {
  VehicleParams v;
  v.mass_kg = -1.0;
  v.hover_efficiency = 1.5;
  v.flight_path_angle_deg = 90.0;
  try {
    v.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.problems().size(), 3u);
  }
}

TEST(Density, SeaLevelAndDecreasing) {
  EXPECT_DOUBLE_EQ(air_density(0.0), kSeaLevelDensity);
  double prev = air_density(0.0);
  for (double h = 250.0; h <= 5000.0; h += 250.0) {
    EXPECT_LT(air_density(h), prev);
    prev = air_density(h);
  }
}

TEST(HoverPower, Anchor) {
  EXPECT_NEAR(hover_power(kDefaults), 362.2523, 1e-3);
  EXPECT_NEAR(hover_power(kDefaults), 362.3, 362.3 * 1e-3);
  EXPECT_THROW(hover_power(kDefaults, 0.0), DomainError);
}

TEST(SegmentPowers, FormulaValues) {
  const auto p1 = segment_powers(kDefaults, 1000.0);
  EXPECT_NEAR(p1.climb_kw, 154.0612, 1e-3);
  EXPECT_NEAR(p1.cruise_kw, 57.1585, 1e-3);
  const auto p3 = segment_powers(kDefaults, 3000.0);
  EXPECT_NEAR(p3.climb_kw, 154.0422, 1e-3);
  EXPECT_NEAR(p3.cruise_kw, 55.1914, 1e-3);
  // climb power matches the reference figures
  EXPECT_NEAR(p1.climb_kw, 154.1, 154.1 * 0.02);
  EXPECT_NEAR(p3.climb_kw, 154.0, 154.0 * 0.02);
}

TEST(SegmentPowers, DescentIsFractionOfCruise) {
  for (double h : {1000.0, 2000.0, 3000.0}) {
    const auto p = segment_powers(kDefaults, h);
    EXPECT_DOUBLE_EQ(p.descent_kw, 0.4 * p.cruise_kw);
  }
}

TEST(SegmentPowers, CruiseRecomputedInSi) {
  const double v = 135.0 * 0.3048;
  const double rho = 1.225 * std::pow(1.0 - 2.256e-5 * 1500.0 * 0.3048, 4.2561);
  const double w = 1800.0 * 9.81;
  const double q = 0.5 * rho * v * v * 30.0;
  const double drag = q * 0.03 + w * w / (4.0 * 0.03 * 400.0 * q);
  const double expect = v / 0.8 * drag / 1000.0;
  EXPECT_NEAR(segment_powers(kDefaults, 1000.0).cruise_kw, expect, 1e-9 * expect);
}

TEST(SegmentPowers, RejectsAltitudeBelowHoverSegment) { EXPECT_THROW(segment_powers(kDefaults, 200.0), DomainError); }

TEST(Mission, HoverEnergyAnchor) {
  const auto e = mission_energy(kDefaults, {1000.0, 50000.0, 500.0});
  EXPECT_NEAR(e.hover_mj, 21.7351, 1e-3);
  EXPECT_NEAR(e.hover_mj, 21.7, 21.7 * 0.005);
  EXPECT_NEAR(e.total_mj, 47.2648, 1e-3);
  EXPECT_NEAR(e.total_mj, e.hover_mj + e.climb_mj + e.cruise_mj + e.descent_mj, 1e-12);
}

TEST(Mission, ClimbDescentDistance) {
  EXPECT_NEAR(climb_descent_distance_ft(kDefaults, 1000.0), 8506.9227, 1e-3);
  EXPECT_NEAR(climb_descent_distance_ft(kDefaults, 1000.0) / 750.0, 11.34, 0.01);
}

TEST(Mission, ZeroCruiseAtExactClimbDistance) {
  const double d = climb_descent_distance_ft(kDefaults, 2000.0);
  EXPECT_EQ(mission_energy(kDefaults, {2000.0, d, 500.0}).cruise_mj, 0.0);
}

TEST(Mission, TooShortIsDomainError) {
  EXPECT_THROW(mission_energy(kDefaults, {3000.0, 10000.0, 500.0}), DomainError);
}

TEST(Mission, IncreasingInDistance) {
  for (double h : {1000.0, 2000.0, 3000.0}) {
    double prev = mission_energy(kDefaults, {h, climb_descent_distance_ft(kDefaults, h), 500.0}).total_mj;
    for (double mi = 6.0; mi <= 40.0; mi += 0.5) {
      const double e = mission_energy(kDefaults, {h, mi * kMile, 500.0}).total_mj;
      EXPECT_GT(e, prev);
      prev = e;
    }
  }
}

TEST(ExtraEnergy, FormulaValues) {
  EXPECT_NEAR(extra_energy_fraction(kDefaults, 10 * kMile, 2000.0), 0.114017, 1e-5);
  EXPECT_NEAR(extra_energy_fraction(kDefaults, 10 * kMile, 3000.0), 0.230718, 1e-5);
  EXPECT_NEAR(extra_energy_fraction(kDefaults, 19.9 * kMile, 2000.0), 0.072753, 1e-5);
  EXPECT_NEAR(extra_energy_fraction(kDefaults, 19.9 * kMile, 3000.0), 0.147583, 1e-5);
  EXPECT_EQ(extra_energy_fraction(kDefaults, 10 * kMile, 1000.0), 0.0);
}

TEST(ExtraEnergy, DecreasesWithDistance) {
  for (double h : {2000.0, 3000.0}) {
    double prev = extra_energy_fraction(kDefaults, 6.0 * kMile, h);
    for (double mi = 6.5; mi <= 40.0; mi += 0.5) {
      const double f = extra_energy_fraction(kDefaults, mi * kMile, h);
      EXPECT_LT(f, prev);
      EXPECT_GT(f, 0.0);
      prev = f;
    }
  }
}

TEST(ExtraEnergy, HigherLayerCostsMore) {
  for (double mi = 6.0; mi <= 30.0; mi += 1.0)
    EXPECT_GT(extra_energy_fraction(kDefaults, mi * kMile, 3000.0), extra_energy_fraction(kDefaults, mi * kMile, 2000.0));
}

TEST(RouteExtraEnergy, LowestLayerIsZero) {
  std::vector<RouteLeg> legs{{30000.0, 1000.0}, {80000.0, 1000.0}};
  const auto p = route_extra_energy(legs, kDefaults, 1000.0);
  EXPECT_TRUE(p.isZero());
  EXPECT_EQ(average_extra_energy(p, Eigen::Vector2d(3.0, 4.0)), 0.0);
}

TEST(RouteExtraEnergy, SingleHighRoute) {
  std::vector<RouteLeg> legs{{10 * kMile, 3000.0}};
  const auto p = route_extra_energy(legs, kDefaults, 1000.0);
  EXPECT_NEAR(p[0], extra_energy_fraction(kDefaults, 10 * kMile, 3000.0), 1e-15);
  EXPECT_DOUBLE_EQ(average_extra_energy(p, Eigen::VectorXd::Constant(1, 2.5)), p[0]);
}

TEST(RouteExtraEnergy, ShortRouteChargedAtProfileLength) {
  std::vector<RouteLeg> legs{{5000.0, 3000.0}};
  const auto p = route_extra_energy(legs, kDefaults, 1000.0);
  EXPECT_NEAR(p[0], extra_energy_fraction(kDefaults, climb_descent_distance_ft(kDefaults, 3000.0), 3000.0), 1e-15);
}

TEST(AverageExtraEnergy, WeightedMean) {
  EXPECT_DOUBLE_EQ(average_extra_energy(Eigen::Vector2d(0.0, 0.2), Eigen::Vector2d(1.0, 1.0)), 0.1);
  EXPECT_EQ(average_extra_energy(Eigen::Vector2d(0.0, 0.2), Eigen::Vector2d::Zero()), 0.0);
  EXPECT_THROW(average_extra_energy(Eigen::Vector2d(0.0, 0.2), Eigen::Vector3d::Ones()), UsageError);
}

TEST(AverageExtraEnergy, BetweenMinAndMax) {
  testsupport::Rng rng(12);
  for (int k = 0; k < 200; ++k) {
    const int n = rng.integer(1, 9);
    Eigen::VectorXd p(n), z(n);
    for (int i = 0; i < n; ++i) {
      p[i] = rng.uniform(0.0, 0.4);
      z[i] = rng.coin(0.8) ? rng.uniform(0.0, 10.0) : 0.0;
    }
    z[0] += 0.1;
    const double pa = average_extra_energy(p, z);
    EXPECT_GE(pa, p.minCoeff() - 1e-15);
    EXPECT_LE(pa, p.maxCoeff() + 1e-15);
  }
}
