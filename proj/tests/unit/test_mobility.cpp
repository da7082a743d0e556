#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include <mmv2x/config.hpp>
#include <mmv2x/mobility.hpp>

using namespace mmv2x;

namespace {

const GridGeometry kGrid = build_default_grid();

// Northbound vehicle on vertical road 1, inner lane.
VehicleState northbound(double y, double speed) {
  VehicleState v;
  v.lane = LaneId{0, 1, 1, 0};
  v.true_position = lane_point(v.lane, kGrid, y);
  v.heading = lane_heading(v.lane);
  v.speed = speed;
  v.next_speed_resample = 1e9;
  return v;
}

MobilityParams steady(double straight, double right, double left) {
  MobilityParams p;
  p.speed_variance = 0.0;
  p.lane_change_rate = 0.0;
  p.straight_prob = straight;
  p.right_prob = right;
  p.left_prob = left;
  return p;
}

VehicleStreams streams_for(int id, std::uint64_t seed = 1) {
  return VehicleStreams::for_vehicle(RandomStreams(seed), id);
}

bool inside_any_building(Vec2 p) {
  for (const Rect& r : kGrid.building_footprints)
    if (r.strictly_contains(p)) return true;
  return false;
}

}  // namespace

TEST(Mobility, StraightStep) {
  auto s = streams_for(0);
  const VehicleState v = step_vehicle(northbound(60.0, 14.0), 0.1, kGrid, steady(1, 0, 0), s);
  EXPECT_NEAR(v.true_position.y, 61.4, 1e-12);
  EXPECT_NEAR(v.true_position.x, lane_lateral(v.lane, kGrid), 1e-12);
  EXPECT_EQ(v.heading, 0.0);
  EXPECT_EQ(v.yaw_rate, 0.0);
  EXPECT_NEAR(v.clock, 0.1, 1e-15);
}

TEST(Mobility, RightTurnIsClockwiseWithPositiveYawRate) {
  // Entry line of the crossing at y = 100 lies at 93.6; start just before it.
  auto s = streams_for(0);
  VehicleState v = northbound(93.5, 10.0);
  v = step_vehicle(v, 0.02, kGrid, steady(0, 1, 0), s);
  ASSERT_TRUE(v.turn.has_value());
  const double r = kGrid.half_road() - kGrid.lane_offset(0);
  EXPECT_NEAR(v.turn->radius, r, 1e-12);
  EXPECT_NEAR(v.yaw_rate, 10.0 / r, 1e-12);
  EXPECT_GT(v.heading, 0.0);

  // The quarter arc takes (pi/2) r / s seconds; afterwards the vehicle runs east.
  const double arc_time = 0.5 * kPi * r / 10.0;
  for (int k = 0; k < static_cast<int>(arc_time / 0.001) + 20; ++k)
    v = step_vehicle(v, 0.001, kGrid, steady(0, 1, 0), s);
  EXPECT_FALSE(v.turn.has_value());
  EXPECT_NEAR(v.heading, 0.5 * kPi, 1e-12);
  EXPECT_EQ(v.yaw_rate, 0.0);
  EXPECT_EQ(v.lane.axis, 1);
  EXPECT_EQ(v.lane.dir, 1);
  EXPECT_NEAR(lane_lateral(v.lane, kGrid), v.true_position.y, 1e-9);
}

TEST(Mobility, LeftTurnHasNegativeYawRateAndWiderRadius) {
  auto s = streams_for(0);
  VehicleState v = step_vehicle(northbound(93.5, 10.0), 0.02, kGrid, steady(0, 0, 1), s);
  ASSERT_TRUE(v.turn.has_value());
  const double r = kGrid.half_road() + kGrid.lane_offset(0);
  EXPECT_NEAR(v.turn->radius, r, 1e-12);
  EXPECT_NEAR(v.yaw_rate, -10.0 / r, 1e-12);
  for (int k = 0; k < 2000; ++k) v = step_vehicle(v, 0.001, kGrid, steady(0, 0, 1), s);
  EXPECT_FALSE(v.turn.has_value());
  EXPECT_NEAR(v.heading, -0.5 * kPi, 1e-12);
}

TEST(Mobility, ArcPointsStayOnTheTurnCircle) {
  auto s = streams_for(0);
  VehicleState v = step_vehicle(northbound(93.5, 10.0), 0.02, kGrid, steady(0, 1, 0), s);
  ASSERT_TRUE(v.turn.has_value());
  const TurnArc arc = *v.turn;
  for (int k = 0; k < 50 && v.turn; ++k) {
    EXPECT_NEAR(distance(v.true_position, arc.center), arc.radius, 1e-9);
    v = step_vehicle(v, 0.01, kGrid, steady(0, 1, 0), s);
  }
}

TEST(Mobility, RectilinearMotionWithoutManeuvers) {
  auto s = streams_for(3);
  VehicleState v = northbound(20.0, 14.0);
  const Vec2 start = v.true_position;
  for (int k = 1; k <= 20000; ++k) {
    v = step_vehicle(v, 0.001, kGrid, steady(1, 0, 0), s);
    const double y = std::fmod(start.y + 14.0 * 0.001 * k, kGrid.area_side);
    ASSERT_NEAR(v.true_position.x, start.x, 1e-9);
    ASSERT_NEAR(v.true_position.y, y, 1e-9) << "step " << k;
  }
}

TEST(Mobility, WrapsAroundTheArea) {
  auto s = streams_for(0);
  VehicleState v = northbound(199.5, 10.0);
  v.lane.road = 0;
  v.true_position = lane_point(v.lane, kGrid, 199.5);
  v = step_vehicle(v, 0.1, kGrid, steady(1, 0, 0), s);
  EXPECT_NEAR(v.true_position.y, 0.5, 1e-9);
}

TEST(Mobility, LaneChangeSnapsToAdjacentLane) {
  auto s = streams_for(0);
  VehicleState v = northbound(60.0, 14.0);
  v.next_lane_change = 0.0;
  MobilityParams p = steady(1, 0, 0);
  p.lane_change_rate = 0.1;
  v = step_vehicle(v, 0.001, kGrid, p, s);
  EXPECT_EQ(v.lane.slot, 1);
  EXPECT_NEAR(v.true_position.x, lane_lateral(v.lane, kGrid), 1e-12);
  EXPECT_GT(v.next_lane_change, 0.0);
}

TEST(Mobility, SpeedResampleMoments) {
  const MobilityParams p;
  Rng rng = RandomStreams(5).substream(Stream::Speed, 0);
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = draw_speed(p, rng);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 14.0, 0.05);
  EXPECT_NEAR(s2 / n - mean * mean, 2.0, 0.1);
}

TEST(Mobility, SpeedIsResampledOnSchedule) {
  auto s = streams_for(2);
  MobilityParams p = steady(1, 0, 0);
  p.speed_variance = 2.0;
  VehicleState v = northbound(20.0, 14.0);
  v.next_speed_resample = 0.5;
  for (int k = 0; k < 499; ++k) v = step_vehicle(v, 0.001, kGrid, p, s);
  EXPECT_EQ(v.speed, 14.0);
  v = step_vehicle(v, 0.001, kGrid, p, s);
  v = step_vehicle(v, 0.001, kGrid, p, s);
  EXPECT_NE(v.speed, 14.0);
  EXPECT_NEAR(v.next_speed_resample, 1.5, 1e-12);
}

TEST(Mobility, PlacementIsOnALaneInsideTheArea) {
  const RandomStreams rs(11);
  const MobilityParams p;
  for (int i = 0; i < 500; ++i) {
    auto s = VehicleStreams::for_vehicle(rs, i);
    const VehicleState v = place_vehicle(i, kGrid, p, s);
    EXPECT_EQ(v.id, i);
    EXPECT_GE(v.true_position.x, 0.0);
    EXPECT_LT(v.true_position.x, kGrid.area_side);
    EXPECT_GE(v.true_position.y, 0.0);
    EXPECT_LT(v.true_position.y, kGrid.area_side);
    EXPECT_NEAR(lane_lateral(v.lane, kGrid), v.lane.axis == 0 ? v.true_position.x : v.true_position.y, 1e-12);
    EXPECT_EQ(v.heading, lane_heading(v.lane));
    EXPECT_FALSE(inside_any_building(v.true_position));
  }
}

TEST(Mobility, VehiclesNeverEnterBuildings) {
  const RandomStreams rs(21);
  const MobilityParams p;
  for (int i = 0; i < 20; ++i) {
    auto s = VehicleStreams::for_vehicle(rs, i);
    VehicleState v = place_vehicle(i, kGrid, p, s);
    for (int k = 0; k < 30000; ++k) {
      v = step_vehicle(v, 0.002, kGrid, p, s);
      ASSERT_FALSE(inside_any_building(v.true_position)) << "vehicle " << i << " step " << k;
      if (!v.turn) {
        ASSERT_EQ(v.heading, lane_heading(v.lane));
        ASSERT_EQ(v.yaw_rate, 0.0);
      }
    }
  }
}

TEST(Mobility, StepIsDeterministic) {
  const RandomStreams rs(8);
  const MobilityParams p;
  auto run = [&] {
    auto s = VehicleStreams::for_vehicle(rs, 4);
    VehicleState v = place_vehicle(4, kGrid, p, s);
    for (int k = 0; k < 5000; ++k) v = step_vehicle(v, 0.001, kGrid, p, s);
    return v;
  };
  EXPECT_EQ(run(), run());
  auto s = streams_for(0);
  EXPECT_THROW(step_vehicle(northbound(1.0, 1.0), 0.0, kGrid, p, s), std::invalid_argument);
}

TEST(Sensing, ErrorMagnitudeMoments) {
  const auto model = PositionErrorModel::from_moments(3.0, 1.0);
  Rng rng = RandomStreams(3).substream(Stream::GpsError, 0);
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  std::array<int, 12> bins{};
  for (int i = 0; i < n; ++i) {
    const Vec2 e = sample_estimated_position({10.0, 10.0}, model, rng) - Vec2{10.0, 10.0};
    const double m = e.norm();
    s += m;
    s2 += m * m;
    double a = std::atan2(e.y, e.x);
    if (a < 0.0) a += kTwoPi;
    ++bins[std::min<std::size_t>(11, static_cast<std::size_t>(a / kTwoPi * 12.0))];
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 3.0, 0.05);
  EXPECT_NEAR(std::sqrt(s2 / n - mean * mean), 1.0, 0.05);
  // Chi-square, 11 degrees of freedom; 31.26 is the 0.999 quantile.
  double chi2 = 0.0;
  for (int b : bins) chi2 += (b - n / 12.0) * (b - n / 12.0) / (n / 12.0);
  EXPECT_LT(chi2, 31.26);
}

TEST(Sensing, InvalidMomentsThrow) {
  EXPECT_THROW(PositionErrorModel::from_moments(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(PositionErrorModel::from_moments(3.0, 0.0), std::invalid_argument);
}

TEST(Sensing, BeaconCarriesStateAndTimestamp) {
  ScenarioConfig cfg;
  cfg.position_error_mean = 0.0;
  const auto gps = GpsErrorProcess::from_config(cfg);
  EXPECT_FALSE(gps.model.has_value());
  auto s = streams_for(0);
  VehicleState v = northbound(50.0, 12.0);
  v.yaw_rate = 0.3;
  const auto b = emit_beacon(v, 4.2, 1.0, gps, s);
  ASSERT_TRUE(b.has_value());
  EXPECT_EQ(b->estimated_position, v.true_position);
  EXPECT_EQ(b->speed, 12.0);
  EXPECT_EQ(b->yaw_rate, 0.3);
  EXPECT_EQ(b->heading, v.heading);
  EXPECT_EQ(b->timestamp, 4.2);
  EXPECT_EQ(v.last_beacon, b);
}

TEST(Sensing, DeliveryRatio) {
  const auto gps = GpsErrorProcess::from_config(ScenarioConfig{});
  auto s = streams_for(6);
  VehicleState v = northbound(50.0, 12.0);
  int delivered = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i)
    if (emit_beacon(v, 0.1 * i, 0.5, gps, s)) ++delivered;
  EXPECT_NEAR(static_cast<double>(delivered) / n, 0.5, 0.02);

  auto none = streams_for(6);
  for (int i = 0; i < 100; ++i) EXPECT_FALSE(emit_beacon(v, 0.1 * i, 0.0, gps, none));
}

TEST(Sensing, ErrorIsHeldBetweenRefreshes) {
  const auto gps = GpsErrorProcess::from_config(ScenarioConfig{});
  ASSERT_EQ(gps.refresh_interval, 1.0);
  auto s = streams_for(1);
  VehicleState v = northbound(50.0, 12.0);
  const auto b0 = emit_beacon(v, 0.0, 1.0, gps, s);
  const auto b1 = emit_beacon(v, 0.5, 1.0, gps, s);
  const auto b2 = emit_beacon(v, 1.0, 1.0, gps, s);
  ASSERT_TRUE(b0 && b1 && b2);
  EXPECT_EQ(b0->estimated_position, b1->estimated_position);
  EXPECT_NE(b1->estimated_position, b2->estimated_position);
  EXPECT_GT(distance(b0->estimated_position, v.true_position), 0.0);
}
