#include <gtest/gtest.h>

#include <string>
#include <vector>

#include <mmv2x/engine.hpp>

using namespace mmv2x;

namespace {

ScenarioConfig small(std::vector<std::string> extra = {}) {
  std::vector<std::string> a{"vehicle_count=8", "sim_duration=3", "warmup=1"};
  a.insert(a.end(), extra.begin(), extra.end());
  return with_overrides(ScenarioConfig{}, a);
}

// One parked vehicle on the east side of vertical road 1, south of RSU 0,
// with every random effect switched off.
ScenarioConfig parked_config(Strategy s) {
  ScenarioConfig c;
  c.strategy = s;
  c.vehicle_count = 1;
  c.mean_speed = 0.0;
  c.speed_variance = 0.0;
  c.lane_change_rate = 0.0;
  c.shadow_sigma = 0.0;
  c.position_error_mean = 0.0;
  c.beamwidth_adaptation = false;
  c.sim_duration = 1.0;
  c.warmup = 0.2;
  return c;
}

RunOptions parked_vehicle() {
  VehicleState v;
  v.lane = LaneId{0, 1, 1, 0};
  v.true_position = lane_point(v.lane, build_default_grid(), 30.0);
  v.heading = lane_heading(v.lane);
  RunOptions o;
  o.initial_vehicles = std::vector<VehicleState>{v};
  o.sample_interval = 0.001;
  return o;
}

}  // namespace

TEST(Engine, ParkedVehicleGetsTheLinkRateUnderSamba) {
  const ScenarioConfig cfg = parked_config(Strategy::Samba);
  const MetricsRecord m = run(cfg, parked_vehicle());
  const Vec2 rsu = cfg.grid.rsu_positions[0];
  const double d = distance(rsu, {54.8, 30.0});
  const double expect = rate_for_snr(snr(cfg.fixed_beamwidth, d, 0.0, cfg), cfg.mcs);
  ASSERT_EQ(expect, 4620e6);
  EXPECT_NEAR(m.measured_time, 0.8, 1e-12);
  EXPECT_NEAR(m.mean_rate_bps, expect, expect * 1e-9);
  EXPECT_EQ(m.misalignment_fraction, 0.0);
  EXPECT_EQ(m.outage_fraction, 0.0);
  ASSERT_EQ(m.samples.size(), 800u);
  for (const auto& s : m.samples) {
    EXPECT_EQ(s.serving_rsu, 0);
    EXPECT_TRUE(s.aligned);
    EXPECT_EQ(s.rate_bps, expect);
  }
}

TEST(Engine, ParkedVehicleUnderLegacyPaysTheTrainingOverhead) {
  const ScenarioConfig cfg = parked_config(Strategy::Legacy);
  const MetricsRecord m = run(cfg, parked_vehicle());
  const double overhead = legacy_overhead(1, cfg);
  const double expect = 4620e6 * (cfg.bi_length - overhead) / cfg.bi_length;
  EXPECT_NEAR(m.mean_rate_bps, expect, expect * 1e-9);
  EXPECT_EQ(m.misalignment_fraction, 0.0);
}

TEST(Engine, UntrackedVehiclesGetNothing) {
  ScenarioConfig cfg = parked_config(Strategy::Samba);
  cfg.beacon_delivery_ratio = 0.0;
  const MetricsRecord m = run(cfg, parked_vehicle());
  EXPECT_EQ(m.mean_rate_bps, 0.0);
  EXPECT_EQ(m.outage_fraction, 1.0);
  for (const auto& s : m.samples) EXPECT_EQ(s.serving_rsu, -1);
}

TEST(Engine, RunsAreDeterministic) {
  for (auto strategy : {"samba", "legacy"}) {
    const ScenarioConfig cfg = small({std::string("strategy=") + strategy});
    RunOptions o;
    o.sample_interval = 0.05;
    o.trajectory_interval = 0.1;
    const MetricsRecord a = run(cfg, o);
    const MetricsRecord b = run(cfg, o);
    EXPECT_EQ(a.vehicle_rate_bps, b.vehicle_rate_bps);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
      EXPECT_EQ(a.samples[i].rate_bps, b.samples[i].rate_bps);
      EXPECT_EQ(a.samples[i].serving_rsu, b.samples[i].serving_rsu);
    }
    ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
    for (std::size_t i = 0; i < a.trajectory.size(); ++i)
      EXPECT_EQ(a.trajectory[i].position, b.trajectory[i].position);
    const MetricsRecord c = run(with_overrides(cfg, std::vector<std::string>{"master_seed=2"}), o);
    EXPECT_NE(a.vehicle_rate_bps, c.vehicle_rate_bps);
  }
}

TEST(Engine, AirtimeIsConservedPerRsu) {
  for (auto strategy : {"samba", "legacy"}) {
    World w(small({std::string("strategy=") + strategy, "vehicle_count=40"}));
    const double dt = w.config().sim_step;
    const std::size_t n_rsu = w.config().grid.rsu_positions.size();
    while (!w.done()) {
      w.tick();
      std::vector<double> used(n_rsu, 0.0);
      for (const auto& l : w.links()) {
        ASSERT_LE(l.delivered_rate_bps, l.link_rate_bps);
        if (l.link_rate_bps > 0.0) {
          ASSERT_TRUE(l.aligned && l.los);
          used[static_cast<std::size_t>(l.serving_rsu)] += l.delivered_rate_bps / l.link_rate_bps * dt;
        }
      }
      for (std::size_t r = 0; r < n_rsu; ++r) ASSERT_LE(used[r], dt * (1.0 + 1e-12));
    }
  }
}

TEST(Engine, ServingMapIsAPartition) {
  World w(small({"vehicle_count=30"}));
  while (!w.done()) {
    w.tick();
    for (std::size_t i = 0; i < w.vehicles().size(); ++i) {
      const auto s = w.samba_state().serving_rsu(static_cast<int>(i));
      EXPECT_EQ(s.has_value(), w.links()[i].serving_rsu >= 0);
      if (s) {
        EXPECT_EQ(*s, w.links()[i].serving_rsu);
      }
    }
  }
}

TEST(Engine, LegacyThroughputFallsWithTrainingCost) {
  const auto base = run(small({"strategy=legacy", "vehicle_count=20"}));
  const auto slow_frames = run(small({"strategy=legacy", "vehicle_count=20", "ssw_frame_time=3e-5"}));
  const auto more_brp = run(small({"strategy=legacy", "vehicle_count=20", "brp_frames=8"}));
  ASSERT_GT(base.network_throughput_bps, 0.0);
  EXPECT_LT(slow_frames.network_throughput_bps, base.network_throughput_bps);
  EXPECT_LT(more_brp.network_throughput_bps, base.network_throughput_bps);
}

TEST(Engine, RemovingBuildingsNeverHurtsALoneVehicle) {
  for (auto strategy : {"samba", "legacy"}) {
    for (int seed = 1; seed <= 6; ++seed) {
      const std::vector<std::string> a{std::string("strategy=") + strategy, "vehicle_count=1", "sim_duration=6",
                                       "warmup=1", "master_seed=" + std::to_string(seed)};
      std::vector<std::string> b = a;
      b.push_back("grid.building_footprints=[]");
      const double with = run(with_overrides(ScenarioConfig{}, a)).mean_rate_bps;
      const double without = run(with_overrides(ScenarioConfig{}, b)).mean_rate_bps;
      EXPECT_GE(without, with) << strategy << " seed " << seed;
    }
  }
}

TEST(Engine, MetricsAreConsistent) {
  RunOptions o;
  o.sample_interval = 0.1;
  const MetricsRecord m = run(small(), o);
  EXPECT_NEAR(m.measured_time, 2.0, 1e-12);
  EXPECT_EQ(m.vehicle_rate_bps.size(), 8u);
  EXPECT_EQ(m.rsu_mean_served.size(), 16u);
  double total = 0.0;
  for (double r : m.vehicle_rate_bps) total += r;
  EXPECT_DOUBLE_EQ(m.network_throughput_bps, total);
  EXPECT_DOUBLE_EQ(m.mean_rate_bps, total / 8.0);
  EXPECT_GE(m.misalignment_fraction, 0.0);
  EXPECT_LE(m.misalignment_fraction, 1.0);
  EXPECT_GE(m.outage_fraction, 0.0);
  EXPECT_LE(m.outage_fraction, 1.0);
  EXPECT_EQ(m.samples.size(), 8u * 20u);
  EXPECT_NEAR(m.samples.front().t, 1.0, 1e-12);
}

TEST(Engine, TimeAdvancesOneStepPerTick) {
  World w(small());
  EXPECT_EQ(w.total_ticks(), 3000);
  w.tick();
  w.tick();
  EXPECT_EQ(w.tick_index(), 2);
  EXPECT_NEAR(w.time(), 0.002, 1e-15);
}

TEST(Engine, RejectsBadInput) {
  ScenarioConfig bad;
  bad.vehicle_count = -1;
  EXPECT_THROW(World{bad}, ConfigError);
  RunOptions o = parked_vehicle();
  (*o.initial_vehicles)[0].id = 3;
  EXPECT_THROW(World(parked_config(Strategy::Samba), o), ConfigError);
}

TEST(Sweep, ReplicationsShareSeeds) {
  const ScenarioConfig base = small({"sim_duration=2"});
  const std::vector<double> values{4.0};
  const auto one = sweep(base, "vehicle_count", values, 1, 1);
  const auto two = sweep(base, "vehicle_count", values, 2, 1);
  ScenarioConfig first = config_for_point(base, "vehicle_count", 4.0);
  first.master_seed = replication_seed(base.master_seed, 0);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].mean_rate_bps, run(first).mean_rate_bps);
  EXPECT_EQ(one[0].std_rate_bps, 0.0);
  first.master_seed = replication_seed(base.master_seed, 1);
  EXPECT_DOUBLE_EQ(two[0].mean_rate_bps, 0.5 * (one[0].mean_rate_bps + run(first).mean_rate_bps));
  EXPECT_EQ(two[0].replications, 2);
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
  const ScenarioConfig base = small({"sim_duration=2"});
  const std::vector<double> values{2.0, 6.0};
  const auto serial = sweep(base, "vehicle_count", values, 2, 1);
  const auto parallel = sweep(base, "vehicle_count", values, 2, 3);
  ASSERT_EQ(serial.size(), 2u);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].mean_rate_bps, parallel[i].mean_rate_bps);
    EXPECT_EQ(serial[i].std_throughput_bps, parallel[i].std_throughput_bps);
    EXPECT_EQ(serial[i].value, values[i]);
  }
}

TEST(Sweep, AxisValidation) {
  const ScenarioConfig base = small();
  EXPECT_TRUE(is_sweepable(base, "mean_speed"));
  EXPECT_FALSE(is_sweepable(base, "strategy"));
  EXPECT_FALSE(is_sweepable(base, "grid"));
  const std::vector<double> values{1.0};
  EXPECT_THROW(sweep(base, "no_such_field", values, 1), ConfigError);
  EXPECT_THROW(sweep(base, "strategy", values, 1), ConfigError);
  EXPECT_THROW(sweep(base, "vehicle_count", values, 0), ConfigError);
  const std::vector<double> negative{-3.0};
  EXPECT_THROW(sweep(base, "vehicle_count", negative, 1), ConfigError);
}
