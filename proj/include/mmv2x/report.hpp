#pragma once

// CSV and manifest writers. Numbers use the shortest round-trip form, so
// identical runs produce identical bytes.

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "config.hpp"
#include "engine.hpp"
#include "mac.hpp"

namespace mmv2x {

#ifndef MMV2X_VERSION
#define MMV2X_VERSION "unknown"
#endif

inline constexpr int kManifestVersion = 1;
inline constexpr const char* kCodeVersion = MMV2X_VERSION;

inline void write_metrics_csv(std::ostream& out, std::span<const StepSample> samples) {
  out << "t,vehicle_id,rate_bps,serving_rsu,aligned\n";
  for (const auto& s : samples)
    fmt::print(out, "{},{},{},{},{}\n", s.t, s.vehicle_id, s.rate_bps, s.serving_rsu, s.aligned ? 1 : 0);
}

inline void write_trajectory_csv(std::ostream& out, std::span<const TrajectorySample> rows) {
  out << "t,vehicle_id,x,y,heading,speed,yaw_rate\n";
  for (const auto& r : rows)
    fmt::print(out, "{},{},{},{},{},{},{}\n", r.t, r.vehicle_id, r.position.x, r.position.y, r.heading,
               r.speed, r.yaw_rate);
}

inline void write_vehicle_summary_csv(std::ostream& out, const MetricsRecord& m) {
  out << "vehicle_id,mean_rate_bps\n";
  for (std::size_t i = 0; i < m.vehicle_rate_bps.size(); ++i)
    fmt::print(out, "{},{}\n", i, m.vehicle_rate_bps[i]);
}

inline const char* kSweepHeader =
    "strategy,axis,value,replications,mean_rate_bps,std_rate_bps,mean_throughput_bps,"
    "std_throughput_bps,misalignment_fraction,outage_fraction\n";

inline void write_sweep_rows(std::ostream& out, std::span<const SweepRow> rows) {
  for (const auto& r : rows)
    fmt::print(out, "{},{},{},{},{},{},{},{},{},{}\n", to_string(r.strategy), r.axis, r.value,
               r.replications, r.mean_rate_bps, r.std_rate_bps, r.mean_throughput_bps,
               r.std_throughput_bps, r.mean_misalignment, r.mean_outage);
}

struct CollisionRow {
  int x = 0;
  int v = 0;
  double p_formula = 0.0;
  double p_montecarlo = 0.0;
  int trials = 0;
};

/// Formula value next to the Monte Carlo frequency of "some vehicle shares
/// its slot" for every (x, v) pair; one generator per pair.
inline std::vector<CollisionRow> collision_table(int x_min, int x_max, int v_min, int v_max, int trials,
                                                 std::uint64_t seed) {
  if (x_min < 1 || x_max < x_min || v_min < 0 || v_max < v_min || trials < 0)
    throw ConfigError("collisions", "ranges must be nonempty with x >= 1, v >= 0, trials >= 0");
  const RandomStreams streams(seed);
  std::vector<CollisionRow> rows;
  for (int x = x_min; x <= x_max; ++x) {
    for (int v = v_min; v <= v_max; ++v) {
      Rng rng = streams.substream(Stream::SlotChoice,
                                  static_cast<std::uint64_t>(x) << 32 | static_cast<std::uint64_t>(v));
      int hits = 0;
      for (int t = 0; t < trials; ++t)
        if (simulate_abft(v, x, rng).any_collision()) ++hits;
      rows.push_back({x, v, collision_probability(static_cast<unsigned>(x), static_cast<unsigned>(v)),
                      trials > 0 ? static_cast<double>(hits) / trials : 0.0, trials});
    }
  }
  return rows;
}

inline void write_collisions_csv(std::ostream& out, std::span<const CollisionRow> rows) {
  out << "x,v,p_formula,p_montecarlo,trials\n";
  for (const auto& r : rows)
    fmt::print(out, "{},{},{},{},{}\n", r.x, r.v, r.p_formula, r.p_montecarlo, r.trials);
}

/// Run manifest: the fully resolved config plus everything else the output
/// depends on. Feeding it back as --config reproduces the run.
inline Json make_manifest(const std::string& command, const ScenarioConfig& cfg,
                          std::span<const std::string> overrides, const Json& options) {
  Json m;
  m["manifest_version"] = kManifestVersion;
  m["command"] = command;
  m["code_version"] = kCodeVersion;
  m["seed"] = cfg.master_seed;
  m["overrides"] = Json(std::vector<std::string>(overrides.begin(), overrides.end()));
  m["options"] = options;
  m["config"] = to_json(cfg);
  return m;
}

struct LinkBudgetReport {
  double distance = 0.0;
  double theta = 0.0;
  double shadow_db = 0.0;
  double gain_dbi = 0.0;
  double path_loss_db = 0.0;
  double rx_power_dbm = 0.0;
  double noise_dbm = 0.0;
  double snr_db = 0.0;
  std::optional<McsChoice> mcs;
  AdaptedBeam adapted;           // nominal policy at the same shadow value
  AdaptedBeam adapted_expected;  // expected-rate policy
};

inline LinkBudgetReport link_budget(double d, double theta, double shadow_db, const ScenarioConfig& cfg) {
  if (!(d > 0.0)) throw ConfigError("distance", "must be positive");
  if (!(theta > 0.0 && theta < kTwoPi)) throw ConfigError("theta", "must lie in (0, 360) degrees");
  LinkBudgetReport r;
  r.distance = d;
  r.theta = theta;
  r.shadow_db = shadow_db;
  r.gain_dbi = antenna_gain_db(theta);
  r.path_loss_db = path_loss(d, cfg, shadow_db);
  r.rx_power_dbm = received_power(r.gain_dbi, r.gain_dbi, d, cfg, shadow_db);
  r.noise_dbm = noise_power(cfg);
  r.snr_db = snr(theta, d, shadow_db, cfg);
  r.mcs = select_mcs(r.snr_db, cfg.mcs);
  const auto grid = BeamwidthGrid::from_config(cfg);
  r.adapted = adapt_beamwidth(d, shadow_db, cfg, grid);
  r.adapted_expected = adapt_beamwidth_expected(d, planning_cross_track_sigma(cfg), cfg, grid);
  return r;
}

inline void write_link_budget(std::ostream& out, const LinkBudgetReport& r) {
  fmt::print(out, "distance_m            {:.3f}\n", r.distance);
  fmt::print(out, "beamwidth_deg         {:.3f}\n", rad_to_deg(r.theta));
  fmt::print(out, "shadow_fading_db      {:.3f}\n", r.shadow_db);
  fmt::print(out, "gain_dbi              {:.2f}\n", r.gain_dbi);
  fmt::print(out, "path_loss_db          {:.2f}\n", r.path_loss_db);
  fmt::print(out, "rx_power_dbm          {:.2f}\n", r.rx_power_dbm);
  fmt::print(out, "noise_dbm             {:.2f}\n", r.noise_dbm);
  fmt::print(out, "snr_db                {:.2f}\n", r.snr_db);
  if (r.mcs) fmt::print(out, "mcs                   {} ({:.0f} Mb/s)\n", r.mcs->index, r.mcs->rate_bps / 1e6);
  else fmt::print(out, "mcs                   none (outage)\n");
  fmt::print(out, "rate_bps              {}\n", r.mcs ? r.mcs->rate_bps : 0.0);
  fmt::print(out, "adapted_beamwidth_deg {:.1f} (nominal, {:.0f} Mb/s)\n", rad_to_deg(r.adapted.theta),
             r.adapted.rate_bps / 1e6);
  fmt::print(out, "adapted_beamwidth_deg {:.1f} (expected_rate, {:.0f} Mb/s expected)\n",
             rad_to_deg(r.adapted_expected.theta), r.adapted_expected.rate_bps / 1e6);
}

}  // namespace mmv2x
