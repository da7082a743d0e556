#pragma once

// Scenario parameters, road-grid geometry and the MCS table, plus their JSON
// representation. All quantities are SI unless the field name says otherwise
// (powers in dBm, losses in dB, attenuation rates in dB/km, angles in rad).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geometry.hpp"

namespace mmv2x {

using Json = nlohmann::ordered_json;

/// Invalid or unparsable configuration. `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Strategy { Legacy, Samba };
enum class PredictionVariant { PaperLiteral, GeometricConsistent };

inline std::string to_string(Strategy s) { return s == Strategy::Legacy ? "legacy" : "samba"; }

inline Strategy strategy_from_string(const std::string& s) {
  if (s == "legacy") return Strategy::Legacy;
  if (s == "samba") return Strategy::Samba;
  throw ConfigError("strategy", "expected 'legacy' or 'samba', got '" + s + "'");
}

inline std::string to_string(PredictionVariant v) {
  return v == PredictionVariant::PaperLiteral ? "paper_literal" : "geometric";
}

inline PredictionVariant prediction_variant_from_string(const std::string& s) {
  if (s == "paper_literal") return PredictionVariant::PaperLiteral;
  if (s == "geometric") return PredictionVariant::GeometricConsistent;
  throw ConfigError("prediction_variant",
                    "expected 'geometric' or 'paper_literal', got '" + s + "'");
}

/// How the beamwidth planner treats the unknown shadowing. Nominal plans at
/// a single assumed S_f value; ExpectedRate maximises the rate expected over
/// the shadowing distribution and the reported-position error.
enum class AdaptPolicy { Nominal, ExpectedRate };

inline std::string to_string(AdaptPolicy p) {
  return p == AdaptPolicy::Nominal ? "nominal" : "expected_rate";
}

inline AdaptPolicy adapt_policy_from_string(const std::string& s) {
  if (s == "nominal") return AdaptPolicy::Nominal;
  if (s == "expected_rate") return AdaptPolicy::ExpectedRate;
  throw ConfigError("adapt_policy", "expected 'nominal' or 'expected_rate', got '" + s + "'");
}

// ---------------------------------------------------------------------------
// MCS table

struct McsEntry {
  double threshold_db = 0.0;
  double rate_bps = 0.0;
  bool operator==(const McsEntry&) const = default;
};

struct McsTable {
  std::vector<McsEntry> entries;

  bool operator==(const McsTable&) const = default;

  /// Seven single-carrier style entries. Not taken from any measurement;
  /// absolute rates in every experiment scale with this table.
  static McsTable default_table() {
    return McsTable{{{1.0, 385e6},
                     {2.0, 770e6},
                     {3.0, 1155e6},
                     {5.0, 1540e6},
                     {6.0, 1925e6},
                     {8.0, 2310e6},
                     {13.0, 4620e6}}};
  }

  void validate() const {
    if (entries.empty()) throw ConfigError("mcs", "table must have at least one entry");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      if (!std::isfinite(e.threshold_db) || !std::isfinite(e.rate_bps) || e.rate_bps <= 0.0)
        throw ConfigError("mcs", "entry " + std::to_string(i) + " must be finite with rate > 0");
      if (i > 0 && !(e.threshold_db > entries[i - 1].threshold_db))
        throw ConfigError("mcs", "thresholds must be strictly increasing");
      if (i > 0 && !(e.rate_bps > entries[i - 1].rate_bps))
        throw ConfigError("mcs", "rates must be strictly increasing");
    }
  }
};

// ---------------------------------------------------------------------------
// Road grid

/// Manhattan grid: `road_count_per_axis` roads in each direction, each with
/// `lanes_per_direction` lanes per travel direction, buildings filling the
/// blocks between roads and one RSU on the top-right corner of every block.
struct GridGeometry {
  double area_side = 200.0;
  int road_count_per_axis = 5;
  double lane_width = 3.2;
  int lanes_per_direction = 2;
  std::vector<Vec2> rsu_positions;
  std::vector<Rect> building_footprints;

  bool operator==(const GridGeometry&) const = default;

  double road_width() const { return 2.0 * lanes_per_direction * lane_width; }
  double half_road() const { return 0.5 * road_width(); }

  /// Centre-line coordinate of road k. Outer roads sit flush with the area
  /// edges so every road lies fully inside the area.
  double road_center(int k) const {
    if (road_count_per_axis == 1) return 0.5 * area_side;
    return half_road() + k * road_pitch();
  }

  double road_pitch() const {
    if (road_count_per_axis == 1) return area_side;
    return (area_side - road_width()) / (road_count_per_axis - 1);
  }

  /// Offset of lane `slot` (0 = innermost) from the road centre line.
  double lane_offset(int slot) const { return lane_width * (0.5 + slot); }

  void validate() const {
    if (!(area_side > 0.0) || !std::isfinite(area_side))
      throw ConfigError("grid.area_side", "must be positive and finite");
    if (road_count_per_axis < 1) throw ConfigError("grid.road_count_per_axis", "must be >= 1");
    if (!(lane_width > 0.0)) throw ConfigError("grid.lane_width", "must be positive");
    if (lanes_per_direction < 1) throw ConfigError("grid.lanes_per_direction", "must be >= 1");
    if (road_width() * road_count_per_axis > area_side)
      throw ConfigError("grid", "roads do not fit inside the area");
    if (rsu_positions.empty()) throw ConfigError("grid.rsu_positions", "need at least one RSU");
    for (std::size_t i = 0; i < building_footprints.size(); ++i) {
      const Rect& r = building_footprints[i];
      if (!(r.x0 < r.x1 && r.y0 < r.y1))
        throw ConfigError("grid.building_footprints", "degenerate rectangle " + std::to_string(i));
      if (r.x0 < 0.0 || r.y0 < 0.0 || r.x1 > area_side || r.y1 > area_side)
        throw ConfigError("grid.building_footprints",
                          "rectangle " + std::to_string(i) + " leaves the area");
      for (std::size_t j = 0; j < i; ++j) {
        if (r.overlaps_interior(building_footprints[j]))
          throw ConfigError("grid.building_footprints",
                            "rectangles " + std::to_string(j) + " and " + std::to_string(i) +
                                " overlap");
      }
    }
    for (std::size_t i = 0; i < rsu_positions.size(); ++i) {
      const Vec2 p = rsu_positions[i];
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw ConfigError("grid.rsu_positions", "non-finite position " + std::to_string(i));
      for (const Rect& r : building_footprints) {
        if (r.strictly_contains(p))
          throw ConfigError("grid.rsu_positions",
                            "RSU " + std::to_string(i) + " lies inside a building");
      }
    }
  }
};

/// Grid with buildings on every block and an RSU on each block's top-right
/// corner.
inline GridGeometry build_grid(double area_side, int road_count, double lane_width,
                               int lanes_per_direction) {
  GridGeometry g;
  g.area_side = area_side;
  g.road_count_per_axis = road_count;
  g.lane_width = lane_width;
  g.lanes_per_direction = lanes_per_direction;
  const double h = g.half_road();
  for (int j = 0; j + 1 < road_count; ++j) {
    for (int i = 0; i + 1 < road_count; ++i) {
      const Rect block{g.road_center(i) + h, g.road_center(j) + h, g.road_center(i + 1) - h,
                       g.road_center(j + 1) - h};
      g.building_footprints.push_back(block);
      g.rsu_positions.push_back({block.x1, block.y1});
    }
  }
  return g;
}

/// 200 m square, five roads per axis, two 3.2 m lanes per direction.
inline GridGeometry build_default_grid() { return build_grid(200.0, 5, 3.2, 2); }

// ---------------------------------------------------------------------------
// Scenario

struct ScenarioConfig {
  // Link budget.
  double carrier_frequency = 60e9;
  double bandwidth = 2.16e9;
  double path_loss_exponent = 2.66;
  double atmospheric_attenuation = 15.0;  // dB/km
  double rain_attenuation = 25.0;         // dB/km
  double channel_attenuation = 70.0;      // dB
  double tx_power = 10.0;                 // dBm
  double noise_figure = 6.0;              // dB
  double noise_floor = -174.0;            // dBm/Hz
  double shadow_sigma = 5.8;              // dB

  // Timing.
  double bi_length = 0.030;
  double dsrc_beacon_interval = 0.100;
  double samba_update_interval = 0.030;
  double position_refresh_interval = 1.0;  // GPS error redraw period
  double sim_step = 0.001;
  double sim_duration = 120.0;
  double warmup = 10.0;

  // Traffic and sensing.
  int vehicle_count = 50;
  double mean_speed = 14.0;
  double speed_variance = 2.0;
  double speed_resample_period = 1.0;
  double turn_straight_prob = 0.5;
  double turn_left_prob = 0.25;
  double turn_right_prob = 0.25;
  double lane_change_rate = 0.1;  // changes per second
  double position_error_mean = 3.0;
  double position_error_std = 1.0;
  double beacon_delivery_ratio = 1.0;

  // Beams.
  double fixed_beamwidth = deg_to_rad(15.0);
  bool beamwidth_adaptation = true;
  double adapt_theta_min = deg_to_rad(1.0);
  double adapt_theta_max = deg_to_rad(60.0);
  double adapt_theta_step = deg_to_rad(0.5);
  AdaptPolicy adapt_policy = AdaptPolicy::ExpectedRate;
  double adapt_planning_shadow = 0.0;  // dB assumed for S_f by the nominal policy
  double range_limit = 300.0;  // longer than the default area diagonal
  Strategy strategy = Strategy::Samba;
  PredictionVariant prediction_variant = PredictionVariant::GeometricConsistent;
  double omega_min = 1e-6;
  double steer_lookahead_fraction = 0.5;  // of samba_update_interval

  // Legacy beamforming training.
  int sector_count = 16;
  int abft_slots = 8;
  double ssw_frame_time = 15.8e-6;
  double reconfig_time = 50e-9;
  int brp_frames = 4;

  GridGeometry grid = build_default_grid();
  McsTable mcs = McsTable::default_table();
  std::uint64_t master_seed = 1;

  bool operator==(const ScenarioConfig&) const = default;

  /// Airtime of one training frame including the array reconfiguration.
  double training_frame_time() const { return ssw_frame_time + reconfig_time; }

  /// Largest per-BI training overhead the legacy model can charge.
  double worst_case_legacy_overhead() const {
    return (sector_count + static_cast<double>(abft_slots) * brp_frames) * training_frame_time();
  }

  void validate() const;
};

namespace detail {

inline void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ConfigError(field, what);
}

inline bool finite(double v) { return std::isfinite(v); }

}  // namespace detail

inline void ScenarioConfig::validate() const {
  using detail::finite;
  using detail::require;
  require(finite(carrier_frequency) && carrier_frequency > 0.0, "carrier_frequency",
          "must be positive and finite");
  require(finite(bandwidth) && bandwidth > 0.0, "bandwidth", "must be positive and finite");
  require(finite(path_loss_exponent) && path_loss_exponent >= 0.0, "path_loss_exponent",
          "must be finite and >= 0");
  require(finite(atmospheric_attenuation), "atmospheric_attenuation", "must be finite");
  require(finite(rain_attenuation), "rain_attenuation", "must be finite");
  require(finite(channel_attenuation), "channel_attenuation", "must be finite");
  require(finite(tx_power), "tx_power", "must be finite");
  require(finite(noise_figure), "noise_figure", "must be finite");
  require(finite(noise_floor), "noise_floor", "must be finite");
  require(finite(shadow_sigma) && shadow_sigma >= 0.0, "shadow_sigma", "must be finite and >= 0");

  require(finite(sim_step) && sim_step > 0.0, "sim_step", "must be positive");
  require(finite(samba_update_interval) && samba_update_interval >= sim_step,
          "samba_update_interval", "must be >= sim_step");
  require(finite(dsrc_beacon_interval) && dsrc_beacon_interval >= samba_update_interval,
          "dsrc_beacon_interval", "must be >= samba_update_interval");
  require(finite(bi_length) && bi_length >= sim_step, "bi_length", "must be >= sim_step");
  {
    auto whole_steps = [this](double interval) {
      const double n = interval / sim_step;
      return std::abs(n - std::round(n)) < 1e-6 * std::max(1.0, n);
    };
    require(whole_steps(bi_length), "bi_length", "must be a whole number of sim_step");
    require(whole_steps(dsrc_beacon_interval), "dsrc_beacon_interval",
            "must be a whole number of sim_step");
    require(whole_steps(samba_update_interval), "samba_update_interval",
            "must be a whole number of sim_step");
  }
  require(finite(position_refresh_interval) && position_refresh_interval >= 0.0,
          "position_refresh_interval", "must be >= 0");
  require(finite(sim_duration) && sim_duration > 0.0, "sim_duration", "must be positive");
  require(finite(warmup) && warmup >= 0.0 && warmup < sim_duration, "warmup",
          "must be >= 0 and shorter than sim_duration");

  require(vehicle_count >= 0, "vehicle_count", "must be >= 0");
  require(finite(mean_speed) && mean_speed >= 0.0, "mean_speed", "must be >= 0");
  require(finite(speed_variance) && speed_variance >= 0.0, "speed_variance", "must be >= 0");
  require(finite(speed_resample_period) && speed_resample_period > 0.0, "speed_resample_period",
          "must be positive");
  require(turn_straight_prob >= 0.0 && turn_left_prob >= 0.0 && turn_right_prob >= 0.0,
          "turn_straight_prob", "turn probabilities must be >= 0");
  require(std::abs(turn_straight_prob + turn_left_prob + turn_right_prob - 1.0) < 1e-9,
          "turn_straight_prob", "turn probabilities must sum to 1");
  require(finite(lane_change_rate) && lane_change_rate >= 0.0, "lane_change_rate",
          "must be >= 0");
  require(finite(position_error_mean) && position_error_mean >= 0.0, "position_error_mean",
          "must be >= 0 (0 disables the error)");
  require(finite(position_error_std) && position_error_std >= 0.0, "position_error_std",
          "must be >= 0");
  require(position_error_mean == 0.0 || position_error_std > 0.0, "position_error_std",
          "must be positive when position_error_mean > 0");
  require(beacon_delivery_ratio >= 0.0 && beacon_delivery_ratio <= 1.0, "beacon_delivery_ratio",
          "must lie in [0, 1]");

  require(fixed_beamwidth > 0.0 && fixed_beamwidth < kTwoPi, "fixed_beamwidth",
          "must lie in (0, 2*pi)");
  require(adapt_theta_min > 0.0 && adapt_theta_min <= adapt_theta_max, "adapt_theta_min",
          "must be positive and <= adapt_theta_max");
  require(adapt_theta_max < kTwoPi, "adapt_theta_max", "must be < 2*pi");
  require(adapt_theta_step > 0.0, "adapt_theta_step", "must be positive");
  require(finite(adapt_planning_shadow), "adapt_planning_shadow", "must be finite");
  require(range_limit > 0.0, "range_limit", "must be positive");
  require(finite(omega_min) && omega_min >= 0.0, "omega_min", "must be >= 0");
  require(steer_lookahead_fraction >= 0.0 && steer_lookahead_fraction <= 1.0,
          "steer_lookahead_fraction", "must lie in [0, 1]");

  require(sector_count >= 2, "sector_count", "must be >= 2 (a sector must be narrower than 2*pi)");
  require(abft_slots >= 1, "abft_slots", "must be >= 1");
  require(finite(ssw_frame_time) && ssw_frame_time >= 0.0, "ssw_frame_time", "must be >= 0");
  require(finite(reconfig_time) && reconfig_time >= 0.0, "reconfig_time", "must be >= 0");
  require(brp_frames >= 0, "brp_frames", "must be >= 0");
  require(worst_case_legacy_overhead() < bi_length, "bi_length",
          "legacy training overhead would fill the whole beacon interval");

  grid.validate();
  mcs.validate();
}

// ---------------------------------------------------------------------------
// JSON

inline Json to_json(const GridGeometry& g) {
  Json rsus = Json::array();
  for (const Vec2& p : g.rsu_positions) rsus.push_back({p.x, p.y});
  Json rects = Json::array();
  for (const Rect& r : g.building_footprints) rects.push_back({r.x0, r.y0, r.x1, r.y1});
  return Json{{"area_side", g.area_side},
              {"road_count_per_axis", g.road_count_per_axis},
              {"lane_width", g.lane_width},
              {"lanes_per_direction", g.lanes_per_direction},
              {"rsu_positions", rsus},
              {"building_footprints", rects}};
}

inline Json to_json(const McsTable& t) {
  Json a = Json::array();
  for (const auto& e : t.entries) a.push_back({{"threshold_db", e.threshold_db}, {"rate_bps", e.rate_bps}});
  return a;
}

inline Json to_json(const ScenarioConfig& c) {
  return Json{{"carrier_frequency", c.carrier_frequency},
              {"bandwidth", c.bandwidth},
              {"path_loss_exponent", c.path_loss_exponent},
              {"atmospheric_attenuation", c.atmospheric_attenuation},
              {"rain_attenuation", c.rain_attenuation},
              {"channel_attenuation", c.channel_attenuation},
              {"tx_power", c.tx_power},
              {"noise_figure", c.noise_figure},
              {"noise_floor", c.noise_floor},
              {"shadow_sigma", c.shadow_sigma},
              {"bi_length", c.bi_length},
              {"dsrc_beacon_interval", c.dsrc_beacon_interval},
              {"samba_update_interval", c.samba_update_interval},
              {"position_refresh_interval", c.position_refresh_interval},
              {"sim_step", c.sim_step},
              {"sim_duration", c.sim_duration},
              {"warmup", c.warmup},
              {"vehicle_count", c.vehicle_count},
              {"mean_speed", c.mean_speed},
              {"speed_variance", c.speed_variance},
              {"speed_resample_period", c.speed_resample_period},
              {"turn_straight_prob", c.turn_straight_prob},
              {"turn_left_prob", c.turn_left_prob},
              {"turn_right_prob", c.turn_right_prob},
              {"lane_change_rate", c.lane_change_rate},
              {"position_error_mean", c.position_error_mean},
              {"position_error_std", c.position_error_std},
              {"beacon_delivery_ratio", c.beacon_delivery_ratio},
              {"fixed_beamwidth", c.fixed_beamwidth},
              {"beamwidth_adaptation", c.beamwidth_adaptation},
              {"adapt_theta_min", c.adapt_theta_min},
              {"adapt_theta_max", c.adapt_theta_max},
              {"adapt_theta_step", c.adapt_theta_step},
              {"adapt_policy", to_string(c.adapt_policy)},
              {"adapt_planning_shadow", c.adapt_planning_shadow},
              {"range_limit", c.range_limit},
              {"strategy", to_string(c.strategy)},
              {"prediction_variant", to_string(c.prediction_variant)},
              {"omega_min", c.omega_min},
              {"steer_lookahead_fraction", c.steer_lookahead_fraction},
              {"sector_count", c.sector_count},
              {"abft_slots", c.abft_slots},
              {"ssw_frame_time", c.ssw_frame_time},
              {"reconfig_time", c.reconfig_time},
              {"brp_frames", c.brp_frames},
              {"grid", to_json(c.grid)},
              {"mcs", to_json(c.mcs)},
              {"master_seed", c.master_seed}};
}

namespace detail {

template <typename T>
T get_field(const Json& j, const char* key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.empty() ? key : path + "." + key, e.what());
  }
}

inline GridGeometry grid_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("grid", "must be an object");
  GridGeometry g;
  g.area_side = get_field<double>(j, "area_side", "grid");
  g.road_count_per_axis = get_field<int>(j, "road_count_per_axis", "grid");
  g.lane_width = get_field<double>(j, "lane_width", "grid");
  g.lanes_per_direction = get_field<int>(j, "lanes_per_direction", "grid");
  try {
    for (const auto& p : j.at("rsu_positions")) {
      if (p.size() != 2) throw ConfigError("grid.rsu_positions", "each entry must be [x, y]");
      g.rsu_positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    for (const auto& r : j.at("building_footprints")) {
      if (r.size() != 4)
        throw ConfigError("grid.building_footprints", "each entry must be [x0, y0, x1, y1]");
      g.building_footprints.push_back(
          {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(), r.at(3).get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("grid", e.what());
  }
  return g;
}

inline McsTable mcs_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("mcs", "must be an array");
  McsTable t;
  for (const auto& e : j) {
    t.entries.push_back({get_field<double>(e, "threshold_db", "mcs"), get_field<double>(e, "rate_bps", "mcs")});
  }
  return t;
}

}  // namespace detail

/// Strict conversion: every field must be present with the right type.
inline ScenarioConfig config_from_json(const Json& j) {
  using detail::get_field;
  ScenarioConfig c;
  c.carrier_frequency = get_field<double>(j, "carrier_frequency", "");
  c.bandwidth = get_field<double>(j, "bandwidth", "");
  c.path_loss_exponent = get_field<double>(j, "path_loss_exponent", "");
  c.atmospheric_attenuation = get_field<double>(j, "atmospheric_attenuation", "");
  c.rain_attenuation = get_field<double>(j, "rain_attenuation", "");
  c.channel_attenuation = get_field<double>(j, "channel_attenuation", "");
  c.tx_power = get_field<double>(j, "tx_power", "");
  c.noise_figure = get_field<double>(j, "noise_figure", "");
  c.noise_floor = get_field<double>(j, "noise_floor", "");
  c.shadow_sigma = get_field<double>(j, "shadow_sigma", "");
  c.bi_length = get_field<double>(j, "bi_length", "");
  c.dsrc_beacon_interval = get_field<double>(j, "dsrc_beacon_interval", "");
  c.samba_update_interval = get_field<double>(j, "samba_update_interval", "");
  c.position_refresh_interval = get_field<double>(j, "position_refresh_interval", "");
  c.sim_step = get_field<double>(j, "sim_step", "");
  c.sim_duration = get_field<double>(j, "sim_duration", "");
  c.warmup = get_field<double>(j, "warmup", "");
  c.vehicle_count = get_field<int>(j, "vehicle_count", "");
  c.mean_speed = get_field<double>(j, "mean_speed", "");
  c.speed_variance = get_field<double>(j, "speed_variance", "");
  c.speed_resample_period = get_field<double>(j, "speed_resample_period", "");
  c.turn_straight_prob = get_field<double>(j, "turn_straight_prob", "");
  c.turn_left_prob = get_field<double>(j, "turn_left_prob", "");
  c.turn_right_prob = get_field<double>(j, "turn_right_prob", "");
  c.lane_change_rate = get_field<double>(j, "lane_change_rate", "");
  c.position_error_mean = get_field<double>(j, "position_error_mean", "");
  c.position_error_std = get_field<double>(j, "position_error_std", "");
  c.beacon_delivery_ratio = get_field<double>(j, "beacon_delivery_ratio", "");
  c.fixed_beamwidth = get_field<double>(j, "fixed_beamwidth", "");
  c.beamwidth_adaptation = get_field<bool>(j, "beamwidth_adaptation", "");
  c.adapt_theta_min = get_field<double>(j, "adapt_theta_min", "");
  c.adapt_theta_max = get_field<double>(j, "adapt_theta_max", "");
  c.adapt_theta_step = get_field<double>(j, "adapt_theta_step", "");
  c.adapt_policy = adapt_policy_from_string(get_field<std::string>(j, "adapt_policy", ""));
  c.adapt_planning_shadow = get_field<double>(j, "adapt_planning_shadow", "");
  c.range_limit = get_field<double>(j, "range_limit", "");
  c.strategy = strategy_from_string(get_field<std::string>(j, "strategy", ""));
  c.prediction_variant =
      prediction_variant_from_string(get_field<std::string>(j, "prediction_variant", ""));
  c.omega_min = get_field<double>(j, "omega_min", "");
  c.steer_lookahead_fraction = get_field<double>(j, "steer_lookahead_fraction", "");
  c.sector_count = get_field<int>(j, "sector_count", "");
  c.abft_slots = get_field<int>(j, "abft_slots", "");
  c.ssw_frame_time = get_field<double>(j, "ssw_frame_time", "");
  c.reconfig_time = get_field<double>(j, "reconfig_time", "");
  c.brp_frames = get_field<int>(j, "brp_frames", "");
  c.grid = detail::grid_from_json(j.at("grid"));
  c.mcs = detail::mcs_from_json(j.at("mcs"));
  c.master_seed = get_field<std::uint64_t>(j, "master_seed", "");
  return c;
}

/// Overlays a partial config document onto the defaults. Unknown keys are
/// rejected. A partial "grid" object re-derives RSUs and buildings from its
/// geometry unless it lists them explicitly.
inline ScenarioConfig config_from_partial_json(const Json& partial) {
  if (!partial.is_object()) throw ConfigError("", "config document must be a JSON object");
  Json merged = to_json(ScenarioConfig{});
  for (const auto& [key, value] : partial.items()) {
    if (!merged.contains(key)) throw ConfigError(key, "unknown field");
    if (key == "grid") {
      if (!value.is_object()) throw ConfigError("grid", "must be an object");
      Json& g = merged["grid"];
      for (const auto& [gk, gv] : value.items()) {
        if (!g.contains(gk)) throw ConfigError("grid." + gk, "unknown field");
        g[gk] = gv;
      }
      const bool explicit_rsus = value.contains("rsu_positions");
      const bool explicit_buildings = value.contains("building_footprints");
      if (!explicit_rsus || !explicit_buildings) {
        const GridGeometry derived = build_grid(
            detail::get_field<double>(g, "area_side", "grid"),
            detail::get_field<int>(g, "road_count_per_axis", "grid"),
            detail::get_field<double>(g, "lane_width", "grid"),
            detail::get_field<int>(g, "lanes_per_direction", "grid"));
        const Json dj = to_json(derived);
        if (!explicit_rsus) g["rsu_positions"] = dj["rsu_positions"];
        if (!explicit_buildings) g["building_footprints"] = dj["building_footprints"];
      }
    } else {
      merged[key] = value;
    }
  }
  ScenarioConfig c = config_from_json(merged);
  c.validate();
  return c;
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", origin + ": " + e.what());
  }
}

/// Loads a scenario file. Run manifests written by the CLI are accepted too;
/// their embedded "config" object is used.
inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const Json doc = parse_json_text(buf.str(), path);
  if (doc.is_object() && doc.contains("manifest_version") && doc.contains("config"))
    return config_from_partial_json(doc.at("config"));
  return config_from_partial_json(doc);
}

inline std::string serialize(const ScenarioConfig& c) { return to_json(c).dump(2) + "\n"; }

/// Parses a KEY=VALUE override. Dotted keys address nested objects
/// ("grid.area_side"). VALUE is read as JSON when it parses, otherwise as a
/// plain string.
inline void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("", "override '" + assignment + "' is not KEY=VALUE");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) throw ConfigError(key, "unknown field");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

inline ScenarioConfig with_overrides(const ScenarioConfig& base,
                                     std::span<const std::string> assignments) {
  Json doc = to_json(base);
  bool grid_shape_changed = false;
  bool grid_lists_set = false;
  for (const auto& a : assignments) {
    apply_override(doc, a);
    const std::string key = a.substr(0, a.find('='));
    if (key == "grid.rsu_positions" || key == "grid.building_footprints") grid_lists_set = true;
    else if (key.rfind("grid.", 0) == 0) grid_shape_changed = true;
  }
  if (grid_shape_changed && !grid_lists_set) {
    Json g = doc["grid"];
    g.erase("rsu_positions");
    g.erase("building_footprints");
    doc["grid"] = g;
  }
  return config_from_partial_json(doc);
}

}  // namespace mmv2x
