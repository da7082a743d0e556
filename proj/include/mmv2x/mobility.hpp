#pragma once

// Vehicle motion on the Manhattan grid and the sensing-error processes that
// feed the beacons (GPS position error, beacon loss).
//
// Motion is lane-bound. Roads are straight lines spanning the whole area and
// the area is a torus for vehicles, so traffic density never changes. At each
// intersection entry a vehicle draws straight/left/right; turns follow a
// quarter circle centred on a corner of the intersection square.

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>

#include "config.hpp"
#include "geometry.hpp"
#include "random.hpp"

namespace mmv2x {

/// A travel lane. `axis` 0 roads run along y (vertical roads, centre at
/// x = road_center(road)); axis 1 roads run along x. `dir` is +1 towards
/// increasing coordinate, -1 otherwise. `slot` 0 is the lane nearest the
/// centre line.
struct LaneId {
  int axis = 0;
  int road = 0;
  int dir = 1;
  int slot = 0;
  bool operator==(const LaneId&) const = default;
};

inline double lane_heading(const LaneId& lane) {
  if (lane.axis == 0) return lane.dir > 0 ? 0.0 : kPi;
  return lane.dir > 0 ? 0.5 * kPi : -0.5 * kPi;
}

/// Cross-track coordinate of the lane centre line (x for axis 0, y for axis 1).
/// Traffic keeps right.
inline double lane_lateral(const LaneId& lane, const GridGeometry& grid) {
  const double c = grid.road_center(lane.road);
  const double o = grid.lane_offset(lane.slot);
  return lane.axis == 0 ? c + lane.dir * o : c - lane.dir * o;
}

inline Vec2 lane_point(const LaneId& lane, const GridGeometry& grid, double along) {
  const double lateral = lane_lateral(lane, grid);
  return lane.axis == 0 ? Vec2{lateral, along} : Vec2{along, lateral};
}

inline double lane_along(const LaneId& lane, Vec2 p) { return lane.axis == 0 ? p.y : p.x; }

struct TurnArc {
  Vec2 center;
  double radius = 0.0;
  int sense = 1;  // +1 clockwise (right turn), -1 counter-clockwise
  double remaining_angle = 0.0;
  LaneId target;
  bool operator==(const TurnArc&) const = default;
};

/// Content of a DSRC beacon as received by the infrastructure.
struct BeaconRecord {
  Vec2 estimated_position;
  double speed = 0.0;
  double yaw_rate = 0.0;  // heading rate, clockwise positive
  double heading = 0.0;
  double timestamp = 0.0;
  bool operator==(const BeaconRecord&) const = default;
};

/// Kinematic state of one vehicle. `yaw_rate` is the rate of change of
/// `heading` (rad/s, clockwise positive like the heading itself).
struct VehicleState {
  int id = 0;
  Vec2 true_position;
  double heading = 0.0;
  double speed = 0.0;
  double yaw_rate = 0.0;
  LaneId lane;
  std::optional<TurnArc> turn;
  double clock = 0.0;
  double next_speed_resample = 0.0;
  double next_lane_change = std::numeric_limits<double>::infinity();
  Vec2 gps_offset;
  double next_gps_refresh = 0.0;
  std::optional<BeaconRecord> last_beacon;

  bool operator==(const VehicleState&) const = default;
};

/// Per-vehicle generators. Keyed by vehicle id so vehicles never share draws.
struct VehicleStreams {
  Rng speed;
  Rng gps;
  Rng maneuver;
  Rng beacon;

  static VehicleStreams for_vehicle(const RandomStreams& streams, int id) {
    const auto key = static_cast<std::uint64_t>(id);
    return {streams.substream(Stream::Speed, key), streams.substream(Stream::GpsError, key),
            streams.substream(Stream::Maneuver, key), streams.substream(Stream::BeaconLoss, key)};
  }
};

struct MobilityParams {
  double mean_speed = 14.0;
  double speed_variance = 2.0;
  double speed_resample_period = 1.0;
  double straight_prob = 0.5;
  double left_prob = 0.25;
  double right_prob = 0.25;
  double lane_change_rate = 0.1;

  static MobilityParams from_config(const ScenarioConfig& c) {
    return {c.mean_speed,         c.speed_variance, c.speed_resample_period, c.turn_straight_prob,
            c.turn_left_prob,     c.turn_right_prob, c.lane_change_rate};
  }
};

inline double draw_speed(const MobilityParams& p, Rng& rng) {
  return std::max(0.0, normal(rng, p.mean_speed, std::sqrt(p.speed_variance)));
}

inline double draw_lane_change_gap(const MobilityParams& p, Rng& rng) {
  if (p.lane_change_rate <= 0.0) return std::numeric_limits<double>::infinity();
  return std::exponential_distribution<double>(p.lane_change_rate)(rng);
}

namespace detail {

/// Along-lane distance to the next intersection entry line, strictly ahead.
inline double distance_to_next_entry(const VehicleState& v, const GridGeometry& grid,
                                     int* road_out) {
  const double area = grid.area_side;
  const double along = lane_along(v.lane, v.true_position);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid.road_count_per_axis; ++k) {
    const double entry = grid.road_center(k) - v.lane.dir * grid.half_road();
    double d = std::fmod(v.lane.dir * (entry - along), area);
    if (d < 0.0) d += area;
    if (d <= 1e-9) d += area;
    if (d < best) {
      best = d;
      *road_out = k;
    }
  }
  return best;
}

inline double wrap_coordinate(double c, double area) {
  c = std::fmod(c, area);
  if (c < 0.0) c += area;
  return c;
}

inline void begin_turn(VehicleState& v, const GridGeometry& grid, int cross_road, int sense) {
  const double o = grid.lane_offset(v.lane.slot);
  const double h = grid.half_road();
  TurnArc arc;
  arc.sense = sense;
  arc.radius = sense > 0 ? h - o : h + o;
  arc.center = v.true_position + heading_vector(v.heading + sense * 0.5 * kPi) * arc.radius;
  arc.remaining_angle = 0.5 * kPi;
  const double out_heading = wrap_angle(v.heading + sense * 0.5 * kPi);
  arc.target.axis = 1 - v.lane.axis;
  arc.target.road = cross_road;
  arc.target.slot = v.lane.slot;
  // Heading 0 / pi run along y, +-pi/2 along x.
  if (arc.target.axis == 0) arc.target.dir = std::cos(out_heading) > 0.0 ? 1 : -1;
  else arc.target.dir = std::sin(out_heading) > 0.0 ? 1 : -1;
  v.turn = arc;
}

inline int choose_maneuver(const MobilityParams& p, Rng& rng) {
  const double u = uniform01(rng);
  if (u < p.straight_prob) return 0;
  if (u < p.straight_prob + p.right_prob) return 1;
  return -1;
}

}  // namespace detail

/// Advances a vehicle by `dt` seconds. Speed is resampled every
/// `speed_resample_period`, lane changes arrive as a Poisson process and are
/// instantaneous, intersections trigger a straight/left/right draw.
inline VehicleState step_vehicle(VehicleState v, double dt, const GridGeometry& grid,
                                 const MobilityParams& params, VehicleStreams& streams) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_vehicle: dt must be positive");

  while (v.clock + 1e-12 >= v.next_speed_resample) {
    v.speed = draw_speed(params, streams.speed);
    v.next_speed_resample += params.speed_resample_period;
  }
  if (!v.turn && v.clock + 1e-12 >= v.next_lane_change) {
    if (grid.lanes_per_direction > 1) {
      int slot = v.lane.slot;
      if (slot == 0) slot = 1;
      else if (slot == grid.lanes_per_direction - 1) slot -= 1;
      else slot += uniform01(streams.maneuver) < 0.5 ? -1 : 1;
      v.lane.slot = slot;
      const double along = lane_along(v.lane, v.true_position);
      v.true_position = lane_point(v.lane, grid, along);
    }
    v.next_lane_change = v.clock + draw_lane_change_gap(params, streams.maneuver);
  }

  double remaining = v.speed * dt;
  while (remaining > 0.0) {
    if (v.turn) {
      TurnArc& arc = *v.turn;
      const double angle = std::min(remaining / arc.radius, arc.remaining_angle);
      remaining -= angle * arc.radius;
      arc.remaining_angle -= angle;
      v.heading = wrap_angle(v.heading + arc.sense * angle);
      if (arc.remaining_angle <= 1e-12) {
        // Snap onto the exit lane to keep positions exact.
        const LaneId exit = arc.target;
        const Vec2 end = arc.center - heading_vector(lane_heading(exit) + arc.sense * 0.5 * kPi) * arc.radius;
        v.lane = exit;
        v.heading = lane_heading(exit);
        v.true_position = lane_point(exit, grid, detail::wrap_coordinate(lane_along(exit, end), grid.area_side));
        v.turn.reset();
        v.yaw_rate = 0.0;
        continue;
      }
      v.true_position = arc.center - heading_vector(v.heading + arc.sense * 0.5 * kPi) * arc.radius;
      v.yaw_rate = arc.sense * v.speed / arc.radius;
      continue;
    }

    v.yaw_rate = 0.0;
    int cross_road = 0;
    const double to_entry = detail::distance_to_next_entry(v, grid, &cross_road);
    const double along = lane_along(v.lane, v.true_position);
    if (remaining < to_entry) {
      v.true_position = lane_point(
          v.lane, grid, detail::wrap_coordinate(along + v.lane.dir * remaining, grid.area_side));
      remaining = 0.0;
      break;
    }
    v.true_position = lane_point(
        v.lane, grid, detail::wrap_coordinate(along + v.lane.dir * to_entry, grid.area_side));
    remaining -= to_entry;
    const int maneuver = detail::choose_maneuver(params, streams.maneuver);
    if (maneuver != 0) {
      detail::begin_turn(v, grid, cross_road, maneuver);
      v.yaw_rate = maneuver * v.speed / v.turn->radius;
    }
  }
  if (v.turn) v.yaw_rate = v.turn->sense * v.speed / v.turn->radius;
  v.clock += dt;
  return v;
}

/// Places a vehicle uniformly over all lane centre lines.
inline VehicleState place_vehicle(int id, const GridGeometry& grid, const MobilityParams& params,
                                  VehicleStreams& streams) {
  const int lanes_per_road = 2 * grid.lanes_per_direction;
  const int total = 2 * grid.road_count_per_axis * lanes_per_road;
  const int pick = std::min(total - 1, static_cast<int>(uniform01(streams.maneuver) * total));
  VehicleState v;
  v.id = id;
  v.lane.axis = pick / (grid.road_count_per_axis * lanes_per_road);
  const int rest = pick % (grid.road_count_per_axis * lanes_per_road);
  v.lane.road = rest / lanes_per_road;
  const int in_road = rest % lanes_per_road;
  v.lane.dir = in_road < grid.lanes_per_direction ? 1 : -1;
  v.lane.slot = in_road % grid.lanes_per_direction;
  v.true_position = lane_point(v.lane, grid, uniform01(streams.maneuver) * grid.area_side);
  v.heading = lane_heading(v.lane);
  v.speed = draw_speed(params, streams.speed);
  v.next_speed_resample = params.speed_resample_period;
  v.next_lane_change = draw_lane_change_gap(params, streams.maneuver);
  return v;
}

/// Log-normal GPS error magnitude, moment-matched to a target mean and
/// standard deviation.
struct PositionErrorModel {
  double mean = 3.0;
  double stddev = 1.0;
  double mu = 0.0;
  double sigma = 0.0;

  static PositionErrorModel from_moments(double mean, double stddev) {
    if (!(mean > 0.0) || !(stddev > 0.0))
      throw std::invalid_argument("position error mean and std must be positive");
    PositionErrorModel m;
    m.mean = mean;
    m.stddev = stddev;
    const double s2 = std::log1p((stddev * stddev) / (mean * mean));
    m.sigma = std::sqrt(s2);
    m.mu = std::log(mean) - 0.5 * s2;
    return m;
  }
};

inline Vec2 sample_error_offset(const PositionErrorModel& model, Rng& rng) {
  const double magnitude = std::lognormal_distribution<double>(model.mu, model.sigma)(rng);
  const double direction = uniform01(rng) * kTwoPi;
  return {magnitude * std::cos(direction), magnitude * std::sin(direction)};
}

/// True position displaced by a log-normal magnitude in a uniform direction.
inline Vec2 sample_estimated_position(Vec2 true_position, const PositionErrorModel& model, Rng& rng) {
  return true_position + sample_error_offset(model, rng);
}

/// GPS error process: the error vector is redrawn every `refresh_interval`
/// and held in between. A refresh interval of 0 draws afresh on every beacon.
/// No model means an error-free receiver.
struct GpsErrorProcess {
  std::optional<PositionErrorModel> model;
  double refresh_interval = 0.0;

  static GpsErrorProcess from_config(const ScenarioConfig& c) {
    GpsErrorProcess p;
    if (c.position_error_mean > 0.0)
      p.model = PositionErrorModel::from_moments(c.position_error_mean, c.position_error_std);
    p.refresh_interval = c.position_refresh_interval;
    return p;
  }
};

/// Emits the beacon scheduled at time `t`. The GPS error is refreshed first
/// when due, then the beacon is delivered with probability `delivery_ratio`
/// (a drop is network wide: no RSU receives it).
inline std::optional<BeaconRecord> emit_beacon(VehicleState& v, double t, double delivery_ratio,
                                               const GpsErrorProcess& gps,
                                               VehicleStreams& streams) {
  if (gps.model && t + 1e-12 >= v.next_gps_refresh) {
    v.gps_offset = sample_error_offset(*gps.model, streams.gps);
    v.next_gps_refresh = t + gps.refresh_interval;
  }
  if (!bernoulli(streams.beacon, delivery_ratio)) return std::nullopt;
  BeaconRecord b;
  b.estimated_position = v.true_position + v.gps_offset;
  b.speed = v.speed;
  b.yaw_rate = v.yaw_rate;
  b.heading = v.heading;
  b.timestamp = t;
  v.last_beacon = b;
  return b;
}

}  // namespace mmv2x
