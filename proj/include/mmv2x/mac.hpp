#pragma once

// Beam management: the legacy sector-sweep training model (SLS, A-BFT, BRP
// once per beacon interval) and the beacon-driven tracker that steers RSU
// beams from reported and predicted positions. Also the A-BFT collision
// analytics and the polling airtime split both strategies share.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "config.hpp"
#include "geometry.hpp"
#include "mobility.hpp"
#include "prediction.hpp"
#include "radio.hpp"
#include "random.hpp"

namespace mmv2x {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// A-BFT collision analytics

inline BigInt factorial(unsigned n) {
  BigInt f = 1;
  for (unsigned k = 2; k <= n; ++k) f *= k;
  return f;
}

/// Exact P_col = 1 - x!(x-1)! / ((x-v)!(x+v-1)!) for x slots and v vehicles,
/// i.e. one minus the share of slot multisets with every vehicle alone.
/// The factorial form is undefined for v > x, where a collision is certain.
inline BigRational collision_probability_exact(unsigned x, unsigned v) {
  if (x < 1) throw std::invalid_argument("collision_probability: need at least one slot");
  if (v > x) return BigRational(1);
  const BigInt num = factorial(x) * factorial(x - 1);
  const BigInt den = factorial(x - v) * factorial(x + v - 1);
  return BigRational(1) - BigRational(num, den);
}

inline double collision_probability(unsigned x, unsigned v) {
  return collision_probability_exact(x, v).convert_to<double>();
}

struct AbftOutcome {
  std::vector<int> slot;
  std::vector<bool> trained;

  bool any_collision() const {
    for (bool t : trained)
      if (!t) return true;
    return false;
  }
};

/// Each vehicle picks one of `slots` uniformly and independently; a vehicle
/// is trained iff nobody else picked its slot.
inline AbftOutcome simulate_abft(int vehicles, int slots, Rng& rng) {
  if (slots < 1) throw std::invalid_argument("simulate_abft: need at least one slot");
  AbftOutcome out;
  out.slot.resize(static_cast<std::size_t>(vehicles));
  out.trained.assign(static_cast<std::size_t>(vehicles), false);
  std::vector<int> occupancy(static_cast<std::size_t>(slots), 0);
  std::uniform_int_distribution<int> pick(0, slots - 1);
  for (auto& s : out.slot) {
    s = pick(rng);
    ++occupancy[static_cast<std::size_t>(s)];
  }
  for (std::size_t i = 0; i < out.slot.size(); ++i)
    out.trained[i] = occupancy[static_cast<std::size_t>(out.slot[i])] == 1;
  return out;
}

// ---------------------------------------------------------------------------
// Legacy beamforming training

/// A vehicle that heard an RSU's sector sweep and answers in its A-BFT.
/// `associated` marks vehicles whose serving RSU this is; only those go on
/// to beam refinement and data exchange here.
struct LegacyCandidate {
  int vehicle_id = 0;
  Vec2 position;
  bool associated = false;
};

struct LegacyAssignment {
  int vehicle_id = 0;
  int sector = 0;
};

struct LegacyBiState {
  double overhead_time = 0.0;
  std::vector<int> trained;                  // vehicle ids, in candidate order
  std::vector<LegacyAssignment> sectors;     // one per trained vehicle
  AbftOutcome abft;
};

inline double sector_width(int sector_count) { return kTwoPi / sector_count; }

/// Sector whose centre is nearest the given bearing; sector k is centred on
/// bearing k * width.
inline int nearest_sector(double bearing_rad, int sector_count) {
  const double w = sector_width(sector_count);
  double b = std::fmod(bearing_rad, kTwoPi);
  if (b < 0.0) b += kTwoPi;
  return static_cast<int>(std::lround(b / w)) % sector_count;
}

inline Beam sector_beam(Vec2 rsu, int sector, const ScenarioConfig& cfg) {
  return Beam{rsu, wrap_angle(sector * sector_width(cfg.sector_count)), sector_width(cfg.sector_count),
              cfg.range_limit};
}

/// Overhead of one BI: a full sector sweep plus beam refinement frames for
/// every trained vehicle. A-BFT slots sit inside the beacon header and are
/// not charged separately.
inline double legacy_overhead(int trained, const ScenarioConfig& cfg) {
  return (cfg.sector_count + static_cast<double>(trained) * cfg.brp_frames) * cfg.training_frame_time();
}

/// One beacon interval of legacy training at a single RSU. Trained vehicles
/// receive the sector nearest the bearing to their true position.
inline LegacyBiState legacy_bi(std::span<const LegacyCandidate> candidates, Vec2 rsu,
                               const ScenarioConfig& cfg, Rng& slot_rng) {
  LegacyBiState st;
  st.abft = simulate_abft(static_cast<int>(candidates.size()), cfg.abft_slots, slot_rng);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!st.abft.trained[i] || !candidates[i].associated) continue;
    st.trained.push_back(candidates[i].vehicle_id);
    st.sectors.push_back({candidates[i].vehicle_id,
                          nearest_sector(bearing(rsu, candidates[i].position), cfg.sector_count)});
  }
  st.overhead_time = legacy_overhead(static_cast<int>(st.trained.size()), cfg);
  if (st.overhead_time >= cfg.bi_length)
    throw std::runtime_error("legacy_bi: training overhead exceeds the beacon interval");
  return st;
}

// ---------------------------------------------------------------------------
// Shared helpers

/// Index of the RSU nearest to `p`; ties go to the lowest index.
inline int nearest_rsu(Vec2 p, std::span<const Vec2> rsus) {
  if (rsus.empty()) throw std::invalid_argument("nearest_rsu: no RSUs");
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rsus.size(); ++i) {
    const Vec2 d = rsus[i] - p;
    const double d2 = d.x * d.x + d.y * d.y;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<int>(i);
    }
  }
  return best;
}

struct VehicleBeam {
  Beam beam;
  int rsu = 0;
};

/// Vehicles know the RSU sites and point at the nearest one from their true
/// position, using the same width as the RSU side of the link.
inline VehicleBeam vehicle_beam(Vec2 true_position, std::span<const Vec2> rsus, double width,
                                double range_limit) {
  const int r = nearest_rsu(true_position, rsus);
  const auto idx = static_cast<std::size_t>(r);
  const double b = rsus[idx] == true_position ? 0.0 : bearing(true_position, rsus[idx]);
  return {Beam{true_position, b, width, range_limit}, r};
}

/// Equal polling split of `available_time` over the served vehicles.
inline std::vector<double> schedule_airtime(std::size_t served, double available_time) {
  if (available_time < 0.0) throw std::invalid_argument("schedule_airtime: negative time");
  if (served == 0) return {};
  return std::vector<double>(served, available_time / static_cast<double>(served));
}

// ---------------------------------------------------------------------------
// Beacon-driven tracking

struct TrackedVehicle {
  BeaconRecord latest;
  int serving_rsu = 0;
  Vec2 target;  // point the serving beam was last steered at
  Beam beam;
  double last_steer = 0.0;
  std::uint64_t steer_count = 0;
  std::uint64_t steers_on_report = 0;      // aligned on a received position
  std::uint64_t steers_on_prediction = 0;  // aligned on a predicted position
};

struct SambaRsuState {
  std::vector<std::optional<TrackedVehicle>> vehicles;  // indexed by vehicle id

  explicit SambaRsuState(std::size_t vehicle_count = 0) : vehicles(vehicle_count) {}

  bool tracked(int id) const {
    return static_cast<std::size_t>(id) < vehicles.size() && vehicles[static_cast<std::size_t>(id)].has_value();
  }
  std::optional<int> serving_rsu(int id) const {
    if (!tracked(id)) return std::nullopt;
    return vehicles[static_cast<std::size_t>(id)]->serving_rsu;
  }
};

struct DeliveredBeacon {
  int vehicle_id = 0;
  BeaconRecord record;
};

/// Infrastructure side of the tracker, shared by every RSU.
class SambaController {
 public:
  explicit SambaController(const ScenarioConfig& cfg)
      : cfg_(&cfg), planner_(cfg) {}

  /// One update at time `now`. Vehicles with a fresh beacon get a new serving
  /// RSU and a beam on the reported position; every other tracked vehicle is
  /// re-steered on its predicted position once an update interval elapsed.
  /// A beam is held until the next update, so targets are projected
  /// `steer_lookahead_fraction` of an update interval ahead.
  void step(SambaRsuState& state, std::span<const DeliveredBeacon> beacons, double now) const {
    const auto& rsus = cfg_->grid.rsu_positions;
    const double tick = cfg_->samba_update_interval - 0.5 * cfg_->sim_step;
    const double aim = now + cfg_->steer_lookahead_fraction * cfg_->samba_update_interval;
    for (const auto& b : beacons) {
      auto& slot = state.vehicles.at(static_cast<std::size_t>(b.vehicle_id));
      TrackedVehicle tv = slot.value_or(TrackedVehicle{});
      tv.latest = b.record;
      const Vec2 target = target_at(tv.latest, aim);
      steer(tv, nearest_rsu(target, rsus), target, now);
      ++tv.steers_on_report;
      slot = tv;
    }
    for (auto& slot : state.vehicles) {
      if (!slot || slot->last_steer == now) continue;
      if (now - slot->last_steer < tick) continue;
      const Vec2 target = target_at(slot->latest, aim);
      steer(*slot, nearest_rsu(target, rsus), target, now);
      ++slot->steers_on_prediction;
    }
  }

  Beam beam_towards(Vec2 rsu, Vec2 target) const {
    const double d = distance(rsu, target);
    if (!(d > 0.0)) return Beam{rsu, 0.0, cfg_->fixed_beamwidth, cfg_->range_limit};
    return Beam{rsu, bearing(rsu, target), planner_.theta(d), cfg_->range_limit};
  }

 private:
  void steer(TrackedVehicle& tv, int rsu, Vec2 target, double now) const {
    tv.serving_rsu = rsu;
    tv.target = target;
    tv.beam = beam_towards(cfg_->grid.rsu_positions[static_cast<std::size_t>(rsu)], target);
    tv.last_steer = now;
    ++tv.steer_count;
  }

  Vec2 target_at(const BeaconRecord& latest, double t) const {
    return wrap_position(track(latest, t, cfg_->prediction_variant, cfg_->omega_min));
  }

  // Vehicles live on a torus; positions are reported modulo the area.
  Vec2 wrap_position(Vec2 p) const {
    const double a = cfg_->grid.area_side;
    auto w = [a](double c) {
      c = std::fmod(c, a);
      return c < 0.0 ? c + a : c;
    };
    return {w(p.x), w(p.y)};
  }

  const ScenarioConfig* cfg_;
  BeamwidthPlanner planner_;
};

/// Free-function form of one tracker update.
inline void samba_step(SambaRsuState& state, std::span<const DeliveredBeacon> beacons, double now,
                       const ScenarioConfig& cfg) {
  SambaController(cfg).step(state, beacons, now);
}

}  // namespace mmv2x
