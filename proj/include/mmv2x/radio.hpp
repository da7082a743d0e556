#pragma once

// Link budget for ideal flat-top beams: gain, path loss, noise, SNR, MCS
// selection, beam coverage tests and beamwidth adaptation.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "config.hpp"
#include "geometry.hpp"

namespace mmv2x {

/// Ideal beam: uniform gain inside +-width/2 of the boresight, nothing outside.
struct Beam {
  Vec2 origin;
  double boresight = 0.0;
  double width = deg_to_rad(15.0);
  double range_limit = 300.0;
  bool operator==(const Beam&) const = default;
};

/// Linear gain 4*pi / theta^2 of a beam with equal azimuth and elevation width.
inline double antenna_gain(double theta) {
  if (!(theta > 0.0 && theta < kTwoPi))
    throw std::domain_error("antenna_gain: beamwidth must lie in (0, 2*pi)");
  return 4.0 * kPi / (theta * theta);
}

inline double antenna_gain_db(double theta) { return 10.0 * std::log10(antenna_gain(theta)); }

/// Path loss in dB. Atmospheric and rain attenuation are dB/km rates applied
/// over the link length; channel attenuation is a constant offset.
inline double path_loss(double d, const ScenarioConfig& cfg, double shadow_db) {
  if (!(d > 0.0)) throw std::domain_error("path_loss: distance must be positive");
  const double km = d / 1000.0;
  return 10.0 * cfg.path_loss_exponent * std::log10(d) + cfg.channel_attenuation +
         cfg.atmospheric_attenuation * km + cfg.rain_attenuation * km + shadow_db;
}

/// Thermal noise power in dBm; the floor is a spectral density (dBm/Hz).
inline double noise_power(const ScenarioConfig& cfg) {
  return cfg.noise_floor + 10.0 * std::log10(cfg.bandwidth) + cfg.noise_figure;
}

inline double received_power(double gain_tx_db, double gain_rx_db, double d,
                             const ScenarioConfig& cfg, double shadow_db) {
  return cfg.tx_power + gain_tx_db + gain_rx_db - path_loss(d, cfg, shadow_db);
}

/// SNR in dB between two beams `d` metres apart.
inline double snr(const Beam& tx, const Beam& rx, double d, double shadow_db,
                  const ScenarioConfig& cfg) {
  return received_power(antenna_gain_db(tx.width), antenna_gain_db(rx.width), d, cfg, shadow_db) -
         noise_power(cfg);
}

/// SNR with the same beamwidth at both ends.
inline double snr(double theta, double d, double shadow_db, const ScenarioConfig& cfg) {
  const double g = antenna_gain_db(theta);
  return received_power(g, g, d, cfg, shadow_db) - noise_power(cfg);
}

struct McsChoice {
  int index = 0;  // 1-based MCS number within the table
  double rate_bps = 0.0;
  bool operator==(const McsChoice&) const = default;
};

/// Highest-rate entry whose threshold does not exceed the SNR.
inline std::optional<McsChoice> select_mcs(double snr_db, const McsTable& table) {
  for (std::size_t i = table.entries.size(); i-- > 0;) {
    if (table.entries[i].threshold_db <= snr_db)
      return McsChoice{static_cast<int>(i) + 1, table.entries[i].rate_bps};
  }
  return std::nullopt;
}

inline double rate_for_snr(double snr_db, const McsTable& table) {
  const auto m = select_mcs(snr_db, table);
  return m ? m->rate_bps : 0.0;
}

// Angular slack on the beam edge; keeps exact-edge targets inside despite
// atan2 rounding.
inline constexpr double kEdgeTolerance = 1e-12;

inline bool is_aligned(const Beam& beam, Vec2 target) {
  if (target == beam.origin) throw std::invalid_argument("is_aligned: target coincides with origin");
  if (distance(beam.origin, target) > beam.range_limit) return false;
  const double offset = wrap_angle(bearing(beam.origin, target) - beam.boresight);
  return std::abs(offset) <= 0.5 * beam.width + kEdgeTolerance;
}

/// Line of sight: the segment touches no building interior. Boundary contact
/// (running along a wall or grazing a corner) keeps the link.
inline bool has_los(Vec2 a, Vec2 b, const GridGeometry& grid) {
  for (const Rect& r : grid.building_footprints) {
    if (segment_crosses_interior(a, b, r)) return false;
  }
  return true;
}

struct AdaptedBeam {
  double theta = 0.0;
  double rate_bps = 0.0;
  std::optional<McsChoice> mcs;
  double planned_snr_db = 0.0;
};

/// Candidate beamwidths theta_min, theta_min + step, ... <= theta_max with
/// their gains, computed once per configuration.
struct BeamwidthGrid {
  std::vector<double> theta;
  std::vector<double> gain_db;

  static BeamwidthGrid from_config(const ScenarioConfig& cfg) {
    BeamwidthGrid g;
    const int steps = static_cast<int>(
        std::floor((cfg.adapt_theta_max - cfg.adapt_theta_min) / cfg.adapt_theta_step + 1e-9));
    for (int k = 0; k <= steps; ++k) {
      const double t = cfg.adapt_theta_min + k * cfg.adapt_theta_step;
      g.theta.push_back(t);
      g.gain_db.push_back(antenna_gain_db(t));
    }
    return g;
  }
};

/// Widest beam on the candidate grid that reaches the best achievable MCS at
/// distance `d_in`, planning with a shadowing value of `planning_shadow_db`.
/// Falls back to the widest beam (rate 0) when no MCS is reachable.
inline AdaptedBeam adapt_beamwidth(double d_in, double planning_shadow_db, const ScenarioConfig& cfg,
                                   const BeamwidthGrid& grid) {
  if (!(d_in > 0.0)) throw std::domain_error("adapt_beamwidth: distance must be positive");
  // SNR without antenna gains; each candidate adds its gain at both ends.
  const double base = cfg.tx_power - path_loss(d_in, cfg, planning_shadow_db) - noise_power(cfg);
  const std::size_t widest = grid.theta.size() - 1;
  AdaptedBeam best{grid.theta[widest], 0.0, std::nullopt, base + 2.0 * grid.gain_db[widest]};
  for (std::size_t k = grid.theta.size(); k-- > 0;) {
    const double s = base + 2.0 * grid.gain_db[k];
    const auto m = select_mcs(s, cfg.mcs);
    // Widest first, so only a strictly better rate replaces the incumbent.
    if (m && m->rate_bps > best.rate_bps) best = {grid.theta[k], m->rate_bps, m, s};
  }
  return best;
}

inline AdaptedBeam adapt_beamwidth(double d_in, double planning_shadow_db, const ScenarioConfig& cfg) {
  return adapt_beamwidth(d_in, planning_shadow_db, cfg, BeamwidthGrid::from_config(cfg));
}

inline AdaptedBeam adapt_beamwidth(double d_in, const ScenarioConfig& cfg) {
  return adapt_beamwidth(d_in, cfg.adapt_planning_shadow, cfg);
}

/// Mean MCS rate when the realized SNR is `nominal_snr_db - S_f` with
/// S_f ~ N(0, shadow_sigma^2): each rate step counts with the probability
/// that its threshold is met.
inline double expected_rate(double nominal_snr_db, double shadow_sigma, const McsTable& table) {
  if (shadow_sigma <= 0.0) return rate_for_snr(nominal_snr_db, table);
  double rate = 0.0;
  double previous = 0.0;
  for (const McsEntry& e : table.entries) {
    const double p_meet =
        0.5 * std::erfc((e.threshold_db - nominal_snr_db) / (shadow_sigma * std::numbers::sqrt2));
    rate += (e.rate_bps - previous) * p_meet;
    previous = e.rate_bps;
  }
  return rate;
}

/// Probability that a zero-mean Gaussian cross-track offset with standard
/// deviation `sigma` keeps a target `d` metres away inside a beam of width
/// `theta` centred on the target's reported position.
inline double alignment_probability(double d, double theta, double sigma) {
  const double half_width = d * std::tan(0.5 * std::min(theta, kPi - 1e-9));
  if (sigma <= 0.0) return half_width > 0.0 ? 1.0 : 0.0;
  return std::erf(half_width / (sigma * std::numbers::sqrt2));
}

/// Cross-track uncertainty of the planning target: the GPS error projected
/// on one axis plus the travel between two beam updates seen from a random
/// angle (uniform along-track displacement over [0, v*T]).
inline double planning_cross_track_sigma(const ScenarioConfig& cfg) {
  const double gps = cfg.position_error_mean > 0.0
                         ? 0.5 * (cfg.position_error_mean * cfg.position_error_mean +
                                  cfg.position_error_std * cfg.position_error_std)
                         : 0.0;
  const double travel = cfg.mean_speed * cfg.samba_update_interval;
  return std::sqrt(gps + travel * travel / 6.0);
}

/// Grid beamwidth maximising alignment probability times expected rate;
/// the widest one wins ties. `mcs` and `planned_snr_db` describe the
/// nominal (S_f = 0) link at the chosen width, `rate_bps` the expectation.
inline AdaptedBeam adapt_beamwidth_expected(double d_in, double cross_track_sigma,
                                            const ScenarioConfig& cfg, const BeamwidthGrid& grid) {
  if (!(d_in > 0.0)) throw std::domain_error("adapt_beamwidth: distance must be positive");
  const double base = cfg.tx_power - path_loss(d_in, cfg, 0.0) - noise_power(cfg);
  std::size_t best = grid.theta.size() - 1;
  double best_value = -1.0;
  for (std::size_t k = grid.theta.size(); k-- > 0;) {
    const double value = alignment_probability(d_in, grid.theta[k], cross_track_sigma) *
                         expected_rate(base + 2.0 * grid.gain_db[k], cfg.shadow_sigma, cfg.mcs);
    if (value > best_value) {
      best_value = value;
      best = k;
    }
  }
  const double s = base + 2.0 * grid.gain_db[best];
  return {grid.theta[best], best_value, select_mcs(s, cfg.mcs), s};
}

/// Beamwidth choice used when steering, per the configured policy. The
/// expected-rate search is memoised on distance rounded to `kResolution`.
class BeamwidthPlanner {
 public:
  static constexpr double kResolution = 0.01;  // m

  explicit BeamwidthPlanner(const ScenarioConfig& cfg)
      : cfg_(&cfg), grid_(BeamwidthGrid::from_config(cfg)), sigma_(planning_cross_track_sigma(cfg)) {}

  double theta(double d) const {
    if (!cfg_->beamwidth_adaptation) return cfg_->fixed_beamwidth;
    if (cfg_->adapt_policy == AdaptPolicy::Nominal)
      return adapt_beamwidth(d, cfg_->adapt_planning_shadow, *cfg_, grid_).theta;
    const auto bucket = static_cast<std::size_t>(std::llround(d / kResolution));
    if (bucket >= memo_.size()) memo_.resize(bucket + 1, 0.0);
    double& t = memo_[bucket];
    if (t == 0.0)
      t = adapt_beamwidth_expected(std::max(bucket, std::size_t{1}) * kResolution, sigma_, *cfg_, grid_)
              .theta;
    return t;
  }

  const BeamwidthGrid& grid() const { return grid_; }
  double cross_track_sigma() const { return sigma_; }

 private:
  const ScenarioConfig* cfg_;
  BeamwidthGrid grid_;
  double sigma_;
  mutable std::vector<double> memo_;
};

}  // namespace mmv2x
