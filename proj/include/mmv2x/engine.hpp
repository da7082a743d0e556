#pragma once

// Time-stepped world loop. Each tick: move vehicles, emit beacons, update the
// beam-management strategy, evaluate every link, split RSU airtime and
// accumulate delivered bits.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "config.hpp"
#include "geometry.hpp"
#include "mac.hpp"
#include "mobility.hpp"
#include "radio.hpp"
#include "random.hpp"

namespace mmv2x {

struct StepSample {
  double t = 0.0;
  int vehicle_id = 0;
  double rate_bps = 0.0;  // bits delivered in the step divided by its length
  int serving_rsu = -1;   // -1 when no RSU beam is assigned
  bool aligned = false;
};

struct TrajectorySample {
  double t = 0.0;
  int vehicle_id = 0;
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;
  double yaw_rate = 0.0;
};

/// Aggregates over the measured window [warmup, sim_duration).
struct MetricsRecord {
  double measured_time = 0.0;
  std::vector<double> vehicle_rate_bps;  // time-averaged, one per vehicle
  std::vector<double> rsu_mean_served;   // mean served vehicles per step, one per RSU
  double mean_rate_bps = 0.0;
  double network_throughput_bps = 0.0;
  double misalignment_fraction = 0.0;  // misaligned / assigned vehicle-steps
  double outage_fraction = 0.0;        // zero-rate / all vehicle-steps
  std::vector<StepSample> samples;
  std::vector<TrajectorySample> trajectory;
};

struct RunOptions {
  double sample_interval = 0.0;      // per-vehicle samples; 0 disables
  double trajectory_interval = 0.0;  // trajectory rows; 0 disables
  std::optional<std::vector<VehicleState>> initial_vehicles;
};

/// Link state of one vehicle during the current tick.
struct LinkState {
  int serving_rsu = -1;
  bool aligned = false;
  bool los = false;
  double snr_db = -std::numeric_limits<double>::infinity();
  double link_rate_bps = 0.0;
  double delivered_rate_bps = 0.0;
};

class World {
 public:
  explicit World(ScenarioConfig cfg, RunOptions options = {})
      : cfg_(validated(std::move(cfg))),
        options_(std::move(options)),
        streams_(cfg_.master_seed),
        params_(MobilityParams::from_config(cfg_)),
        gps_(GpsErrorProcess::from_config(cfg_)),
        samba_ctl_(cfg_) {
    dt_ = cfg_.sim_step;
    total_ticks_ = std::llround(cfg_.sim_duration / dt_);
    warmup_ticks_ = static_cast<std::int64_t>(std::ceil(cfg_.warmup / dt_ - 1e-9));
    beacon_steps_ = std::llround(cfg_.dsrc_beacon_interval / dt_);
    bi_steps_ = std::llround(cfg_.bi_length / dt_);
    sample_steps_ = steps_for(options_.sample_interval);
    trajectory_steps_ = steps_for(options_.trajectory_interval);

    const auto& rsus = cfg_.grid.rsu_positions;
    if (options_.initial_vehicles) {
      vehicles_ = *options_.initial_vehicles;
      for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        if (vehicles_[i].id != static_cast<int>(i))
          throw ConfigError("initial_vehicles", "vehicle ids must be 0..n-1 in order");
        vstreams_.push_back(VehicleStreams::for_vehicle(streams_, static_cast<int>(i)));
      }
    } else {
      for (int i = 0; i < cfg_.vehicle_count; ++i) {
        vstreams_.push_back(VehicleStreams::for_vehicle(streams_, i));
        vehicles_.push_back(place_vehicle(i, cfg_.grid, params_, vstreams_.back()));
      }
    }
    const std::size_t n = vehicles_.size();
    for (std::size_t i = 0; i < n; ++i) {
      shadow_rng_.push_back(streams_.substream(Stream::ShadowFading, i));
      beacon_phase_.push_back(std::uniform_int_distribution<std::int64_t>(
          0, beacon_steps_ - 1)(vstreams_[i].beacon));
    }
    links_.resize(n);
    bits_.assign(n, 0.0);
    samba_ = SambaRsuState(n);
    legacy_.resize(rsus.size());
    legacy_assignment_.assign(n, {-1, 0});
    for (std::size_t r = 0; r < rsus.size(); ++r)
      slot_rng_.push_back(streams_.substream(Stream::SlotChoice, r));
    served_sum_.assign(rsus.size(), 0.0);
  }

  // The controller keeps a pointer to cfg_.
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  const ScenarioConfig& config() const { return cfg_; }
  std::int64_t tick_index() const { return tick_; }
  std::int64_t total_ticks() const { return total_ticks_; }
  double time() const { return static_cast<double>(tick_) * dt_; }
  bool done() const { return tick_ >= total_ticks_; }
  const std::vector<VehicleState>& vehicles() const { return vehicles_; }
  const std::vector<LinkState>& links() const { return links_; }
  const SambaRsuState& samba_state() const { return samba_; }
  const std::vector<LegacyBiState>& legacy_state() const { return legacy_; }

  /// Processes tick k covering [k*dt, (k+1)*dt).
  void tick() {
    const double now = time();
    if (tick_ > 0) {
      for (std::size_t i = 0; i < vehicles_.size(); ++i)
        vehicles_[i] = step_vehicle(vehicles_[i], dt_, cfg_.grid, params_, vstreams_[i]);
    }

    delivered_.clear();
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      if ((tick_ - beacon_phase_[i]) % beacon_steps_ != 0) continue;
      if (auto b = emit_beacon(vehicles_[i], now, cfg_.beacon_delivery_ratio, gps_, vstreams_[i]))
        delivered_.push_back({static_cast<int>(i), *b});
    }

    if (cfg_.strategy == Strategy::Samba) samba_ctl_.step(samba_, delivered_, now);
    else if (tick_ % bi_steps_ == 0) train_legacy();

    evaluate_links();
    schedule_and_accumulate(now);
    ++tick_;
  }

  void run_to_end() {
    while (!done()) tick();
  }

  MetricsRecord metrics() const {
    MetricsRecord m;
    const std::int64_t measured = std::max<std::int64_t>(0, tick_ - warmup_ticks_);
    m.measured_time = static_cast<double>(measured) * dt_;
    m.vehicle_rate_bps.resize(bits_.size(), 0.0);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      if (m.measured_time > 0.0) m.vehicle_rate_bps[i] = bits_[i] / m.measured_time;
      m.network_throughput_bps += m.vehicle_rate_bps[i];
    }
    if (!bits_.empty()) m.mean_rate_bps = m.network_throughput_bps / static_cast<double>(bits_.size());
    m.rsu_mean_served.resize(served_sum_.size(), 0.0);
    for (std::size_t r = 0; r < served_sum_.size(); ++r)
      if (measured > 0) m.rsu_mean_served[r] = served_sum_[r] / static_cast<double>(measured);
    if (assigned_steps_ > 0)
      m.misalignment_fraction =
          static_cast<double>(misaligned_steps_) / static_cast<double>(assigned_steps_);
    if (vehicle_steps_ > 0)
      m.outage_fraction = static_cast<double>(outage_steps_) / static_cast<double>(vehicle_steps_);
    m.samples = samples_;
    m.trajectory = trajectory_;
    return m;
  }

 private:
  struct LegacyAssignmentSlot {
    int rsu = -1;
    int sector = 0;
  };

  static ScenarioConfig validated(ScenarioConfig cfg) {
    cfg.validate();
    return cfg;
  }

  std::int64_t steps_for(double interval) const {
    if (interval <= 0.0) return 0;
    return std::max<std::int64_t>(1, std::llround(interval / dt_));
  }

  void train_legacy() {
    const auto& rsus = cfg_.grid.rsu_positions;
    for (auto& a : legacy_assignment_) a = {-1, 0};
    // Association: each vehicle answers the sweep of every RSU it hears but
    // exchanges data only with its nearest one.
    std::vector<int> nearest(vehicles_.size());
    for (std::size_t i = 0; i < vehicles_.size(); ++i)
      nearest[i] = nearest_rsu(vehicles_[i].true_position, rsus);
    std::vector<LegacyCandidate> candidates;
    for (std::size_t r = 0; r < rsus.size(); ++r) {
      candidates.clear();
      for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        const Vec2 p = vehicles_[i].true_position;
        const double d = distance(rsus[r], p);
        if (d <= 0.0 || d > cfg_.range_limit || !has_los(rsus[r], p, cfg_.grid)) continue;
        candidates.push_back({static_cast<int>(i), p, nearest[i] == static_cast<int>(r)});
      }
      legacy_[r] = legacy_bi(candidates, rsus[r], cfg_, slot_rng_[r]);
      for (const auto& s : legacy_[r].sectors)
        legacy_assignment_[static_cast<std::size_t>(s.vehicle_id)] = {static_cast<int>(r), s.sector};
    }
  }

  void evaluate_links() {
    const auto& rsus = cfg_.grid.rsu_positions;
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      LinkState& link = links_[i];
      link = LinkState{};
      // One fading draw per vehicle and step regardless of link state keeps
      // the stream aligned across configurations.
      const double shadow = normal(shadow_rng_[i], 0.0, cfg_.shadow_sigma);

      Beam rsu_beam;
      if (cfg_.strategy == Strategy::Samba) {
        const auto& tv = samba_.vehicles[i];
        if (!tv) continue;
        link.serving_rsu = tv->serving_rsu;
        rsu_beam = tv->beam;
      } else {
        const auto a = legacy_assignment_[i];
        if (a.rsu < 0) continue;
        link.serving_rsu = a.rsu;
        rsu_beam = sector_beam(rsus[static_cast<std::size_t>(a.rsu)], a.sector, cfg_);
      }

      const Vec2 pos = vehicles_[i].true_position;
      const Vec2 rsu = rsus[static_cast<std::size_t>(link.serving_rsu)];
      if (pos == rsu || !is_aligned(rsu_beam, pos)) continue;
      const VehicleBeam vb = vehicle_beam(pos, rsus, rsu_beam.width, rsu_beam.range_limit);
      if (vb.rsu != link.serving_rsu || !is_aligned(vb.beam, rsu)) continue;
      link.aligned = true;
      link.los = has_los(rsu, pos, cfg_.grid);
      if (!link.los) continue;
      link.snr_db = snr(rsu_beam, vb.beam, distance(rsu, pos), shadow, cfg_);
      link.link_rate_bps = rate_for_snr(link.snr_db, cfg_.mcs);
    }
  }

  void schedule_and_accumulate(double now) {
    const auto& rsus = cfg_.grid.rsu_positions;
    std::vector<std::size_t>& count = scratch_count_;
    count.assign(rsus.size(), 0);
    for (const auto& link : links_)
      if (link.link_rate_bps > 0.0) ++count[static_cast<std::size_t>(link.serving_rsu)];

    std::vector<double>& share = scratch_share_;
    share.assign(rsus.size(), 0.0);
    for (std::size_t r = 0; r < rsus.size(); ++r) {
      if (count[r] == 0) continue;
      double available = dt_;
      if (cfg_.strategy == Strategy::Legacy)
        available = dt_ * (1.0 - legacy_[r].overhead_time / cfg_.bi_length);
      share[r] = schedule_airtime(count[r], available).front();
    }
    for (auto& link : links_) {
      if (link.link_rate_bps > 0.0)
        link.delivered_rate_bps =
            link.link_rate_bps * share[static_cast<std::size_t>(link.serving_rsu)] / dt_;
    }

    if (tick_ < warmup_ticks_) return;
    for (std::size_t i = 0; i < links_.size(); ++i) {
      const LinkState& link = links_[i];
      bits_[i] += link.delivered_rate_bps * dt_;
      ++vehicle_steps_;
      if (link.delivered_rate_bps <= 0.0) ++outage_steps_;
      if (link.serving_rsu >= 0) {
        ++assigned_steps_;
        if (!link.aligned) ++misaligned_steps_;
      }
    }
    for (std::size_t r = 0; r < rsus.size(); ++r) served_sum_[r] += static_cast<double>(count[r]);

    const std::int64_t since = tick_ - warmup_ticks_;
    if (sample_steps_ > 0 && since % sample_steps_ == 0) {
      for (std::size_t i = 0; i < links_.size(); ++i)
        samples_.push_back({now, static_cast<int>(i), links_[i].delivered_rate_bps,
                            links_[i].serving_rsu, links_[i].aligned});
    }
    if (trajectory_steps_ > 0 && since % trajectory_steps_ == 0) {
      for (const auto& v : vehicles_)
        trajectory_.push_back({now, v.id, v.true_position, v.heading, v.speed, v.yaw_rate});
    }
  }

  ScenarioConfig cfg_;
  RunOptions options_;
  RandomStreams streams_;
  MobilityParams params_;
  GpsErrorProcess gps_;
  SambaController samba_ctl_;

  double dt_ = 0.0;
  std::int64_t tick_ = 0;
  std::int64_t total_ticks_ = 0;
  std::int64_t warmup_ticks_ = 0;
  std::int64_t beacon_steps_ = 1;
  std::int64_t bi_steps_ = 1;
  std::int64_t sample_steps_ = 0;
  std::int64_t trajectory_steps_ = 0;

  std::vector<VehicleState> vehicles_;
  std::vector<VehicleStreams> vstreams_;
  std::vector<Rng> shadow_rng_;
  std::vector<std::int64_t> beacon_phase_;
  std::vector<DeliveredBeacon> delivered_;
  std::vector<LinkState> links_;

  SambaRsuState samba_;
  std::vector<LegacyBiState> legacy_;
  std::vector<LegacyAssignmentSlot> legacy_assignment_;
  std::vector<Rng> slot_rng_;

  std::vector<std::size_t> scratch_count_;
  std::vector<double> scratch_share_;
  std::vector<double> bits_;
  std::vector<double> served_sum_;
  std::uint64_t vehicle_steps_ = 0;
  std::uint64_t outage_steps_ = 0;
  std::uint64_t assigned_steps_ = 0;
  std::uint64_t misaligned_steps_ = 0;
  std::vector<StepSample> samples_;
  std::vector<TrajectorySample> trajectory_;
};

inline MetricsRecord run(const ScenarioConfig& cfg, RunOptions options = {}) {
  World world(cfg, std::move(options));
  world.run_to_end();
  return world.metrics();
}

// ---------------------------------------------------------------------------
// Parameter sweeps

struct SweepRow {
  Strategy strategy = Strategy::Samba;
  std::string axis;
  double value = 0.0;
  int replications = 0;
  double mean_rate_bps = 0.0;
  double std_rate_bps = 0.0;
  double mean_throughput_bps = 0.0;
  double std_throughput_bps = 0.0;
  double mean_misalignment = 0.0;
  double mean_outage = 0.0;
};

/// Top-level numeric fields that can serve as a sweep axis.
inline bool is_sweepable(const ScenarioConfig& cfg, const std::string& axis) {
  const Json j = to_json(cfg);
  return j.contains(axis) && j[axis].is_number();
}

inline ScenarioConfig config_for_point(const ScenarioConfig& base, const std::string& axis,
                                       double value) {
  if (!is_sweepable(base, axis)) throw ConfigError(axis, "not a sweepable numeric parameter");
  const std::string assignment = fmt::format("{}={}", axis, value);
  return with_overrides(base, std::span<const std::string>(&assignment, 1));
}

/// Seed of replication r; independent of how many replications are run.
inline std::uint64_t replication_seed(std::uint64_t master_seed, int replication) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(replication));
}

namespace detail {

inline double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

inline double sample_std(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

}  // namespace detail

/// Runs `replications` independent worlds per axis value and reports mean and
/// sample standard deviation. Replications run on up to `threads` workers
/// (0 = hardware concurrency); results do not depend on the thread count.
inline std::vector<SweepRow> sweep(const ScenarioConfig& base, const std::string& axis,
                                   std::span<const double> values, int replications,
                                   unsigned threads = 0) {
  if (replications < 1) throw ConfigError("replications", "must be >= 1");
  std::vector<ScenarioConfig> points;
  for (double v : values) points.push_back(config_for_point(base, axis, v));

  const std::size_t jobs = points.size() * static_cast<std::size_t>(replications);
  std::vector<MetricsRecord> results(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      ScenarioConfig cfg = points[j / static_cast<std::size_t>(replications)];
      cfg.master_seed = replication_seed(base.master_seed,
                                         static_cast<int>(j % static_cast<std::size_t>(replications)));
      results[j] = run(cfg);
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<SweepRow> rows;
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::vector<double> rate, thr, mis, out;
    for (int r = 0; r < replications; ++r) {
      const auto& m = results[p * static_cast<std::size_t>(replications) + static_cast<std::size_t>(r)];
      rate.push_back(m.mean_rate_bps);
      thr.push_back(m.network_throughput_bps);
      mis.push_back(m.misalignment_fraction);
      out.push_back(m.outage_fraction);
    }
    rows.push_back({base.strategy, axis, values[p], replications, detail::mean_of(rate),
                    detail::sample_std(rate), detail::mean_of(thr), detail::sample_std(thr),
                    detail::mean_of(mis), detail::mean_of(out)});
  }
  return rows;
}

}  // namespace mmv2x
