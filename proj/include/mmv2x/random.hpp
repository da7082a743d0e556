#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mmv2x {

/// Named random substreams. Every consumer draws from its own generator so
/// that adding draws in one place never perturbs another.
enum class Stream : std::uint8_t {
  Speed,
  GpsError,
  ShadowFading,
  SlotChoice,
  BeaconLoss,
  Maneuver,
};

inline constexpr std::array<std::string_view, 6> kStreamNames = {
    "speed", "gps_error", "shadow_fading", "slot_choice", "beacon_loss", "maneuver"};

inline Stream stream_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStreamNames.size(); ++i) {
    if (kStreamNames[i] == name) return static_cast<Stream>(i);
  }
  throw std::invalid_argument("unknown random substream '" + std::string(name) + "'");
}

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of replication `index` derived from a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(0x5eedULL + index));
}

using Rng = std::mt19937_64;

/// Factory for keyed substreams. Cheap to copy; holds only the master seed.
class RandomStreams {
 public:
  explicit RandomStreams(std::uint64_t master_seed) : master_seed_(master_seed) {}

  std::uint64_t master_seed() const { return master_seed_; }

  /// Generator keyed by (master seed, stream, entity id).
  Rng substream(Stream stream, std::uint64_t entity_id) const {
    std::uint64_t key = mix64(master_seed_);
    key = mix64(key ^ (static_cast<std::uint64_t>(stream) + 1) * 0xd6e8feb86659fd93ULL);
    key = mix64(key ^ entity_id);
    return Rng(key);
  }

  Rng substream(std::string_view name, std::uint64_t entity_id) const {
    return substream(stream_from_name(name), entity_id);
  }

 private:
  std::uint64_t master_seed_;
};

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Normal draw that degrades to the mean for a zero standard deviation.
inline double normal(Rng& rng, double mean, double stddev) {
  if (stddev <= 0.0) return mean;
  return std::normal_distribution<double>(mean, stddev)(rng);
}

/// Always consumes one draw, so streams stay aligned across different p.
inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace mmv2x
