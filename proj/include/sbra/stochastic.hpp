// Seeded random processes: rounded-Rayleigh channel rates and Poisson
// arrivals. Every stream is a std::mt19937_64 seeded from a SplitMix64 hash
// of (seed, kind, entity), and all variates are produced from raw 64-bit
// words by code in this file, so sequences do not depend on the standard
// library's distribution implementations.
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace sbra {

enum class StreamKind : std::uint32_t {
  channel = 1,
  arrival = 2,
  mac_decision = 3,
  oracle = 4,
};

class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamKind kind, std::uint32_t entity);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 bits.
  double uniform();
  // Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  std::uint64_t seed() const { return seed_; }
  StreamKind kind() const { return kind_; }
  std::uint32_t entity() const { return entity_; }

 private:
  std::uint64_t seed_;
  StreamKind kind_;
  std::uint32_t entity_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Rayleigh scale whose (unrounded) mean is 1: sqrt(2/pi).
inline constexpr double kUnitMeanRayleighScale = 0.79788456080286535588;

// round(Rayleigh(scale)), halves away from zero. scale == 0 yields 0.
int rounded_rayleigh_sample(RngStream& stream, double scale);

// Poisson(rate) by sequential inversion; large rates are split into chunks.
int poisson_arrivals(RngStream& stream, double rate);

// Per-link integer rates redrawn every `update_interval` slots.
class ChannelProcess {
 public:
  ChannelProcess(int link_count, double scale, int update_interval);

  // Refreshes all rates when t is a multiple of the update interval (or no
  // draw has happened yet) and returns the current vector. `streams` holds
  // one channel stream per link.
  std::span<const int> channel_at(std::span<RngStream> streams, std::int64_t t);

  // Replaces the current vector; it holds until the next refresh slot.
  void hold(std::vector<int> rates);
  std::span<const int> rates() const { return rates_; }
  double scale() const { return scale_; }
  int update_interval() const { return update_interval_; }

 private:
  double scale_;
  int update_interval_;
  bool drawn_ = false;
  std::vector<int> rates_;
};

}  // namespace sbra
