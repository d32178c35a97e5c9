#include "sbra/stochastic.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include <fmt/core.h>

namespace sbra {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, StreamKind kind, std::uint32_t entity)
    : seed_(seed), kind_(kind), entity_(entity) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(kind) << 32 | entity));
  engine_.seed(h);
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int rounded_rayleigh_sample(RngStream& stream, double scale) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument(fmt::format("Rayleigh scale must be finite and >= 0, got {}", scale));
  }
  // Always consume one draw so the stream position is independent of scale.
  const double u = stream.uniform_pos();
  if (scale == 0.0) return 0;
  const double r = scale * std::sqrt(-2.0 * std::log(u));
  return static_cast<int>(std::round(r));
}

namespace {

int poisson_inversion(RngStream& stream, double rate) {
  const double u = stream.uniform();
  double p = std::exp(-rate);
  double cdf = p;
  int k = 0;
  while (u >= cdf) {
    ++k;
    p *= rate / k;
    const double next = cdf + p;
    if (next == cdf) break;  // tail exhausted in double precision
    cdf = next;
  }
  return k;
}

}  // namespace

int poisson_arrivals(RngStream& stream, double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument(fmt::format("arrival rate must be finite and >= 0, got {}", rate));
  }
  constexpr double kChunk = 16.0;
  int total = 0;
  while (rate > kChunk) {
    total += poisson_inversion(stream, kChunk);
    rate -= kChunk;
  }
  return total + poisson_inversion(stream, rate);
}

ChannelProcess::ChannelProcess(int link_count, double scale, int update_interval)
    : scale_(scale), update_interval_(update_interval), rates_(static_cast<std::size_t>(link_count), 0) {
  if (link_count < 0) throw std::invalid_argument("link_count must be nonnegative");
  if (!(scale >= 0.0)) throw std::invalid_argument(fmt::format("channel scale must be >= 0, got {}", scale));
  if (update_interval < 1) {
    throw std::invalid_argument(fmt::format("channel update interval must be >= 1, got {}", update_interval));
  }
}

void ChannelProcess::hold(std::vector<int> rates) {
  if (rates.size() != rates_.size()) throw std::invalid_argument("one rate per link is required");
  for (int r : rates) {
    if (r < 0) throw std::invalid_argument("channel rates must be >= 0");
  }
  rates_ = std::move(rates);
  drawn_ = true;
}

std::span<const int> ChannelProcess::channel_at(std::span<RngStream> streams, std::int64_t t) {
  if (streams.size() != rates_.size()) {
    throw std::invalid_argument("one channel stream per link is required");
  }
  if (!drawn_ || t % update_interval_ == 0) {
    for (std::size_t l = 0; l < rates_.size(); ++l) rates_[l] = rounded_rayleigh_sample(streams[l], scale_);
    drawn_ = true;
  }
  return rates_;
}

}  // namespace sbra
