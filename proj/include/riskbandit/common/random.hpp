#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace riskbandit {

using Rng = std::mt19937_64;

// Distributions are constructed per draw so the engine is the only state to
// checkpoint (std::normal_distribution caches a spare variate otherwise).
inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Independent streams derived from one global seed.
enum class Stream : std::uint32_t { Env = 1, Noise = 2, Init = 3, Replay = 4 };

/// Splitting rule: engine seeded from seed_seq{low32(seed), high32(seed), stream id}.
Rng make_stream(std::uint64_t seed, Stream stream);

std::string describe_stream_rule();

std::string save_rng(const Rng& rng);
void load_rng(Rng& rng, const std::string& state);

}  // namespace riskbandit
