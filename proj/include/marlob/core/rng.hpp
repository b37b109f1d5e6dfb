#pragma once

#include <cstdint>

namespace marlob {

// Counter-based deterministic RNG. Streams are identified by a key derived
// from (seed, env index, episode, step, purpose, ...); draws depend only on
// the key and the draw counter, never on call interleaving across threads.

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t key_fold(std::uint64_t h, std::uint64_t w) {
  return splitmix64(h ^ (w + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2)));
}

template <class... Words>
constexpr std::uint64_t make_key(std::uint64_t seed, Words... words) {
  std::uint64_t h = splitmix64(seed);
  ((h = key_fold(h, static_cast<std::uint64_t>(words))), ...);
  return h;
}

// Stream purposes; part of the key so distinct uses never collide.
enum class RngStream : std::uint64_t {
  Shuffle = 1,
  TaskDir = 2,
  ActionSample = 3,
  Synth = 4,
  ParamInit = 5,
  Minibatch = 6,
  BenchAction = 7,
  EpisodeDraw = 8,
};

class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t key) : state_(key) {}

  constexpr std::uint64_t next() { return splitmix64(state_ += kGamma); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Modulo bias is ~n/2^64, irrelevant here.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  bool coin() { return (next() & 1ull) != 0; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  std::uint64_t state_;
};

template <class Container>
void fisher_yates_shuffle(Container& items, CounterRng& rng) {
  const std::size_t n = items.size();
  if (n < 2) return;
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
    if (i != j) std::swap(items[i], items[j]);
  }
}

}  // namespace marlob
