#pragma once

// Seeded randomness. Every random quantity is derived from a master seed
// through a named stream, so topology, side information and channel draws never
// share state. Channel draws are counter-based: the draw for (episode, slot,
// receiver) is a pure function of those numbers, which gives every scheduler
// the same channel realisation in paired comparisons.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace idnc::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t {
  episode = 1,   // per-episode seed from the master seed
  topology = 2,  // connectivity matrix
  side_info = 3, // initial status matrix
  channel = 4,   // Bernoulli erasures
};

constexpr std::uint64_t derive(std::uint64_t seed, Stream stream, std::uint64_t a = 0,
                               std::uint64_t b = 0) noexcept {
  std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
  h = splitmix64(h ^ splitmix64(a + 0x632BE59BD9B4E019ULL));
  h = splitmix64(h ^ splitmix64(b + 0x8CB92BA72F3D8DD7ULL));
  return h;
}

/// 53-bit uniform in [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Uniform draw deciding whether device `rx` receives in slot `slot`.
constexpr double channel_uniform(std::uint64_t episode_seed, std::size_t slot,
                                 std::size_t rx) noexcept {
  return to_unit(derive(episode_seed, Stream::channel, slot, rx));
}

/// Sequential generator. Distribution code is written out here rather than
/// taken from <random> so that sequences do not depend on the standard library.
class Generator {
public:
  explicit Generator(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform() { return to_unit(engine_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

private:
  std::mt19937_64 engine_;
};

} // namespace idnc::rng
