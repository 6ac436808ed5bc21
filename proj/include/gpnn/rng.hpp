#pragma once

#include <cmath>
#include <cstdint>

namespace gpnn {

// splitmix64 finalizer; bijective on 64-bit words.
inline uint64_t mix64(uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// Purpose tags keep the substream spaces of unrelated consumers disjoint even
// when they share the run seed. index must stay below 2^56.
namespace stream {
constexpr uint64_t train_game = 1;
constexpr uint64_t test_game = 2;
constexpr uint64_t init_p1 = 3;
constexpr uint64_t init_p2 = 4;
constexpr uint64_t action = 5;
constexpr uint64_t affine = 6;
constexpr uint64_t br_equiv = 7;
constexpr uint64_t monotonic = 8;
constexpr uint64_t misc = 9;
}  // namespace stream

inline uint64_t stream_seed(uint64_t seed, uint64_t purpose, uint64_t index) {
  uint64_t h = mix64(seed + 0x9E3779B97F4A7C15ull);
  h = mix64(h ^ ((purpose << 56) | index));
  return mix64(h + 0x9E3779B97F4A7C15ull);
}

// Counter-based splittable generator: a splitmix64 stream whose initial state
// is derived from (seed, purpose, index). Results never depend on thread
// scheduling because every consumer owns its substream.
class Rng {
 public:
  explicit Rng(uint64_t state) : state_(state) {}
  Rng(uint64_t seed, uint64_t purpose, uint64_t index)
      : state_(stream_seed(seed, purpose, index)) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
  }

  // [0, 1), 53-bit resolution
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }
  // (0, 1]
  double uniform_pos() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // i in [0, n)
  uint64_t below(uint64_t n) {
    // rejection keeps the draw exactly uniform
    uint64_t limit = ~uint64_t(0) - ~uint64_t(0) % n;
    uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  double gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform_pos();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace gpnn
