#pragma once

#include <cmath>
#include <cstdint>

namespace sdecov::rng {

// Counter-based pseudo-random numbers. Every draw is a pure function of
// (key, counter), so parallel code derives one key per logical stream
// (subject, replicate, trial) and results never depend on scheduling.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
inline constexpr std::uint64_t kWeyl = 0xD1B54A32D192ED03ull;

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Fold a stream index into a key (hierarchical seed derivation).
inline std::uint64_t derive(std::uint64_t key, std::uint64_t index) {
  return mix64(key ^ mix64(index));
}

inline std::uint64_t derive(std::uint64_t key, std::uint64_t a, std::uint64_t b) {
  return derive(derive(key, a), b);
}

/// Raw 64-bit word at position i of the stream keyed by `key`.
inline std::uint64_t word_at(std::uint64_t key, std::uint64_t i) {
  return mix64(key + i * kWeyl);
}

/// Uniform in (0,1), strictly away from both endpoints.
inline double to_unit(std::uint64_t w) {
  return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform_at(std::uint64_t key, std::uint64_t i) {
  return to_unit(word_at(key, i));
}

/// Standard normal via Box-Muller; draw i consumes words 2i and 2i+1.
inline double normal_at(std::uint64_t key, std::uint64_t i) {
  const double u1 = to_unit(word_at(key, 2 * i));
  const double u2 = to_unit(word_at(key, 2 * i + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

/// Wiener increment over a step of length `step`, drawn once per (key, k).
inline double wiener_increment(std::uint64_t key, std::uint64_t k, double step) {
  return std::sqrt(step) * normal_at(key, k);
}

/// Sequential convenience wrapper over the same counter stream.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  double uniform() { return to_unit(word_at(key_, n_++)); }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t n_ = 0;
};

}  // namespace sdecov::rng
