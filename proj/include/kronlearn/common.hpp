#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace kronlearn {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Shape or index precondition violated.
struct dimension_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Iterative routine hit its cap before reaching tolerance.
struct convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Packing construction could not be completed (retry cap, impossible params).
struct construction_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent experiment configuration (CLI exit code 1).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A verification check failed (CLI exit code 2).
struct check_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives a child seed from a master seed and a path of indices, so parallel
// or reordered sampling of column c / trial t is reproducible regardless of
// evaluation order.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = master ^ 0x5851f42d4c957f2dULL;
  std::uint64_t h = splitmix64(s);
  for (std::uint64_t part : path) {
    s ^= part + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= splitmix64(s);
  }
  return h;
}

// Deterministic RNG wrapper. Gaussian draws use the Box-Muller transform of
// uniforms (pair cached) so the stream does not depend on library internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1).
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform integer in {0, ..., n-1} by rejection.
  std::size_t index(std::size_t n) {
    if (n == 0) throw dimension_error("Rng::index: n must be positive");
    const std::uint64_t span = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t draw;
    do {
      draw = gen_();
    } while (draw >= limit);
    return static_cast<std::size_t>(draw % span);
  }

  // Rademacher +/-1.
  double sign() { return (gen_() & 1ULL) ? 1.0 : -1.0; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(kTwoPi * u2);
    have_spare_ = true;
    return radius * std::cos(kTwoPi * u2);
  }

  double normal(double stddev) { return stddev * normal(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace kronlearn
