#pragma once

#include <cmath>
#include <cstdint>

namespace riwtl::rng {

// Finalizer of the splitmix64 generator (Steele, Lea & Flood 2014).
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Stream identifiers. Every random quantity in the library draws from a
// stream keyed by (seed, purpose, a, b) so that results are reproducible
// across platforms and independent of evaluation order or thread count.
// Conventions: a = replicate index where applicable, b = dataset index
// (0 = target, 1..K = sources) or another sub-id documented at the call site.
namespace stream {
inline constexpr std::uint64_t covariates = 1;
inline constexpr std::uint64_t noise = 2;
inline constexpr std::uint64_t coefficients = 3;
inline constexpr std::uint64_t split = 4;
inline constexpr std::uint64_t scad_cv = 5;
inline constexpr std::uint64_t cv_folds = 6;
inline constexpr std::uint64_t test_data = 7;
}  // namespace stream

inline constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t purpose,
                                          std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t k = mix64(seed + 0x9E3779B97F4A7C15ull);
  k = mix64(k ^ (purpose + 0xD1B54A32D192ED03ull));
  k = mix64(k ^ (a + 0x8CB92BA72F3D8DD7ull));
  k = mix64(k ^ (b + 0xEB44ACCAB455D165ull));
  return k;
}

// Counter-based splitmix64 stream. Output i is mix64 of seed + i*gamma, so
// the sequence is fully determined by the key and position; identical on
// every platform. Normal variates come from a Box-Muller pair with the
// second value cached.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    return mix64(z);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log() argument.
  double next_double_open() { return 1.0 - next_double(); }

  double next_normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = next_double_open();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.28318530717958647692 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  // Chi-square with integer degrees of freedom as a sum of squared normals.
  double next_chi_squared(int df) {
    double s = 0.0;
    for (int i = 0; i < df; ++i) {
      const double z = next_normal();
      s += z * z;
    }
    return s;
  }

  // Student t with integer degrees of freedom.
  double next_student_t(int df) {
    const double z = next_normal();
    const double w = next_chi_squared(df);
    return z * std::sqrt(static_cast<double>(df) / w);
  }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

inline constexpr const char* generator_name() { return "splitmix64"; }

}  // namespace riwtl::rng
