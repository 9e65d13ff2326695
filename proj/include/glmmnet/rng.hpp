#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace glmmnet {

/// Deterministic random source. All transforms (normal, gamma, ...) are
/// implemented here rather than delegated to std:: distributions, whose
/// output is implementation-defined; two runs with the same seed produce
/// the same stream on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer on [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Standard normal via the polar method (one spare draw cached).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma(shape, scale) via Marsaglia-Tsang squeeze.
  double gamma(double shape, double scale);

  double beta(double a, double b);

  long poisson(double mean);

  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  /// Fisher-Yates shuffle driven by uniform_int (std::shuffle is not
  /// reproducible across standard library implementations).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64-style avalanche; combines a base seed with stream labels so
/// that distinct (experiment, replicate, model) cells get decorrelated
/// generators.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// FNV-1a hash, used to derive per-model seed labels from names and to
/// checksum datasets.
std::uint64_t fnv1a64(std::string_view s);

}  // namespace glmmnet
