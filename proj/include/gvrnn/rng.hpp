#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace gvrnn {

/// Seeded random stream. Distribution sampling is implemented here rather
/// than through <random> distributions so that draws are identical across
/// standard libraries and the whole state is the engine state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  /// Integer uniform in [lo, hi], inclusive.
  int uniform_int(int lo, int hi);

  /// Standard normal via Box-Muller; consumes two uniforms per draw.
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  /// Fisher-Yates shuffle of [0, n).
  std::vector<int> permutation(int n);

  std::string state() const;
  void set_state(const std::string& s);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Stateless mixing of (seed, index) into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace gvrnn
