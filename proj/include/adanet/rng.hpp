#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace adanet {

// Substream purposes. Every consumer of randomness draws from its own stream
// so that, e.g., turning augmentation off does not shift initialization.
enum class RngPurpose : std::uint64_t {
  kInit = 1,
  kSampling = 2,
  kAugmentation = 3,
  kSynthesis = 4,
  kGradCheck = 5,
};

// xoshiro256** seeded through splitmix64. Uniform and normal variates are
// derived here rather than through <random> distributions, whose output is
// implementation-defined; draws are identical on every conforming platform.
class Rng {
 public:
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed = 0);

  static Rng from_state(const State& state);

  // Independent child stream keyed by purpose and an optional index (e.g. a
  // scene number). Does not advance this stream.
  [[nodiscard]] Rng substream(RngPurpose purpose, std::uint64_t index = 0) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p);
  // Standard normal via Box-Muller; the spare variate is cached in the state.
  double normal();
  double normal(double mean, double stddev);

  [[nodiscard]] const State& state() const { return state_; }
  [[nodiscard]] bool has_spare() const { return has_spare_; }
  [[nodiscard]] double spare() const { return spare_; }
  void set_spare(bool has, double value) {
    has_spare_ = has;
    spare_ = value;
  }

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.state_ == b.state_ && a.has_spare_ == b.has_spare_ && (!a.has_spare_ || a.spare_ == b.spare_);
  }

 private:
  State state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& x);

// Fisher-Yates with this generator.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.below(i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace adanet
