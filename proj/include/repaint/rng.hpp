#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace repaint {

// xoshiro256++ with splitmix64 seeding. Self-contained so that trajectories
// and parameter updates are reproducible bit-for-bit across runs of the same
// build, independent of the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller, spare cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Inverse-CDF draw from an explicit probability vector.
  int categorical(const std::vector<double>& probs) {
    const double u = uniform();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      cumulative += probs[i];
      if (u < cumulative) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  std::uint64_t state_[4]{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Deterministic derivation of independent seed streams. The training loop
// keys every consumer (student rollouts, teacher rollouts, minibatch
// shuffling, evaluation, ...) separately so that enabling or disabling one
// consumer does not shift the draws seen by the others.
enum class Stream : std::uint64_t {
  kStudentRollout = 1,
  kTeacherRollout = 2,
  kCriticUpdate = 3,
  kActorUpdate = 4,
  kEvaluation = 5,
  kInit = 6,
  kSelection = 7,
  kEnv = 8,
};

inline std::uint64_t derive_seed(std::uint64_t root, Stream stream,
                                 std::uint64_t index = 0) {
  std::uint64_t x = root ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(stream));
  std::uint64_t a = Rng::splitmix64(x);
  x = a ^ (0xd1342543de82ef95ULL * (index + 1));
  return Rng::splitmix64(x);
}

}  // namespace repaint
