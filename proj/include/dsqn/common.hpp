#ifndef DSQN_COMMON_HPP
#define DSQN_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace dsqn {

// Violated precondition or malformed input structure (shape mismatch,
// unsorted sweep, empty batch, ...).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// Non-finite values where finite ones are required, or overflow while
// computing (the message names where it happened).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed run configuration; the message carries the offending field path.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

inline void require_finite(double x, const std::string& context) {
  if (!std::isfinite(x)) throw NumericError(context + ": non-finite value");
}

inline void require_finite(std::span<const double> xs, const std::string& context) {
  for (double x : xs)
    if (!std::isfinite(x)) throw NumericError(context + ": non-finite value");
}

// splitmix64; used to derive independent seed streams from one master seed.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(seed ^ mix_seed(stream));
}

// xoshiro256** with splitmix64 seeding. Self-contained so that draws are
// bit-reproducible independent of the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t z = seed;
    for (auto& w : state_) {
      z = mix_seed(z);
      w = z;
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
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
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n); rejection-free modulo bias is irrelevant for
  // the n used here (n << 2^64) but we debias anyway.
  std::uint64_t next_below(std::uint64_t n) {
    require(n > 0, "Rng::next_below: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  int next_int(int lo, int hi_inclusive) {
    return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi_inclusive - lo + 1)));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

// Compensated (Kahan) accumulator for long sums feeding tight tolerances.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

}  // namespace dsqn

#endif  // DSQN_COMMON_HPP
