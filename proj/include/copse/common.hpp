#pragma once
// Shared error types, deterministic RNG, and schema constants.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace copse {

inline constexpr int kSchemaVersion = 1;

// Contract violations carry a dedicated type so callers and tests can
// distinguish failure modes without parsing messages.
struct DegenerateCloud : std::runtime_error { using std::runtime_error::runtime_error; };
struct InvalidCount : std::runtime_error { using std::runtime_error::runtime_error; };
struct RankDeficient : std::runtime_error { using std::runtime_error::runtime_error; };
struct WrongSymmetryKind : std::runtime_error { using std::runtime_error::runtime_error; };
struct NoSymmetry : std::runtime_error { using std::runtime_error::runtime_error; };
struct ShapeMismatch : std::runtime_error { using std::runtime_error::runtime_error; };
struct EmptyInput : std::runtime_error { using std::runtime_error::runtime_error; };
struct EmptyCloud : std::runtime_error { using std::runtime_error::runtime_error; };
struct NotScalar : std::runtime_error { using std::runtime_error::runtime_error; };
struct EmptyDataset : std::runtime_error { using std::runtime_error::runtime_error; };
struct EmptyPredictions : std::runtime_error { using std::runtime_error::runtime_error; };
struct IoError : std::runtime_error { using std::runtime_error::runtime_error; };
struct DegenerateView : std::runtime_error { using std::runtime_error::runtime_error; };
struct TrainingDiverged : std::runtime_error { using std::runtime_error::runtime_error; };

// Deterministic RNG: xoshiro256++ seeded through splitmix64, with hand-rolled
// distributions so streams are stable across standard library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
  }

  std::uint64_t next() {
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

  // Uniform in [0,1); 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; caches the spare value.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0,1], keeps log finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n).
  int index(int n) { return static_cast<int>(uniform() * static_cast<double>(n)); }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Derives a child seed from a parent seed and a stream tag.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL + (tag << 1));
    return splitmix64(x);
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::uint64_t state_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace copse
