#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace phonolase {

/// Deterministic standard-normal source. Uses the Marsaglia polar method on
/// top of mt19937_64 so the draw sequence is identical across platforms and
/// standard libraries for a given seed.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  double uniform() {
    // 53-bit mantissa uniform in [0,1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Seed-splitting rule for concurrent runs: mix the master seed with the run
/// index through a splitmix64 finalizer. Documented so manifests alone can
/// reproduce every sub-run.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace phonolase
