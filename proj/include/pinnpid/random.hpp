#pragma once

#include <cstdint>
#include <random>

namespace pinnpid {

/// Seeded generator with platform-independent draws.
///
/// Engine is std::mt19937_64 (fully specified by the standard). The
/// standard distributions are implementation-defined, so conversions to
/// uniform/normal variates are done here: uniform01 uses the top 53 bits,
/// integers use rejection sampling, normals use the Marsaglia polar method.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent stream seed from a base seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace pinnpid
