#include "pinnpid/random.hpp"
#include "pinnpid/common.hpp"

#include <cmath>
#include <limits>

namespace pinnpid {

void Box::validate(const std::string& what, bool strict) const {
  if (lower.size() != upper.size()) throw DomainError(what + ": bound dimensions differ");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i])) throw DomainError(what + ": non-finite bound");
    if (strict ? !(lower[i] < upper[i]) : !(lower[i] <= upper[i]))
      throw DomainError(what + ": lower bound exceeds upper bound at index " + std::to_string(i));
  }
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r = engine_();
  while (r >= limit) r = engine_();
  return r % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double a, b, s;
  do {
    a = 2.0 * uniform01() - 1.0;
    b = 2.0 * uniform01() - 1.0;
    s = a * a + b * b;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = b * f;
  has_spare_ = true;
  return a * f;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finaliser over the combined value
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace pinnpid
