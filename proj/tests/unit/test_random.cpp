#include "pinnpid/random.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

using namespace pinnpid;

TEST_CASE("same seed gives the same stream") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next();
    CHECK(va == b.next());
    differs = differs || va != c.next();
  }
  CHECK(differs);
}

TEST_CASE("uniform draws stay in range") {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = rng.uniform(-2.0, 5.0);
    CHECK(v >= -2.0);
    CHECK(v < 5.0);
    CHECK(rng.below(7) < 7u);
  }
}

TEST_CASE("below covers every value") {
  Rng rng(11);
  std::vector<int> hits(5, 0);
  for (int i = 0; i < 5000; ++i) ++hits[rng.below(5)];
  for (int h : hits) CHECK(h > 800);
}

TEST_CASE("normal draws have unit moments") {
  Rng rng(5);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  // 5 standard errors
  CHECK(std::abs(mean) < 5.0 / std::sqrt(n));
  CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("derived seeds are distinct per stream") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base = 0; base < 20; ++base)
    for (std::uint64_t stream = 0; stream < 20; ++stream) seen.insert(derive_seed(base, stream));
  CHECK(seen.size() == 400u);
  CHECK(derive_seed(1, 101) == derive_seed(1, 101));
}
