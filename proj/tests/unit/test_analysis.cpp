#include "pinnpid/analysis.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

using namespace pinnpid;

TEST_CASE("Routh-Hurwitz value at the baseline gains") {
  // (Kd + D)(Kp + K) - M Ki = (1.2 + 0.5)(1.2 + 1) - 1 = 2.74
  const FrozenLoop loop{MsdParams{}, 1.2, 1.0, 1.2};
  CHECK(routh_hurwitz(loop) == doctest::Approx(2.74).epsilon(1e-15));
  CHECK(is_stable(loop));
  const Eigen::Vector3d g = routh_hurwitz_gradient(loop);
  CHECK(g[0] == doctest::Approx(1.7));   // Kd + D
  CHECK(g[1] == doctest::Approx(-1.0));  // -M
  CHECK(g[2] == doctest::Approx(2.2));   // Kp + K
  CHECK(!is_stable(FrozenLoop{MsdParams{}, 0.0, 2.0, 0.0}));
  CHECK(!is_stable(FrozenLoop{MsdParams{}, -0.5, 0.0, 1.0}));
}

TEST_CASE("open-loop response at 1 rad/s") {
  // (1.2 - j + 1.2 j) / (-1 + 0.5 j + 1) = (1.2 + 0.2 j) / (0.5 j) = 0.4 - 2.4 j
  const std::complex<double> l = open_loop_response(FrozenLoop{MsdParams{}, 1.2, 1.0, 1.2}, 1.0);
  CHECK(l.real() == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(l.imag() == doctest::Approx(-2.4).epsilon(1e-14));
}

TEST_CASE("margin sign follows the Routh-Hurwitz sign (property)") {
  const FrequencyGrid grid;
  int n = 0;
  for (double kp = 0.0; kp <= 5.0; kp += 1.25)
    for (double ki = 0.1; ki <= 5.0; ki += 1.3)
      for (double kd = 0.0; kd <= 5.0; kd += 1.25) {
        const FrozenLoop loop{MsdParams{}, kp, ki, kd};
        const double g = routh_hurwitz(loop);
        if (std::abs(g) < 1e-3) continue;
        const double m = stability_margin(loop, grid);
        CHECK((m > 0.0) == (g > 0.0));
        ++n;
      }
  CHECK(n > 50);
}

TEST_CASE("margin is the distance of the Nyquist curve to -1") {
  const FrozenLoop loop{MsdParams{}, 1.2, 1.0, 1.2};
  const FrequencyGrid grid{1e-2, 1e3, 20000};
  double brute = INFINITY;
  for (double w : grid.omegas()) brute = std::min(brute, std::abs(open_loop_response(loop, w) + 1.0));
  double at = 0.0;
  const double m = stability_margin(loop, FrequencyGrid{}, &at);
  CHECK(m <= brute + 1e-12);
  CHECK(m == doctest::Approx(brute).epsilon(1e-5));
  CHECK(std::abs(open_loop_response(loop, at) + 1.0) == doctest::Approx(m));
}

TEST_CASE("gain crossover has unit magnitude") {
  const FrozenLoop loop{MsdParams{}, 1.2, 1.0, 1.2};
  const auto wc = gain_crossover(loop, FrequencyGrid{});
  REQUIRE(wc.has_value());
  CHECK(std::abs(open_loop_response(loop, *wc)) == doctest::Approx(1.0).epsilon(1e-6));
  // without an integrator and with tiny Kp, Kd the magnitude stays below one
  CHECK(!gain_crossover(FrozenLoop{MsdParams{}, 0.01, 0.0, 0.01}, FrequencyGrid{}).has_value());
}

TEST_CASE("report and Nyquist CSV") {
  const FrozenLoop loop{MsdParams{}, 1.2, 1.0, 1.2};
  const StabilityReport r = analyze(loop, FrequencyGrid{});
  CHECK(r.stable);
  CHECK(r.g == doctest::Approx(2.74));
  CHECK(r.margin > 0.0);
  std::ostringstream os;
  write_nyquist_csv(os, loop, FrequencyGrid{0.1, 10.0, 5});
  const std::string csv = os.str();
  CHECK(csv.rfind("omega,re,im\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS((FrequencyGrid{1.0, 0.5, 10}.validate()), DomainError);
  CHECK_THROWS_AS((FrequencyGrid{1e-2, 1e3, 1}.validate()), DomainError);
  const auto w = FrequencyGrid{1e-2, 1e2, 5}.omegas();
  CHECK(w.front() == doctest::Approx(1e-2));
  CHECK(w[2] == doctest::Approx(1.0));
  CHECK(w.back() == doctest::Approx(1e2));
}
