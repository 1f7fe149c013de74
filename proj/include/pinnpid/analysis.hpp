#pragma once

/**
 * @file analysis.hpp
 * @brief Frozen-gain stability of the PID loop around the mass-spring-damper:
 * open-loop response, Routh-Hurwitz value, signed Nyquist margin, crossover.
 */

#include "pinnpid/dynamics.hpp"

#include <complex>
#include <iosfwd>
#include <optional>
#include <vector>

namespace pinnpid {

/// L(s) = (Kp + Ki/s + Kd s) / (M s^2 + D s + K) with the gains held fixed.
struct FrozenLoop {
  MsdParams plant;
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
};

/// Logarithmic frequency grid in rad/s.
struct FrequencyGrid {
  double omega_min = 1e-2;
  double omega_max = 1e3;
  int points = 2000;

  [[nodiscard]] std::vector<double> omegas() const;
  void validate() const;
};

struct StabilityReport {
  double g = 0.0;       ///< Routh-Hurwitz value
  double margin = 0.0;  ///< signed distance of the Nyquist curve to -1
  double margin_omega = 0.0;
  std::optional<double> crossover;  ///< smallest omega with |L| = 1
  bool stable = false;
};

std::complex<double> open_loop_response(const FrozenLoop& loop, double omega);

/// g = (Kd + D)(Kp + K) - M Ki; the closed-loop characteristic polynomial is
/// M s^3 + (D + Kd) s^2 + (K + Kp) s + Ki.
double routh_hurwitz(const FrozenLoop& loop);
/// Partial derivatives of g with respect to (Kp, Ki, Kd).
Eigen::Vector3d routh_hurwitz_gradient(const FrozenLoop& loop);

/// Stable in the sense used throughout: g > 0 and all gains nonnegative.
bool is_stable(const FrozenLoop& loop);

/// Minimum of |L(j w) + 1| over the grid, refined by golden-section search
/// around the best grid point; positive when stable, negative otherwise.
/// The minimising frequency is written to `omega_at` when non-null.
double stability_margin(const FrozenLoop& loop, const FrequencyGrid& grid, double* omega_at = nullptr);

/// Smallest frequency where |L(j w)| crosses 1, bisected to 1e-7 relative.
std::optional<double> gain_crossover(const FrozenLoop& loop, const FrequencyGrid& grid);

StabilityReport analyze(const FrozenLoop& loop, const FrequencyGrid& grid);

/// CSV `omega,re,im` over the grid.
void write_nyquist_csv(std::ostream& os, const FrozenLoop& loop, const FrequencyGrid& grid);

}  // namespace pinnpid
