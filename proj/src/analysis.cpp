#include "pinnpid/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <iomanip>
#include <ostream>

namespace pinnpid {

std::vector<double> FrequencyGrid::omegas() const {
  validate();
  std::vector<double> w(points);
  const double a = std::log10(omega_min), b = std::log10(omega_max);
  for (int i = 0; i < points; ++i) w[i] = std::pow(10.0, a + (b - a) * i / (points - 1));
  w.back() = omega_max;
  return w;
}

void FrequencyGrid::validate() const {
  if (!(omega_min > 0.0 && omega_max > omega_min)) throw DomainError("frequency grid needs 0 < omega_min < omega_max");
  if (points < 2) throw DomainError("frequency grid needs at least two points");
}

std::complex<double> open_loop_response(const FrozenLoop& loop, double omega) {
  if (!(omega > 0.0)) throw DomainError("open_loop_response: omega must be positive");
  const std::complex<double> s(0.0, omega);
  const auto& p = loop.plant;
  const std::complex<double> pid = loop.kp + loop.ki / s + loop.kd * s;
  return pid / (p.mass * s * s + p.damping * s + p.stiffness);
}

double routh_hurwitz(const FrozenLoop& loop) {
  const auto& p = loop.plant;
  return (loop.kd + p.damping) * (loop.kp + p.stiffness) - p.mass * loop.ki;
}

Eigen::Vector3d routh_hurwitz_gradient(const FrozenLoop& loop) {
  const auto& p = loop.plant;
  return {loop.kd + p.damping, -p.mass, loop.kp + p.stiffness};
}

bool is_stable(const FrozenLoop& loop) {
  return routh_hurwitz(loop) > 0.0 && loop.kp >= 0.0 && loop.ki >= 0.0 && loop.kd >= 0.0;
}

namespace {

double distance(const FrozenLoop& loop, double log_w) {
  return std::abs(open_loop_response(loop, std::pow(10.0, log_w)) + 1.0);
}

}  // namespace

double stability_margin(const FrozenLoop& loop, const FrequencyGrid& grid, double* omega_at) {
  const auto w = grid.omegas();
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = std::abs(open_loop_response(loop, w[i]) + 1.0);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  // golden-section search on log10(omega) between the neighbours
  double a = std::log10(w[best == 0 ? 0 : best - 1]);
  double b = std::log10(w[std::min(best + 1, w.size() - 1)]);
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = distance(loop, c), fd = distance(loop, d);
  for (int it = 0; it < 100 && b - a > 1e-12; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = distance(loop, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = distance(loop, d);
    }
  }
  double w_best = w[best];
  const double mid = 0.5 * (a + b);
  const double f_mid = distance(loop, mid);
  if (f_mid < best_d) {
    best_d = f_mid;
    w_best = std::pow(10.0, mid);
  }
  if (omega_at != nullptr) *omega_at = w_best;
  return is_stable(loop) ? best_d : -best_d;
}

std::optional<double> gain_crossover(const FrozenLoop& loop, const FrequencyGrid& grid) {
  const auto w = grid.omegas();
  auto h = [&](double omega) { return std::abs(open_loop_response(loop, omega)) - 1.0; };
  double prev = h(w[0]);
  if (prev == 0.0) return w[0];
  for (std::size_t i = 1; i < w.size(); ++i) {
    const double cur = h(w[i]);
    if (cur == 0.0) return w[i];
    if ((prev < 0.0) != (cur < 0.0)) {
      double lo = w[i - 1], hi = w[i], f_lo = prev;
      while (hi - lo > 1e-7 * lo) {
        const double mid = std::sqrt(lo * hi);
        const double f_mid = h(mid);
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
          lo = mid;
          f_lo = f_mid;
        } else {
          hi = mid;
        }
      }
      return std::sqrt(lo * hi);
    }
    prev = cur;
  }
  return std::nullopt;
}

StabilityReport analyze(const FrozenLoop& loop, const FrequencyGrid& grid) {
  StabilityReport r;
  r.g = routh_hurwitz(loop);
  r.stable = is_stable(loop);
  r.margin = stability_margin(loop, grid, &r.margin_omega);
  r.crossover = gain_crossover(loop, grid);
  return r;
}

void write_nyquist_csv(std::ostream& os, const FrozenLoop& loop, const FrequencyGrid& grid) {
  os << "omega,re,im\n" << std::setprecision(17);
  for (double w : grid.omegas()) {
    const auto l = open_loop_response(loop, w);
    os << w << ',' << l.real() << ',' << l.imag() << '\n';
  }
}

}  // namespace pinnpid
