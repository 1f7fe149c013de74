#pragma once

/**
 * @file dynamics.hpp
 * @brief Ground-truth plants, RK4 integration and zero-order-hold rollout.
 *
 * Plants are written once as templates over the scalar type so that the same
 * code yields the right-hand side (double) and its state Jacobian (Dual).
 */

#include "pinnpid/common.hpp"

#include <cmath>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace pinnpid {

/// First-order forward-mode dual number.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  Dual(double value, double deriv = 0.0) : v(value), d(deriv) {}  // NOLINT(implicit)
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
inline Dual sin(Dual a) { return {std::sin(a.v), a.d * std::cos(a.v)}; }
inline Dual cos(Dual a) { return {std::cos(a.v), -a.d * std::sin(a.v)}; }

inline double value_of(double v) { return v; }
inline double value_of(const Dual& v) { return v.v; }

// -- parameters -------------------------------------------------------------------

/// Two-link arm; angles measured from the upright vertical, beta relative to link 1.
struct ManipulatorParams {
  double m1 = 1.0, m2 = 1.0;           // kg
  double l1 = 1.0, l2 = 1.0;           // m
  double lc1 = 0.5, lc2 = 0.5;         // m, joint to centre of mass
  double i1 = 1.0, i2 = 1.0;           // kg m^2 about the centre of mass, reflected rotor inertia included
  double gravity = 9.81;               // m/s^2
  double b_alpha = 50.0, b_beta = 50.0;  // N m per input unit; 0.48 b exceeds the worst static gravity load
  double joint_damping = 20.0;         // N m s/rad, viscous, both joints (geared drive)

  void validate() const;
};

struct MsdParams {
  double mass = 1.0;       // kg
  double damping = 0.5;    // N s/m
  double stiffness = 1.0;  // N/m

  [[nodiscard]] double damping_ratio() const { return damping / (2.0 * std::sqrt(mass * stiffness)); }
  [[nodiscard]] double natural_frequency() const { return std::sqrt(stiffness / mass); }
  void validate() const;
};

// -- right-hand sides ---------------------------------------------------------------

template <class T>
void msd_rhs(const MsdParams& p, const T* x, const T* u, T* dx) {
  dx[0] = x[1];
  dx[1] = (u[0] - T(p.damping) * x[1] - T(p.stiffness) * x[0]) / T(p.mass);
}

/// Gravity vector g(q) of D(q) q'' + C(q, q') q' + g(q) = B u.
template <class T>
void manipulator_gravity(const ManipulatorParams& p, const T& alpha, const T& beta, T* g) {
  using std::sin;
  const T s1 = sin(alpha), s12 = sin(alpha + beta);
  const double k1 = (p.m1 * p.lc1 + p.m2 * p.l1) * p.gravity;
  const double k2 = p.m2 * p.lc2 * p.gravity;
  g[0] = -(T(k1) * s1 + T(k2) * s12);
  g[1] = -(T(k2) * s12);
}

template <class T>
void manipulator_rhs(const ManipulatorParams& p, const T* x, const T* u, T* dx) {
  using std::cos;
  using std::sin;
  const T& alpha = x[0];
  const T& beta = x[1];
  const T& da = x[2];
  const T& db = x[3];
  const T c2 = cos(beta), s2 = sin(beta);

  const T d11 = T(p.m1 * p.lc1 * p.lc1 + p.i1 + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2) + p.i2) +
                T(2.0 * p.m2 * p.l1 * p.lc2) * c2;
  const T d12 = T(p.m2 * p.lc2 * p.lc2 + p.i2) + T(p.m2 * p.l1 * p.lc2) * c2;
  const T d22 = T(p.m2 * p.lc2 * p.lc2 + p.i2);
  const T h = T(-p.m2 * p.l1 * p.lc2) * s2;

  // C(q, q') q'
  const T cq0 = h * db * da + h * (da + db) * db;
  const T cq1 = -(h * da) * da;

  T g[2];
  manipulator_gravity(p, alpha, beta, g);

  const T r0 = T(p.b_alpha) * u[0] - cq0 - g[0] - T(p.joint_damping) * da;
  const T r1 = T(p.b_beta) * u[1] - cq1 - g[1] - T(p.joint_damping) * db;

  const T det = d11 * d22 - d12 * d12;
  if (std::abs(value_of(det)) < 1e-12) throw DomainError("manipulator inertia matrix is singular");
  dx[0] = da;
  dx[1] = db;
  dx[2] = (d22 * r0 - d12 * r1) / det;
  dx[3] = (d11 * r1 - d12 * r0) / det;
}

/// Inertia matrix D(q) (used by the energy check and tests).
Eigen::Matrix2d manipulator_inertia(const ManipulatorParams& p, double beta);

/// Kinetic plus potential energy.
double manipulator_energy(const ManipulatorParams& p, const Vec& x);

/// Steady-state input u = B^{-1} g(q_ref) that holds the arm at q_ref.
Vec gravity_compensation_input(const ManipulatorParams& p, const Vec& q_ref);

// -- plant interface ------------------------------------------------------------------

class Plant {
 public:
  virtual ~Plant() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual int state_dim() const = 0;
  [[nodiscard]] virtual int input_dim() const = 0;
  /// Number of leading "position" coordinates the PID acts on.
  [[nodiscard]] virtual int position_dim() const = 0;
  [[nodiscard]] virtual Vec rhs(const Vec& x, const Vec& u) const = 0;
  /// d rhs / d x, n x n.
  [[nodiscard]] virtual Mat state_jacobian(const Vec& x, const Vec& u) const = 0;
  [[nodiscard]] virtual std::unique_ptr<Plant> clone() const = 0;

  /// Columnwise rhs for states X (n x B) and inputs U (m x B).
  [[nodiscard]] virtual Mat rhs_batch(const Mat& X, const Mat& U) const;
  /// Columnwise J_x f(x_j, u_j)^T w_j.
  [[nodiscard]] virtual Mat state_vjp_batch(const Mat& X, const Mat& U, const Mat& W) const;

  Vec operator()(const Vec& x, const Vec& u) const { return rhs(x, u); }
};

class MsdPlant final : public Plant {
 public:
  explicit MsdPlant(MsdParams p = {});
  [[nodiscard]] std::string name() const override { return "msd"; }
  [[nodiscard]] int state_dim() const override { return 2; }
  [[nodiscard]] int input_dim() const override { return 1; }
  [[nodiscard]] int position_dim() const override { return 1; }
  [[nodiscard]] Vec rhs(const Vec& x, const Vec& u) const override;
  [[nodiscard]] Mat state_jacobian(const Vec& x, const Vec& u) const override;
  [[nodiscard]] std::unique_ptr<Plant> clone() const override { return std::make_unique<MsdPlant>(*this); }
  [[nodiscard]] Mat rhs_batch(const Mat& X, const Mat& U) const override;
  [[nodiscard]] Mat state_vjp_batch(const Mat& X, const Mat& U, const Mat& W) const override;
  [[nodiscard]] const MsdParams& params() const { return params_; }

 private:
  MsdParams params_;
};

class ManipulatorPlant final : public Plant {
 public:
  explicit ManipulatorPlant(ManipulatorParams p = {});
  [[nodiscard]] std::string name() const override { return "manipulator"; }
  [[nodiscard]] int state_dim() const override { return 4; }
  [[nodiscard]] int input_dim() const override { return 2; }
  [[nodiscard]] int position_dim() const override { return 2; }
  [[nodiscard]] Vec rhs(const Vec& x, const Vec& u) const override;
  [[nodiscard]] Mat state_jacobian(const Vec& x, const Vec& u) const override;
  [[nodiscard]] std::unique_ptr<Plant> clone() const override { return std::make_unique<ManipulatorPlant>(*this); }
  [[nodiscard]] Mat rhs_batch(const Mat& X, const Mat& U) const override;
  [[nodiscard]] Mat state_vjp_batch(const Mat& X, const Mat& U, const Mat& W) const override;
  [[nodiscard]] const ManipulatorParams& params() const { return params_; }

 private:
  ManipulatorParams params_;
};

// -- integration ------------------------------------------------------------------------

/// One classical RK4 step with u held constant. Throws DomainError on a
/// non-finite stage.
template <class Rhs>
Vec rk4_step(const Rhs& f, const Vec& x, const Vec& u, double h) {
  if (!(h > 0.0)) throw DomainError("rk4_step: step must be positive");
  const Vec k1 = f(x, u);
  const Vec k2 = f(Vec(x + 0.5 * h * k1), u);
  const Vec k3 = f(Vec(x + 0.5 * h * k2), u);
  const Vec k4 = f(Vec(x + h * k3), u);
  Vec next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!k1.allFinite() || !k2.allFinite() || !k3.allFinite() || !k4.allFinite() || !next.allFinite())
    throw DomainError("rk4_step: non-finite stage (integration blow-up)");
  return next;
}

/// Integrates from 0 to `duration` in `steps` equal RK4 steps.
template <class Rhs>
Vec rk4_integrate(const Rhs& f, Vec x, const Vec& u, double duration, int steps) {
  const double h = duration / steps;
  for (int i = 0; i < steps; ++i) x = rk4_step(f, x, u, h);
  return x;
}

/// Applies each held input for dt using `substeps` RK4 steps. Returns the
/// states at every substep boundary, starting with x0.
template <class Rhs>
std::vector<Vec> simulate_zoh(const Rhs& f, const Vec& x0, const std::vector<Vec>& inputs, double dt, int substeps) {
  if (substeps < 1) throw DomainError("simulate_zoh: substeps must be >= 1");
  if (!(dt > 0.0)) throw DomainError("simulate_zoh: dt must be positive");
  std::vector<Vec> out;
  out.reserve(1 + inputs.size() * substeps);
  out.push_back(x0);
  const double h = dt / substeps;
  for (const Vec& u : inputs) {
    for (int s = 0; s < substeps; ++s) out.push_back(rk4_step(f, out.back(), u, h));
  }
  return out;
}

/// CSV with header t,x1..xn,u1..um; one row per substep boundary. The input
/// column holds the input applied over the following substep (the last row
/// repeats the final input).
void write_trajectory_csv(std::ostream& os, const std::vector<Vec>& states, const std::vector<Vec>& inputs, double dt,
                          int substeps);

}  // namespace pinnpid
