#include "pinnpid/dynamics.hpp"

#include <iomanip>
#include <limits>
#include <ostream>

namespace pinnpid {

void ManipulatorParams::validate() const {
  for (double v : {m1, m2, l1, l2, i1, i2})
    if (!(v > 0.0)) throw DomainError("manipulator masses, lengths and inertias must be positive");
  if (!(lc1 > 0.0 && lc2 > 0.0)) throw DomainError("manipulator centre-of-mass distances must be positive");
  if (!(gravity >= 0.0) || joint_damping < 0.0) throw DomainError("manipulator gravity/damping must be nonnegative");
  if (b_alpha == 0.0 || b_beta == 0.0) throw DomainError("manipulator input matrix is singular");
}

void MsdParams::validate() const {
  if (!(mass > 0.0 && damping > 0.0 && stiffness > 0.0)) throw DomainError("MSD parameters must be positive");
}

Eigen::Matrix2d manipulator_inertia(const ManipulatorParams& p, double beta) {
  const double c2 = std::cos(beta);
  Eigen::Matrix2d d;
  d(0, 0) = p.m1 * p.lc1 * p.lc1 + p.i1 + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + 2.0 * p.l1 * p.lc2 * c2) + p.i2;
  d(0, 1) = d(1, 0) = p.m2 * (p.lc2 * p.lc2 + p.l1 * p.lc2 * c2) + p.i2;
  d(1, 1) = p.m2 * p.lc2 * p.lc2 + p.i2;
  return d;
}

double manipulator_energy(const ManipulatorParams& p, const Vec& x) {
  const Eigen::Vector2d qd(x[2], x[3]);
  const double kinetic = 0.5 * qd.dot(manipulator_inertia(p, x[1]) * qd);
  const double potential = (p.m1 * p.lc1 + p.m2 * p.l1) * p.gravity * std::cos(x[0]) +
                           p.m2 * p.lc2 * p.gravity * std::cos(x[0] + x[1]);
  return kinetic + potential;
}

Vec gravity_compensation_input(const ManipulatorParams& p, const Vec& q_ref) {
  if (q_ref.size() < 2) throw DomainError("gravity_compensation_input needs (alpha, beta)");
  if (p.b_alpha == 0.0 || p.b_beta == 0.0) throw DomainError("singular input matrix B");
  double g[2];
  manipulator_gravity(p, q_ref[0], q_ref[1], g);
  Vec u(2);
  u << g[0] / p.b_alpha, g[1] / p.b_beta;
  return u;
}

namespace {

template <int N, int M, class Fn>
Mat dual_jacobian(const Vec& x, const Vec& u, Fn&& fn) {
  Mat jac(N, N);
  Dual xd[N], ud[M], out[N];
  for (int j = 0; j < M; ++j) ud[j] = Dual(u[j]);
  for (int col = 0; col < N; ++col) {
    for (int i = 0; i < N; ++i) xd[i] = Dual(x[i], i == col ? 1.0 : 0.0);
    fn(xd, ud, out);
    for (int i = 0; i < N; ++i) jac(i, col) = out[i].d;
  }
  return jac;
}

void check_dims(const Vec& x, const Vec& u, int n, int m) {
  if (x.size() != n || u.size() != m) throw DomainError("plant state/input dimension mismatch");
}

void check_batch(const Mat& X, const Mat& U, int n, int m) {
  if (X.rows() != n || U.rows() != m || X.cols() != U.cols()) throw DomainError("plant batch dimension mismatch");
}

}  // namespace

Mat Plant::rhs_batch(const Mat& X, const Mat& U) const {
  check_batch(X, U, state_dim(), input_dim());
  Mat out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) out.col(j) = rhs(X.col(j), U.col(j));
  return out;
}

Mat Plant::state_vjp_batch(const Mat& X, const Mat& U, const Mat& W) const {
  check_batch(X, U, state_dim(), input_dim());
  Mat out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) out.col(j) = state_jacobian(X.col(j), U.col(j)).transpose() * W.col(j);
  return out;
}

MsdPlant::MsdPlant(MsdParams p) : params_(p) { params_.validate(); }

Vec MsdPlant::rhs(const Vec& x, const Vec& u) const {
  check_dims(x, u, 2, 1);
  Vec dx(2);
  msd_rhs(params_, x.data(), u.data(), dx.data());
  return dx;
}

Mat MsdPlant::state_jacobian(const Vec& x, const Vec& u) const {
  check_dims(x, u, 2, 1);
  return dual_jacobian<2, 1>(x, u, [&](const Dual* xd, const Dual* ud, Dual* out) { msd_rhs(params_, xd, ud, out); });
}

Mat MsdPlant::rhs_batch(const Mat& X, const Mat& U) const {
  check_batch(X, U, 2, 1);
  Mat out(2, X.cols());
  out.row(0) = X.row(1);
  out.row(1) = (U.row(0) - params_.damping * X.row(1) - params_.stiffness * X.row(0)) / params_.mass;
  return out;
}

Mat MsdPlant::state_vjp_batch(const Mat& X, const Mat& U, const Mat& W) const {
  check_batch(X, U, 2, 1);
  if (W.rows() != 2 || W.cols() != X.cols()) throw DomainError("plant batch dimension mismatch");
  Mat out(2, X.cols());
  out.row(0) = -params_.stiffness / params_.mass * W.row(1);
  out.row(1) = W.row(0) - params_.damping / params_.mass * W.row(1);
  return out;
}

ManipulatorPlant::ManipulatorPlant(ManipulatorParams p) : params_(p) { params_.validate(); }

Vec ManipulatorPlant::rhs(const Vec& x, const Vec& u) const {
  check_dims(x, u, 4, 2);
  Vec dx(4);
  manipulator_rhs(params_, x.data(), u.data(), dx.data());
  return dx;
}

Mat ManipulatorPlant::state_jacobian(const Vec& x, const Vec& u) const {
  check_dims(x, u, 4, 2);
  return dual_jacobian<4, 2>(x, u,
                             [&](const Dual* xd, const Dual* ud, Dual* out) { manipulator_rhs(params_, xd, ud, out); });
}

Mat ManipulatorPlant::rhs_batch(const Mat& X, const Mat& U) const {
  check_batch(X, U, 4, 2);
  Mat out(4, X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) manipulator_rhs(params_, X.col(j).data(), U.col(j).data(), out.col(j).data());
  return out;
}

Mat ManipulatorPlant::state_vjp_batch(const Mat& X, const Mat& U, const Mat& W) const {
  check_batch(X, U, 4, 2);
  if (W.rows() != 4 || W.cols() != X.cols()) throw DomainError("plant batch dimension mismatch");
  Mat out(4, X.cols());
  Dual xd[4], ud[2], fd[4];
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    ud[0] = Dual(U(0, j));
    ud[1] = Dual(U(1, j));
    for (int col = 0; col < 4; ++col) {
      for (int i = 0; i < 4; ++i) xd[i] = Dual(X(i, j), i == col ? 1.0 : 0.0);
      manipulator_rhs(params_, xd, ud, fd);
      double acc = 0.0;
      for (int i = 0; i < 4; ++i) acc += fd[i].d * W(i, j);
      out(col, j) = acc;
    }
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const std::vector<Vec>& states, const std::vector<Vec>& inputs, double dt,
                          int substeps) {
  if (states.empty()) return;
  const Eigen::Index n = states.front().size();
  const Eigen::Index m = inputs.empty() ? 0 : inputs.front().size();
  os << 't';
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i + 1;
  for (Eigen::Index i = 0; i < m; ++i) os << ",u" << i + 1;
  os << '\n';
  os << std::setprecision(17);
  const double h = dt / substeps;
  for (std::size_t r = 0; r < states.size(); ++r) {
    const std::size_t k = r / substeps;
    const std::size_t kk = inputs.empty() ? 0 : std::min(k, inputs.size() - 1);
    os << double(r / substeps) * dt + double(r % substeps) * h;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << states[r][i];
    for (Eigen::Index i = 0; i < m; ++i) os << ',' << inputs[kk][i];
    os << '\n';
  }
}

}  // namespace pinnpid
