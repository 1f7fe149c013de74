#include "pinnpid/dynamics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace pinnpid;

TEST_CASE("mass-spring-damper right-hand side") {
  const MsdPlant plant;
  const Vec dx = plant.rhs((Vec(2) << 0.5, -1.0).finished(), Vec::Constant(1, 2.0));
  CHECK(dx[0] == -1.0);
  CHECK(dx[1] == doctest::Approx(2.0 + 0.5 - 0.5));  // u - D v - K x with M = 1
  CHECK(MsdParams{}.damping_ratio() == doctest::Approx(0.25));
}

TEST_CASE("analytic Jacobians match finite differences") {
  const ManipulatorPlant arm;
  const Vec x = (Vec(4) << 0.3, -0.7, 0.4, -0.2).finished();
  const Vec u = (Vec(2) << 0.1, -0.05).finished();
  const Mat j = arm.state_jacobian(x, u);
  const double h = 1e-6;
  for (int c = 0; c < 4; ++c) {
    Vec xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    const Vec fd = (arm.rhs(xp, u) - arm.rhs(xm, u)) / (2 * h);
    CHECK((j.col(c) - fd).norm() < 1e-6);
  }
}

TEST_CASE("batched vector-Jacobian product agrees with the Jacobian") {
  const ManipulatorPlant arm;
  Mat X(4, 2), U(2, 2), W(4, 2);
  X << 0.1, -1.0, 0.5, 0.2, -0.3, 0.8, 0.2, 0.0;
  U << 0.1, 0.2, -0.3, 0.0;
  W << 1, 0, 2, 1, -1, 0.5, 0.3, -2;
  const Mat v = arm.state_vjp_batch(X, U, W);
  for (int j = 0; j < 2; ++j) CHECK((v.col(j) - arm.state_jacobian(X.col(j), U.col(j)).transpose() * W.col(j)).norm() < 1e-12);
  const Mat r = arm.rhs_batch(X, U);
  for (int j = 0; j < 2; ++j) CHECK((r.col(j) - arm.rhs(X.col(j), U.col(j))).norm() < 1e-12);
}

TEST_CASE("undamped, unforced arm conserves energy under fine RK4") {
  ManipulatorParams p;
  p.joint_damping = 0.0;
  const ManipulatorPlant arm(p);
  Vec x = (Vec(4) << 0.4, 0.3, 0.0, 0.0).finished();
  const Vec u = Vec::Zero(2);
  const double e0 = manipulator_energy(p, x);
  const auto f = [&](const Vec& s, const Vec& v) { return arm.rhs(s, v); };
  x = rk4_integrate(f, x, u, 2.0, 4000);
  CHECK(manipulator_energy(p, x) == doctest::Approx(e0).epsilon(1e-8));
}

TEST_CASE("gravity compensation holds the arm still") {
  const ManipulatorParams p;
  const ManipulatorPlant arm(p);
  for (double a : {0.0, 0.5, std::numbers::pi / 2, -1.0}) {
    for (double b : {0.0, -0.4, 0.9}) {
      const Vec q = (Vec(2) << a, b).finished();
      const Vec ug = gravity_compensation_input(p, q);
      const Vec x = (Vec(4) << a, b, 0.0, 0.0).finished();
      CHECK(arm.rhs(x, ug).norm() < 1e-12);
    }
  }
  // upright: no load
  CHECK(gravity_compensation_input(p, Vec::Zero(2)).norm() == 0.0);
  // horizontal: (m1 lc1 + m2 l1 + m2 lc2) g / b and m2 lc2 g / b
  const Vec uh = gravity_compensation_input(p, (Vec(2) << std::numbers::pi / 2, 0.0).finished());
  CHECK(uh[0] == doctest::Approx(-2.0 * 9.81 / 50.0));
  CHECK(uh[1] == doctest::Approx(-0.5 * 9.81 / 50.0));
}

TEST_CASE("inertia matrix is symmetric positive definite") {
  const ManipulatorParams p;
  for (double b = -3.0; b <= 3.0; b += 0.5) {
    const Eigen::Matrix2d d = manipulator_inertia(p, b);
    CHECK(d(0, 1) == d(1, 0));
    CHECK(d.determinant() > 0.0);
    CHECK(d(0, 0) > 0.0);
  }
}

TEST_CASE("RK4 is exact to rounding on a linear ramp") {
  const auto f = [](const Vec&, const Vec& u) { return u; };
  const Vec x = rk4_integrate(f, Vec::Zero(1), Vec::Constant(1, 2.0), 1.5, 7);
  CHECK(x[0] == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("RK4 rejects bad steps and blow-ups") {
  const auto f = [](const Vec& x, const Vec&) { return Vec(x.array().square() * 1e200); };
  CHECK_THROWS_AS(rk4_step(f, Vec::Constant(1, 1.0), Vec::Zero(1), 0.0), DomainError);
  CHECK_THROWS_AS(rk4_step(f, Vec::Constant(1, 1e200), Vec::Zero(1), 1.0), DomainError);
}

TEST_CASE("zero-order-hold rollout layout and CSV") {
  const MsdPlant plant;
  const auto f = [&](const Vec& x, const Vec& u) { return plant.rhs(x, u); };
  const std::vector<Vec> inputs{Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
  const auto states = simulate_zoh(f, Vec::Zero(2), inputs, 0.2, 4);
  CHECK(states.size() == 9u);
  std::ostringstream os;
  write_trajectory_csv(os, states, inputs, 0.2, 4);
  const std::string csv = os.str();
  CHECK(csv.rfind("t,x1,x2,u1\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
}

TEST_CASE("parameter validation") {
  MsdParams m;
  m.mass = 0.0;
  CHECK_THROWS_AS(m.validate(), DomainError);
  ManipulatorParams p;
  p.b_alpha = 0.0;
  CHECK_THROWS_AS(gravity_compensation_input(p, Vec::Zero(2)), DomainError);
}
