#include "pinnpid/gainopt.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace pinnpid;

namespace {

ExactLinearModel exact_msd() {
  Mat a(2, 2), b(2, 1);
  a << 0.0, 1.0, -1.0, -0.5;
  b << 0.0, 1.0;
  return ExactLinearModel(a, b, 0.2, 0.25);
}

SegmentProblem msd_problem(const TransitionModel& model, int horizon, bool saturate) {
  SegmentProblem p;
  p.model = &model;
  p.x = (Vec(2) << -0.7, 0.1).finished();
  p.error = ErrorState::zero(2);
  p.error.prop = -p.x;
  p.error.integ << 0.05, 0.0;
  p.x_ref.assign(horizon + 1, Vec::Zero(2));
  p.weights.q = Vec((Vec(2) << 1000.0, 1.0).finished()).asDiagonal();
  p.weights.q_t = 20.0 * p.weights.q;
  p.weights.r = Mat::Constant(1, 1, 0.01);
  p.weights.mu = 1.0;
  p.layout = GainLayout::position_diagonal(1, 2);
  p.bounds = Box(Vec::Zero(3), Vec::Constant(3, 5.0));
  p.input_box = Box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  p.saturate = saturate;
  p.msd = MsdParams{};
  return p;
}

/// Window cost rolled out with the PID building blocks.
double reference_window_cost(const SegmentProblem& p, const Vec& theta) {
  const Mat f = p.layout.assemble(theta);
  ErrorState e = p.error;
  Vec x = p.x;
  double cost = 0.0;
  for (int j = 0; j < p.horizon(); ++j) {
    const ControlOutput c = control_input(f, e, p.input_box, p.saturate);
    const WindupInfo w{f, c.saturation};
    const ErrorUpdate up = error_update(*p.model, p.x_ref[j], p.x_ref[j + 1], x, c.u, e, p.dt, p.n_quad,
                                        p.saturate && p.anti_windup ? &w : nullptr);
    x = up.predicted.col(p.n_quad);
    e = up.next;
    cost += 0.5 * p.dt * (e.prop.dot(p.weights.q * e.prop) + c.u.dot(p.weights.r * c.u));
  }
  return cost + 0.5 * e.prop.dot(p.weights.q_t * e.prop) + p.weights.mu * theta.squaredNorm();
}

}  // namespace

TEST_CASE("window cost equals the rolled-out PID recursion") {
  const ExactLinearModel model = exact_msd();
  for (bool saturate : {false, true}) {
    const SegmentProblem p = msd_problem(model, 5, saturate);
    for (const Vec& theta : {Vec((Vec(3) << 1.2, 1.0, 1.2).finished()), Vec((Vec(3) << 4.0, 0.3, 2.5).finished())}) {
      const WindowResult w = evaluate_window(p, theta, 1.0, false);
      CHECK(w.cost == doctest::Approx(reference_window_cost(p, theta)).epsilon(1e-12));
      CHECK(w.states.size() == 6u);
    }
  }
}

TEST_CASE("window gradient matches central differences") {
  const ExactLinearModel model = exact_msd();
  for (bool saturate : {false, true}) {
    const SegmentProblem p = msd_problem(model, 6, saturate);
    const Vec theta = (Vec(3) << 0.9, 0.4, 1.7).finished();
    const WindowResult w = evaluate_window(p, theta, 1.0, true);
    for (int i = 0; i < 3; ++i) {
      const double h = 1e-6;
      Vec tp = theta, tm = theta;
      tp[i] += h;
      tm[i] -= h;
      const double fd = (evaluate_window(p, tp, 1.0, false).cost - evaluate_window(p, tm, 1.0, false).cost) / (2 * h);
      CHECK(w.grad[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("barrier regularizer value and gradient") {
  const MsdParams msd;
  const Vec theta = (Vec(3) << 1.2, 1.0, 1.2).finished();
  const double rho = 0.5;
  const double expect = theta.squaredNorm() - std::log(2.74) / rho;
  CHECK(regularizer_value(theta, Regularizer::Barrier, rho, &msd) == doctest::Approx(expect));
  const Vec g = regularizer_gradient(theta, Regularizer::Barrier, rho, &msd);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    Vec tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    const double fd = (regularizer_value(tp, Regularizer::Barrier, rho, &msd) -
                       regularizer_value(tm, Regularizer::Barrier, rho, &msd)) / (2 * h);
    CHECK(g[i] == doctest::Approx(fd).epsilon(1e-7));
  }
  // g = (0 + 0.5)(0 + 1) - 1 * 2 < 0
  CHECK_THROWS_AS(regularizer_value((Vec(3) << 0.0, 2.0, 0.0).finished(), Regularizer::Barrier, rho, &msd),
                  DomainError);
  CHECK_THROWS_AS(regularizer_value(theta, Regularizer::Barrier, rho, nullptr), DomainError);
}

TEST_CASE("barrier weight is interpolated linearly then held") {
  const BarrierSchedule s{1e4, 1e-3, 101};
  CHECK(s.rho(0) == 1e4);
  CHECK(s.rho(100) == doctest::Approx(1e-3));
  CHECK(s.rho(50) == doctest::Approx(0.5 * (1e4 + 1e-3)));
  CHECK(s.rho(500) == doctest::Approx(1e-3));
}

TEST_CASE("stage cost") {
  CostWeights w;
  w.q = Mat::Identity(2, 2) * 2.0;
  w.q_t = w.q;
  w.r = Mat::Identity(1, 1);
  w.mu = 0.5;
  const double c = stage_cost((Vec(2) << 1.0, 1.0).finished(), Vec::Constant(1, 2.0), Vec::Constant(3, 1.0), w, 0.2,
                              Regularizer::Plain);
  CHECK(c == doctest::Approx(0.5 * (4.0 + 4.0) * 0.2 + 0.5 * 3.0));
}

TEST_CASE("projection clamps into the box") {
  const Box b(Vec::Zero(3), Vec::Constant(3, 5.0));
  CHECK(project((Vec(3) << -1.0, 2.0, 9.0).finished(), b) == (Vec(3) << 0.0, 2.0, 5.0).finished());
  CHECK_THROWS_AS(project(Vec::Zero(2), b), DomainError);
}

TEST_CASE("segment optimisation lowers the window cost and stays feasible") {
  const ExactLinearModel model = exact_msd();
  SegmentProblem p = msd_problem(model, 5, true);
  SegmentOptions opt;
  opt.max_iters = 150;
  const Vec theta0 = (Vec(3) << 1.2, 1.0, 1.2).finished();
  const SegmentResult r = optimize_segment(p, theta0, opt, true);
  CHECK(r.cost < evaluate_window(p, theta0, 1.0, false).cost);
  CHECK(p.bounds.contains(r.theta));
  CHECK(!r.trace.empty());

  p.regularizer = Regularizer::Barrier;
  opt.barrier = BarrierSchedule{1e4, 1e-3, 100};
  // infeasible start: replaced by the box centre
  const SegmentResult rb = optimize_segment(p, (Vec(3) << 0.0, 5.0, 0.0).finished(), opt, true);
  CHECK(routh_hurwitz(frozen_loop(MsdParams{}, rb.theta)) > 0.0);
  for (const auto& row : rb.trace) CHECK(row.g > 0.0);
  std::ostringstream os;
  write_trace_header(os, p.layout.labels());
  write_trace_csv(os, rb.trace, 0);
  CHECK(os.str().rfind("step,iter,cost,rho,g,Kp1,Ki1,Kd1\n", 0) == 0);
}
