#include "pinnpid/gainopt.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace pinnpid {

namespace {

bool symmetric_psd(const Mat& a, bool strict) {
  if (a.rows() != a.cols()) return false;
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) return false;
  const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(a, Eigen::EigenvaluesOnly).eigenvalues();
  return strict ? ev.minCoeff() > 0.0 : ev.minCoeff() >= -1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
}

}  // namespace

void CostWeights::validate(int n, int m) const {
  if (q.rows() != n || q_t.rows() != n || r.rows() != m) throw DomainError("cost weight dimensions do not match plant");
  if (!symmetric_psd(q, false)) throw DomainError("Q must be symmetric positive semidefinite");
  if (!symmetric_psd(q_t, false)) throw DomainError("Q_T must be symmetric positive semidefinite");
  if (!symmetric_psd(r, true)) throw DomainError("R must be symmetric positive definite");
  if (!(mu > 0.0)) throw DomainError("mu must be positive");
}

Regularizer regularizer_from_name(const std::string& name) {
  if (name == "plain") return Regularizer::Plain;
  if (name == "barrier") return Regularizer::Barrier;
  throw DomainError("unknown regularizer '" + name + "' (expected plain or barrier)");
}

std::string regularizer_name(Regularizer r) { return r == Regularizer::Plain ? "plain" : "barrier"; }

double BarrierSchedule::rho(int iter) const {
  if (iterations <= 1) return rho_end;
  const double s = std::min(1.0, static_cast<double>(iter) / (iterations - 1));
  return rho_start + (rho_end - rho_start) * s;
}

void BarrierSchedule::validate() const {
  if (!(rho_start > 0.0 && rho_end > 0.0)) throw DomainError("barrier rho must stay positive");
  if (iterations < 1) throw DomainError("barrier schedule needs at least one iteration");
}

FrozenLoop frozen_loop(const MsdParams& plant, const Vec& theta) {
  if (theta.size() != 3) throw DomainError("MSD frozen loop needs gains (Kp, Ki, Kd)");
  return {plant, theta[0], theta[1], theta[2]};
}

double regularizer_value(const Vec& theta, Regularizer kind, double rho, const MsdParams* msd) {
  double v = theta.squaredNorm();
  if (kind == Regularizer::Barrier) {
    if (msd == nullptr) throw DomainError("barrier regularizer needs the MSD parameters");
    const double g = routh_hurwitz(frozen_loop(*msd, theta));
    if (!(g > 0.0)) throw DomainError("infeasible gains for the barrier: g(F) <= 0");
    v -= std::log(g) / rho;
  }
  return v;
}

Vec regularizer_gradient(const Vec& theta, Regularizer kind, double rho, const MsdParams* msd) {
  Vec grad = 2.0 * theta;
  if (kind == Regularizer::Barrier) {
    if (msd == nullptr) throw DomainError("barrier regularizer needs the MSD parameters");
    const FrozenLoop loop = frozen_loop(*msd, theta);
    const double g = routh_hurwitz(loop);
    if (!(g > 0.0)) throw DomainError("infeasible gains for the barrier: g(F) <= 0");
    grad -= routh_hurwitz_gradient(loop) / (rho * g);
  }
  return grad;
}

double stage_cost(const Vec& e, const Vec& u, const Vec& theta, const CostWeights& w, double dt, Regularizer kind,
                  double rho, const MsdParams* msd) {
  return 0.5 * (e.dot(w.q * e) + u.dot(w.r * u)) * dt + w.mu * regularizer_value(theta, kind, rho, msd);
}

Vec project(const Vec& theta, const Box& bounds) {
  if (theta.size() != bounds.dim()) throw DomainError("gain vector and bounds differ in size");
  return bounds.clamp(theta);
}

void SegmentProblem::validate() const {
  if (model == nullptr) throw DomainError("segment problem has no model");
  const int n = model->state_dim(), m = model->input_dim();
  if (horizon() < 1) throw DomainError("optimisation horizon must be >= 1");
  if (x.size() != n || error.dim() != n) throw DomainError("segment state/error dimension mismatch");
  for (const auto& r : x_ref)
    if (r.size() != n) throw DomainError("reference dimension mismatch");
  if (!x.allFinite()) throw DomainError("segment start state is not finite");
  if (layout.rows() != m || layout.state_dim() != n) throw DomainError("gain layout does not match the model");
  if (bounds.dim() != layout.size()) throw DomainError("gain bounds do not match the layout");
  bounds.validate("gain bounds", false);
  if (input_box.dim() != m) throw DomainError("input box dimension mismatch");
  if (dt > model->horizon() + 1e-12) throw DomainError("model horizon is shorter than the sampling interval");
  if (n_quad < 2) throw DomainError("n_quad must be >= 2");
  if (regularizer == Regularizer::Barrier && (!msd || layout.size() != 3 || m != 1))
    throw DomainError("the barrier regularizer is only defined for the single-input MSD gain triple");
}

namespace {

struct StepTape {
  Vec e_stacked;
  Vec u;
  Vec pass;  // 1 where the input is not saturated
  Vec keep;  // 1 where the integral is updated
  ModelTape model;
  Vec p_next;
};

}  // namespace

WindowResult evaluate_window(const SegmentProblem& p, const Vec& theta, double rho, bool with_grad) {
  const int H = p.horizon();
  const int n = p.model->state_dim();
  const double dt = p.dt;
  const Quadrature q = trapezoid(dt, p.n_quad);
  const Mat f = p.layout.assemble(theta);
  const double wsum = q.weights.sum();
  const MsdParams* msd = p.msd ? &*p.msd : nullptr;

  WindowResult res;
  res.states.push_back(p.x);
  std::vector<StepTape> tape(H);
  ErrorState e = p.error;
  Vec x = p.x;
  double cost = 0.0;
  for (int j = 0; j < H; ++j) {
    StepTape& st = tape[j];
    st.e_stacked = e.stacked();
    const ControlOutput co = control_input(f, e, p.input_box, p.saturate);
    st.u = co.u;
    st.pass = (co.saturation.array() == 0.0).cast<double>().matrix();
    const Mat y = p.model->predict(q.nodes, x, co.u, with_grad ? &st.model : nullptr);
    const Vec inc = p.x_ref[j] * wsum - y * q.weights;
    st.keep = Vec::Ones(n);
    if (p.anti_windup && p.saturate) {
      const Eigen::VectorXi frozen = windup_mask(f, co.saturation, inc);
      for (int i = 0; i < n; ++i)
        if (frozen[i]) st.keep[i] = 0.0;
    }
    x = y.col(p.n_quad);
    ErrorState next;
    next.prop = p.x_ref[j + 1] - x;
    next.integ = e.integ + st.keep.cwiseProduct(inc);
    next.deri = (next.prop - e.prop) / dt;
    cost += 0.5 * dt * (next.prop.dot(p.weights.q * next.prop) + co.u.dot(p.weights.r * co.u));
    st.p_next = next.prop;
    if (j == 0) res.u0 = co.u;
    e = std::move(next);
    res.states.push_back(x);
  }
  cost += 0.5 * e.prop.dot(p.weights.q_t * e.prop);
  cost += p.weights.mu * regularizer_value(theta, p.regularizer, rho, msd);
  res.cost = cost;
  if (!with_grad) return res;

  const Mat qs = 0.5 * (p.weights.q + p.weights.q.transpose());
  const Mat qts = 0.5 * (p.weights.q_t + p.weights.q_t.transpose());
  const Mat rs = 0.5 * (p.weights.r + p.weights.r.transpose());
  Vec pb = qts * e.prop;
  Vec ib = Vec::Zero(n), db = Vec::Zero(n), xb = Vec::Zero(n);
  Mat fb = Mat::Zero(f.rows(), f.cols());
  for (int j = H - 1; j >= 0; --j) {
    const StepTape& st = tape[j];
    pb += dt * (qs * st.p_next) + db / dt;
    const Vec pb_prev = -db / dt;
    const Vec incb = st.keep.cwiseProduct(ib);
    Mat yb = -incb * q.weights.transpose();
    yb.col(p.n_quad) += xb - pb;
    const InputPullback pull = p.model->pullback(st.model, yb);
    const Vec ub = pull.du + dt * (rs * st.u);
    const Vec rawb = st.pass.cwiseProduct(ub);
    fb.noalias() += rawb * st.e_stacked.transpose();
    const Vec eb = f.transpose() * rawb;
    pb = pb_prev + eb.segment(0, n);
    ib += eb.segment(n, n);
    db = eb.segment(2 * n, n);
    xb = pull.dx;
  }
  res.grad = p.layout.extract(fb) + p.weights.mu * regularizer_gradient(theta, p.regularizer, rho, msd);
  return res;
}

namespace {

double g_value(const SegmentProblem& p, const Vec& theta) { return routh_hurwitz(frozen_loop(*p.msd, theta)); }

}  // namespace

SegmentResult optimize_segment(const SegmentProblem& p, const Vec& theta0, const SegmentOptions& options,
                               bool keep_trace) {
  p.validate();
  const bool barrier = p.regularizer == Regularizer::Barrier;
  if (barrier) options.barrier.validate();
  if (options.max_iters < 0) throw DomainError("max_iters must be nonnegative");

  Vec theta = project(theta0, p.bounds);
  if (barrier && !(g_value(p, theta) > 0.0)) {
    theta = p.bounds.center();
    if (!(g_value(p, theta) > 0.0)) throw DomainError("barrier: gain box centre violates g(F) > 0");
  }
  // the barrier cost is only comparable between iterates sharing rho
  const int final_rho_iter = barrier ? std::max(0, std::min(options.barrier.iterations, options.max_iters) - 1) : 0;
  auto rho_at = [&](int it) { return barrier ? options.barrier.rho(it) : 1.0; };

  SegmentResult out;
  out.theta = theta;
  out.cost = std::numeric_limits<double>::infinity();
  AdamState state;
  state.reset(theta.size());
  AdamConfig adam = options.adam;
  Vec prev = theta;
  int it = 0;
  for (; it < options.max_iters; ++it) {
    const double rho = rho_at(it);
    const WindowResult w = evaluate_window(p, theta, rho, true);
    if (!std::isfinite(w.cost) || !w.grad.allFinite()) {
      if (it == 0 || out.restarts > 0) throw DomainError("gain optimisation: non-finite cost");
      ++out.restarts;
      adam.lr *= 0.5;
      theta = prev;
      continue;
    }
    if (keep_trace) out.trace.push_back({it, w.cost, rho, barrier ? g_value(p, theta) : 0.0, theta});
    if (it >= final_rho_iter && w.cost < out.cost) {
      out.cost = w.cost;
      out.theta = theta;
    }
    prev = theta;
    adam_step(state, w.grad, theta, adam);
    theta = project(theta, p.bounds);
    if (barrier) {
      for (int k = 0; k < 60 && !(g_value(p, theta) > 0.0); ++k) theta = prev + 0.5 * (theta - prev);
      if (!(g_value(p, theta) > 0.0)) theta = prev;
    }
    if ((theta - prev).lpNorm<Eigen::Infinity>() < options.tol && it >= final_rho_iter) {
      out.converged = true;
      ++it;
      break;
    }
  }
  out.iterations = it;
  // the last update has not been scored yet
  const double rho_final = rho_at(std::max(0, it - 1));
  const WindowResult last = evaluate_window(p, theta, rho_final, false);
  if (std::isfinite(last.cost) && (last.cost < out.cost || !std::isfinite(out.cost))) {
    out.cost = last.cost;
    out.theta = theta;
  }
  if (keep_trace) out.trace.push_back({it, last.cost, rho_final, barrier ? g_value(p, theta) : 0.0, theta});
  return out;
}

void write_trace_header(std::ostream& os, const std::vector<std::string>& labels) {
  os << "step,iter,cost,rho,g";
  for (const auto& l : labels) os << ',' << l;
  os << '\n';
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace, int step) {
  os << std::setprecision(12);
  for (const auto& r : trace) {
    os << step << ',' << r.iter << ',' << r.cost << ',' << r.rho << ',' << r.g;
    for (Eigen::Index i = 0; i < r.theta.size(); ++i) os << ',' << r.theta[i];
    os << '\n';
  }
}

}  // namespace pinnpid
