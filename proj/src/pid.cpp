#include "pinnpid/pid.hpp"

namespace pinnpid {

ErrorState ErrorState::zero(int n) { return {Vec::Zero(n), Vec::Zero(n), Vec::Zero(n)}; }

Vec ErrorState::stacked() const {
  Vec e(3 * prop.size());
  e << prop, integ, deri;
  return e;
}

ErrorState ErrorState::unstack(const Vec& e) {
  if (e.size() % 3 != 0) throw DomainError("stacked error length must be a multiple of 3");
  const Eigen::Index n = e.size() / 3;
  return {e.segment(0, n), e.segment(n, n), e.segment(2 * n, n)};
}

GainLayout GainLayout::full(int m, int n) {
  if (m < 1 || n < 1) throw DomainError("gain layout needs m, n >= 1");
  GainLayout g;
  g.m_ = m;
  g.n_ = n;
  g.name_ = "full";
  for (int block = 0; block < 3; ++block)
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) g.entries_.emplace_back(r, block * n + c);
  return g;
}

GainLayout GainLayout::position_diagonal(int m, int n) {
  if (m < 1 || n < m) throw DomainError("position-diagonal layout needs 1 <= m <= n");
  GainLayout g;
  g.m_ = m;
  g.n_ = n;
  g.name_ = "position-diagonal";
  for (int block = 0; block < 3; ++block)
    for (int c = 0; c < m; ++c) g.entries_.emplace_back(c, block * n + c);
  return g;
}

GainLayout GainLayout::from_name(const std::string& name, int m, int n) {
  if (name == "full") return full(m, n);
  if (name == "position-diagonal") return position_diagonal(m, n);
  throw DomainError("unknown gain layout '" + name + "'");
}

std::vector<std::string> GainLayout::labels() const {
  static const char* kind[3] = {"Kp", "Ki", "Kd"};
  std::vector<std::string> out;
  for (const auto& [r, c] : entries_) {
    const int block = c / n_, col = c % n_;
    std::string s = kind[block];
    if (name_ == "position-diagonal")
      s += std::to_string(r + 1);
    else
      s += std::to_string(r + 1) + "_" + std::to_string(col + 1);
    out.push_back(s);
  }
  return out;
}

Mat GainLayout::assemble(const Vec& theta) const {
  if (theta.size() != size()) throw DomainError("gain vector length does not match the layout");
  Mat f = Mat::Zero(m_, 3 * n_);
  for (int i = 0; i < size(); ++i) f(entries_[i].first, entries_[i].second) = theta[i];
  return f;
}

Vec GainLayout::extract(const Mat& f) const {
  if (f.rows() != m_ || f.cols() != 3 * n_) throw DomainError("gain matrix shape does not match the layout");
  Vec theta(size());
  for (int i = 0; i < size(); ++i) theta[i] = f(entries_[i].first, entries_[i].second);
  return theta;
}

ControlOutput control_input(const Mat& f, const ErrorState& e, const Box& input_box, bool saturate) {
  const Vec stacked = e.stacked();
  if (f.cols() != stacked.size() || f.rows() != input_box.dim()) throw DomainError("control_input dimension mismatch");
  ControlOutput out;
  out.raw = f * stacked;
  out.u = out.raw;
  out.saturation = Vec::Zero(out.raw.size());
  if (saturate) {
    for (Eigen::Index c = 0; c < out.raw.size(); ++c) {
      if (out.raw[c] > input_box.upper[c]) {
        out.u[c] = input_box.upper[c];
        out.saturation[c] = 1.0;
      } else if (out.raw[c] < input_box.lower[c]) {
        out.u[c] = input_box.lower[c];
        out.saturation[c] = -1.0;
      }
    }
  }
  return out;
}

ErrorState error_init(const TransitionModel& model, const Vec& x0, const Vec& x_ref0, const Vec& x_ref_init,
                      const Vec& u_prev, double dt) {
  if (!(dt > 0.0)) throw DomainError("error_init: dt must be positive");
  ErrorState e;
  e.prop = x_ref0 - x0;
  e.integ = Vec::Zero(x0.size());
  e.deri = (x_ref0 - x_ref_init) / dt - model.time_derivative(0.0, x0, u_prev);
  return e;
}

Quadrature trapezoid(double dt, int n_quad) {
  if (n_quad < 1) throw DomainError("quadrature needs at least one panel");
  Quadrature q;
  q.nodes = Vec::LinSpaced(n_quad + 1, 0.0, dt);
  q.nodes[n_quad] = dt;
  const double h = dt / n_quad;
  q.weights = Vec::Constant(n_quad + 1, h);
  q.weights[0] = q.weights[n_quad] = 0.5 * h;
  return q;
}

Vec integral_increment(const Vec& x_ref, const Mat& predicted, const Quadrature& q) {
  return x_ref * q.weights.sum() - predicted * q.weights;
}

Eigen::VectorXi windup_mask(const Mat& f, const Vec& saturation, const Vec& increment) {
  const Eigen::Index n = increment.size();
  Eigen::VectorXi frozen = Eigen::VectorXi::Zero(n);
  for (Eigen::Index c = 0; c < saturation.size(); ++c) {
    if (saturation[c] == 0.0) continue;
    for (Eigen::Index i = 0; i < n; ++i)
      if (f(c, n + i) * increment[i] * saturation[c] > 0.0) frozen[i] = 1;
  }
  return frozen;
}

ErrorUpdate error_update(const TransitionModel& model, const Vec& x_ref_k, const Vec& x_ref_k1, const Vec& x_k,
                         const Vec& u_k, const ErrorState& e_k, double dt, int n_quad, const WindupInfo* windup) {
  if (n_quad < 2) throw DomainError("error_update: n_quad must be >= 2");
  const Quadrature q = trapezoid(dt, n_quad);
  ErrorUpdate r;
  r.predicted = model.predict(q.nodes, x_k, u_k, nullptr);
  const Vec inc = integral_increment(x_ref_k, r.predicted, q);
  r.next.prop = x_ref_k1 - r.predicted.col(n_quad);
  r.next.integ = e_k.integ + inc;
  if (windup != nullptr) {
    const Eigen::VectorXi frozen = windup_mask(windup->f, windup->saturation, inc);
    for (Eigen::Index i = 0; i < frozen.size(); ++i)
      if (frozen[i]) r.next.integ[i] = e_k.integ[i];
  }
  r.next.deri = (r.next.prop - e_k.prop) / dt;
  return r;
}

}  // namespace pinnpid
