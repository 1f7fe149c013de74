#include "pinnpid/transition.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace pinnpid {

Vec TransitionModel::step(const Vec& x, const Vec& u) const {
  Vec t(1);
  t[0] = dt();
  return predict(t, x, u, nullptr).col(0);
}

PinnModel::PinnModel(Network net, double dt) : net_(std::move(net)), dt_(dt) {
  if (!(dt > 0.0)) throw DomainError("model sampling interval must be positive");
  if (dt > horizon() + 1e-12) throw DomainError("model horizon is shorter than the sampling interval");
}

Mat PinnModel::predict(const Vec& times, const Vec& x, const Vec& u, ModelTape* tape) const {
  const Vec base = net_.pack(0.0, x, u);
  Mat raw = base.replicate(1, times.size());
  raw.row(0) = times.transpose();
  if (tape == nullptr) {
    ForwardPass pass;
    net_.forward_batch(raw, pass, false);
    return pass.output();
  }
  net_.forward_batch(raw, tape->pass, false);
  tape->times = times;
  return tape->pass.output();
}

InputPullback PinnModel::pullback(const ModelTape& tape, const Mat& cotangent) const {
  Mat in_cot;
  net_.backward_batch(tape.pass, cotangent, nullptr, nullptr, &in_cot);
  const Vec total = in_cot.rowwise().sum();
  const int n = state_dim(), m = input_dim();
  return {total.segment(1, n), total.segment(1 + n, m)};
}

Vec PinnModel::time_derivative(double t, const Vec& x, const Vec& u) const { return net_.time_derivative(t, x, u); }

ExactLinearModel::ExactLinearModel(Mat a, Mat b, double dt, double horizon)
    : a_(std::move(a)), b_(std::move(b)), dt_(dt), horizon_(horizon) {
  if (a_.rows() != a_.cols() || b_.rows() != a_.rows() || b_.cols() < 1)
    throw DomainError("linear model dimensions inconsistent");
  if (!(dt > 0.0) || horizon < dt) throw DomainError("linear model needs 0 < dt <= horizon");
}

void ExactLinearModel::blocks(double t, Mat& phi, Mat& gamma) const {
  const Eigen::Index n = a_.rows(), m = b_.cols();
  Mat aug = Mat::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = a_ * t;
  aug.topRightCorner(n, m) = b_ * t;
  const Mat e = aug.exp();
  phi = e.topLeftCorner(n, n);
  gamma = e.topRightCorner(n, m);
}

Mat ExactLinearModel::predict(const Vec& times, const Vec& x, const Vec& u, ModelTape* tape) const {
  if (x.size() != state_dim() || u.size() != input_dim()) throw DomainError("linear model input dimension mismatch");
  Mat out(state_dim(), times.size());
  Mat phi, gamma;
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    blocks(times[i], phi, gamma);
    out.col(i) = phi * x + gamma * u;
  }
  if (tape != nullptr) {
    tape->times = times;
    tape->x = x;
    tape->u = u;
  }
  return out;
}

InputPullback ExactLinearModel::pullback(const ModelTape& tape, const Mat& cotangent) const {
  InputPullback r{Vec::Zero(state_dim()), Vec::Zero(input_dim())};
  Mat phi, gamma;
  for (Eigen::Index i = 0; i < tape.times.size(); ++i) {
    blocks(tape.times[i], phi, gamma);
    r.dx += phi.transpose() * cotangent.col(i);
    r.du += gamma.transpose() * cotangent.col(i);
  }
  return r;
}

Vec ExactLinearModel::time_derivative(double t, const Vec& x, const Vec& u) const {
  Vec times(1);
  times[0] = t;
  const Vec xt = predict(times, x, u, nullptr).col(0);
  return a_ * xt + b_ * u;
}

}  // namespace pinnpid
