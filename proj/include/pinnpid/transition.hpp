#pragma once

/**
 * @file transition.hpp
 * @brief One-interval transition maps x(t) = phi(t, x_k, u_k) used by the
 * controller: the trained network and an exact linear stand-in.
 */

#include "pinnpid/common.hpp"
#include "pinnpid/diffnet.hpp"

#include <memory>

namespace pinnpid {

/// Values a transition model keeps from `predict` for a later pullback.
struct ModelTape {
  ForwardPass pass;
  Vec times;
  Vec x;
  Vec u;
};

class TransitionModel {
 public:
  virtual ~TransitionModel() = default;
  [[nodiscard]] virtual int state_dim() const = 0;
  [[nodiscard]] virtual int input_dim() const = 0;
  /// Sampling interval the model is built for.
  [[nodiscard]] virtual double dt() const = 0;
  /// Longest elapsed time the model is valid for (dt + epsilon).
  [[nodiscard]] virtual double horizon() const = 0;

  /// States at elapsed times `times` from (x, u); column i belongs to times[i].
  /// With a non-null tape the values needed by `pullback` are stored.
  [[nodiscard]] virtual Mat predict(const Vec& times, const Vec& x, const Vec& u, ModelTape* tape) const = 0;
  /// Pulls the cotangent of a `predict` result (n x len(times)) back to x and u.
  [[nodiscard]] virtual InputPullback pullback(const ModelTape& tape, const Mat& cotangent) const = 0;
  [[nodiscard]] virtual Vec time_derivative(double t, const Vec& x, const Vec& u) const = 0;

  /// State after one interval.
  [[nodiscard]] Vec step(const Vec& x, const Vec& u) const;
};

/// The trained surrogate phi-hat.
class PinnModel final : public TransitionModel {
 public:
  PinnModel(Network net, double dt);

  [[nodiscard]] int state_dim() const override { return net_.state_dim(); }
  [[nodiscard]] int input_dim() const override { return net_.control_dim(); }
  [[nodiscard]] double dt() const override { return dt_; }
  [[nodiscard]] double horizon() const override { return net_.scaling().upper[0]; }
  [[nodiscard]] Mat predict(const Vec& times, const Vec& x, const Vec& u, ModelTape* tape) const override;
  [[nodiscard]] InputPullback pullback(const ModelTape& tape, const Mat& cotangent) const override;
  [[nodiscard]] Vec time_derivative(double t, const Vec& x, const Vec& u) const override;

  [[nodiscard]] const Network& network() const { return net_; }

 private:
  Network net_;
  double dt_;
};

/// Exact transition of a linear system x' = A x + B u under a held input,
/// computed with the matrix exponential. Used as a model-error-free stand-in.
class ExactLinearModel final : public TransitionModel {
 public:
  ExactLinearModel(Mat a, Mat b, double dt, double horizon);

  [[nodiscard]] int state_dim() const override { return static_cast<int>(a_.rows()); }
  [[nodiscard]] int input_dim() const override { return static_cast<int>(b_.cols()); }
  [[nodiscard]] double dt() const override { return dt_; }
  [[nodiscard]] double horizon() const override { return horizon_; }
  [[nodiscard]] Mat predict(const Vec& times, const Vec& x, const Vec& u, ModelTape* tape) const override;
  [[nodiscard]] InputPullback pullback(const ModelTape& tape, const Mat& cotangent) const override;
  [[nodiscard]] Vec time_derivative(double t, const Vec& x, const Vec& u) const override;

 private:
  /// exp([[A, B], [0, 0]] t) split into the state block and the input block.
  void blocks(double t, Mat& phi, Mat& gamma) const;

  Mat a_;
  Mat b_;
  double dt_;
  double horizon_;
};

}  // namespace pinnpid
