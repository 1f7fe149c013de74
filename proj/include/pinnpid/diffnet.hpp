#pragma once

/**
 * @file diffnet.hpp
 * @brief Dense tanh network with hand-written forward and reverse mode.
 *
 * The network maps a raw input (t, x, u) to a state-sized output. Inputs are
 * affinely mapped to [-1, 1] by an InputScaling before the first layer, hidden
 * layers use tanh and the output layer is affine.
 *
 * Two derivative paths are provided:
 *   - a forward-mode tangent along the time coordinate (d output / dt), and
 *   - a reverse pass that pulls output cotangents (and, optionally, cotangents
 *     of the time tangent) back to the parameters and raw inputs.
 * Everything is batched column-wise so training and gain optimisation run as
 * dense matrix products.
 */

#include "pinnpid/common.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pinnpid {

struct NetworkSpec {
  /// Layer widths including input and output, e.g. {4, 32, 32, 32, 2}.
  std::vector<int> widths;

  [[nodiscard]] int input_dim() const { return widths.front(); }
  [[nodiscard]] int output_dim() const { return widths.back(); }
  /// Number of affine layers.
  [[nodiscard]] int layer_count() const { return static_cast<int>(widths.size()) - 1; }
  /// Sum over layers of w_l * w_{l+1} + w_{l+1}.
  [[nodiscard]] Eigen::Index parameter_count() const;
  /// Offset of layer l's weight block inside the flat parameter vector.
  [[nodiscard]] Eigen::Index layer_offset(int layer) const;

  /// At least one hidden layer, all widths >= 1.
  void validate() const;

  bool operator==(const NetworkSpec&) const = default;
};

/// Affine map of raw input coordinates onto [-1, 1].
struct InputScaling {
  Vec lower;
  Vec upper;

  /// Bounds for (t, x, u) with t in [0, horizon].
  static InputScaling for_domain(double horizon, const Box& state, const Box& input);

  [[nodiscard]] Vec slope() const { return 2.0 * (upper - lower).cwiseInverse(); }
  [[nodiscard]] Vec offset() const { return -(upper + lower).cwiseQuotient(upper - lower); }
  void validate(int dim) const;
};

/// Intermediate values of a batched forward pass, kept for the reverse pass.
struct ForwardPass {
  std::vector<Mat> act;       ///< act[0] scaled input, act[l] tanh output, act[L] network output
  std::vector<Mat> pre_rate;  ///< W_l * rate_{l-1}; pre_rate[L] is the output time derivative
  std::vector<Mat> rate;      ///< d act[l] / dt for hidden layers
  bool has_rate = false;

  [[nodiscard]] const Mat& output() const { return act.back(); }
  [[nodiscard]] const Mat& output_rate() const { return pre_rate.back(); }
  [[nodiscard]] Eigen::Index batch() const { return act.front().cols(); }
};

/// Cotangent pullbacks to the state and input arguments.
struct InputPullback {
  Vec dx;
  Vec du;
};

struct Sample {
  double t = 0.0;
  Vec x;
  Vec u;
};

class Network {
 public:
  Network() = default;
  Network(NetworkSpec spec, Vec params, InputScaling scaling);

  /// Glorot-uniform weights, zero biases.
  static Network glorot(NetworkSpec spec, InputScaling scaling, std::uint64_t seed);

  [[nodiscard]] const NetworkSpec& spec() const { return spec_; }
  [[nodiscard]] const Vec& params() const { return params_; }
  [[nodiscard]] const InputScaling& scaling() const { return scaling_; }
  [[nodiscard]] int state_dim() const { return spec_.output_dim(); }
  [[nodiscard]] int control_dim() const { return spec_.input_dim() - 1 - spec_.output_dim(); }

  /// Replaces the parameter vector; length and finiteness are checked.
  void set_params(const Vec& params);

  // -- single-sample operations -------------------------------------------

  [[nodiscard]] Vec forward(double t, const Vec& x, const Vec& u) const;
  [[nodiscard]] Vec time_derivative(double t, const Vec& x, const Vec& u) const;
  /// Sum over samples of (d out / d params)^T * cotangent_i. Cotangents are columns.
  [[nodiscard]] Vec grad_params(const std::vector<Sample>& batch, const Mat& cotangents) const;
  [[nodiscard]] InputPullback grad_inputs(double t, const Vec& x, const Vec& u, const Vec& cotangent) const;

  // -- batched machinery --------------------------------------------------

  /// Packs a sample into a raw input column (t, x, u), checking dimensions.
  [[nodiscard]] Vec pack(double t, const Vec& x, const Vec& u) const;

  /// Evaluates columns of raw inputs. With `with_rate` the time tangent is
  /// propagated alongside.
  void forward_batch(const Mat& raw_inputs, ForwardPass& pass, bool with_rate) const;

  /// Reverse pass. `out_cot` is the cotangent of the outputs; `rate_cot`
  /// (may be null) is the cotangent of the output time derivative and needs a
  /// pass computed with rates. Parameter gradients are accumulated into
  /// `param_grad` when non-null; raw-input cotangents are written to
  /// `input_cot` when non-null.
  void backward_batch(const ForwardPass& pass, const Mat& out_cot, const Mat* rate_cot, Vec* param_grad,
                      Mat* input_cot) const;

 private:
  void check_inputs(const Mat& raw_inputs) const;

  NetworkSpec spec_;
  Vec params_;
  InputScaling scaling_;
  Vec slope_;
  Vec offset_;
};

/// tanh computed on |z| and sign-restored so that tanh(-z) == -tanh(z) exactly.
void tanh_inplace(Mat& z);

// -- serialisation ("PINNMODEL 1" text format) -------------------------------

void write_network(std::ostream& os, const Network& net);
Network read_network(std::istream& is);
void save_network(const std::string& path, const Network& net);
Network load_network(const std::string& path);

}  // namespace pinnpid
