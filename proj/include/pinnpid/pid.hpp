#pragma once

/**
 * @file pid.hpp
 * @brief Time-varying PID law u = F E and the error-state recursion driven
 * by the transition surrogate.
 */

#include "pinnpid/common.hpp"
#include "pinnpid/transition.hpp"

#include <string>
#include <utility>
#include <vector>

namespace pinnpid {

/// Stacked PID error E = (e_prop, e_int, e_deri), each of state size n.
struct ErrorState {
  Vec prop;
  Vec integ;
  Vec deri;

  static ErrorState zero(int n);
  [[nodiscard]] int dim() const { return static_cast<int>(prop.size()); }
  [[nodiscard]] Vec stacked() const;
  static ErrorState unstack(const Vec& e);
};

/// Which entries of the m x 3n gain matrix F = [Kp, Ki, Kd] are free.
/// The optimiser works on the vector of free entries.
class GainLayout {
 public:
  GainLayout() = default;

  /// Every entry free, row-major within Kp, then Ki, then Kd.
  static GainLayout full(int m, int n);
  /// Kp, Ki, Kd diagonal on the first m (position) coordinates, ordered
  /// [Kp_1..Kp_m, Ki_1..Ki_m, Kd_1..Kd_m]. Needs m <= n.
  static GainLayout position_diagonal(int m, int n);
  static GainLayout from_name(const std::string& name, int m, int n);

  [[nodiscard]] int rows() const { return m_; }
  [[nodiscard]] int state_dim() const { return n_; }
  [[nodiscard]] int size() const { return static_cast<int>(entries_.size()); }
  [[nodiscard]] const std::string& name() const { return name_; }
  /// (row, column) of free entry i inside F.
  [[nodiscard]] std::pair<int, int> entry(int i) const { return entries_[i]; }
  /// Column names such as "Kp1", "Ki1_2".
  [[nodiscard]] std::vector<std::string> labels() const;

  [[nodiscard]] Mat assemble(const Vec& theta) const;
  [[nodiscard]] Vec extract(const Mat& f) const;

 private:
  int m_ = 0;
  int n_ = 0;
  std::string name_;
  std::vector<std::pair<int, int>> entries_;
};

struct ControlOutput {
  Vec raw;         ///< F E before saturation
  Vec u;           ///< applied input
  Vec saturation;  ///< +1 above the upper bound, -1 below the lower bound, 0 inside
};

/// u = F E, clipped into `input_box` when `saturate` is set.
ControlOutput control_input(const Mat& f, const ErrorState& e, const Box& input_box, bool saturate = true);

/// E_0 with e_prop = x_ref_0 - x0, e_int = 0 and
/// e_deri = (x_ref_0 - x_ref_init) / dt - d phi-hat/dt (0, x0, u_prev).
ErrorState error_init(const TransitionModel& model, const Vec& x0, const Vec& x_ref0, const Vec& x_ref_init,
                      const Vec& u_prev, double dt);

/// Composite trapezoid nodes on [0, dt] with n_quad panels.
struct Quadrature {
  Vec nodes;
  Vec weights;
};
Quadrature trapezoid(double dt, int n_quad);

/// Integral increment  sum_i w_i (x_ref - x(tau_i)) over the predicted
/// trajectory columns.
Vec integral_increment(const Vec& x_ref, const Mat& predicted, const Quadrature& q);

/// Coordinates of e_int to leave unchanged: a coordinate is frozen when a
/// saturated channel's integral gain would push that channel further into
/// saturation with this increment.
Eigen::VectorXi windup_mask(const Mat& f, const Vec& saturation, const Vec& increment);

/// Gain matrix and saturation pattern of the step, for anti-windup.
struct WindupInfo {
  Mat f;
  Vec saturation;
};

struct ErrorUpdate {
  ErrorState next;
  Mat predicted;  ///< phi-hat at the quadrature nodes (last column = end of interval)
};

/// One step of the model-driven recursion:
///   e_prop' = x_ref_{k+1} - phi-hat(dt, x_k, u_k)
///   e_int'  = e_int + int_0^dt (x_ref_k - phi-hat(tau, x_k, u_k)) dtau
///   e_deri' = (e_prop' - e_prop) / dt
/// With `windup` set, integral coordinates selected by windup_mask keep
/// their value.
ErrorUpdate error_update(const TransitionModel& model, const Vec& x_ref_k, const Vec& x_ref_k1, const Vec& x_k,
                         const Vec& u_k, const ErrorState& e_k, double dt, int n_quad,
                         const WindupInfo* windup = nullptr);

}  // namespace pinnpid
