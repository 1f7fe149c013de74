#pragma once

/**
 * @file gainopt.hpp
 * @brief Per-step optimisation of the PID gains over the surrogate: windowed
 * quadratic cost, reverse-mode gradient through the self-loop prediction,
 * Adam with projection onto the gain box, optional log barrier on the
 * Routh-Hurwitz value.
 */

#include "pinnpid/adam.hpp"
#include "pinnpid/analysis.hpp"
#include "pinnpid/pid.hpp"
#include "pinnpid/transition.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pinnpid {

struct CostWeights {
  Mat q;    ///< n x n, positive semidefinite
  Mat q_t;  ///< n x n terminal weight, positive semidefinite
  Mat r;    ///< m x m, positive definite
  double mu = 1.0;

  void validate(int n, int m) const;
};

enum class Regularizer { Plain, Barrier };

Regularizer regularizer_from_name(const std::string& name);
std::string regularizer_name(Regularizer r);

/// rho interpolated linearly from rho_start to rho_end over `iterations`
/// optimiser iterations, then held at rho_end.
struct BarrierSchedule {
  double rho_start = 1e4;
  double rho_end = 1e-3;
  int iterations = 100;

  [[nodiscard]] double rho(int iter) const;
  void validate() const;
};

/// (Kp, Ki, Kd) of a single-input position-diagonal gain vector on the MSD.
FrozenLoop frozen_loop(const MsdParams& plant, const Vec& theta);

/// Theta(F) = ||F||^2 (plain) or ||F||^2 - log(g(F)) / rho (barrier).
/// Throws DomainError when the barrier is requested and g <= 0.
double regularizer_value(const Vec& theta, Regularizer kind, double rho, const MsdParams* msd);
Vec regularizer_gradient(const Vec& theta, Regularizer kind, double rho, const MsdParams* msd);

/// J = 1/2 (e'Qe + u'Ru) dt + mu Theta(F).
double stage_cost(const Vec& e, const Vec& u, const Vec& theta, const CostWeights& w, double dt, Regularizer kind,
                  double rho = 1.0, const MsdParams* msd = nullptr);

/// Box clamp of the gain vector.
Vec project(const Vec& theta, const Box& bounds);

/// Everything fixed during one segment optimisation.
struct SegmentProblem {
  const TransitionModel* model = nullptr;
  Vec x;                    ///< current (measured) state
  ErrorState error;         ///< current error state E_k
  std::vector<Vec> x_ref;   ///< references at steps k .. k + H (H + 1 entries)
  CostWeights weights;
  GainLayout layout;
  Box bounds;               ///< feasible gain box
  Box input_box;
  bool saturate = true;
  bool anti_windup = true;
  double dt = 0.2;
  int n_quad = 10;
  Regularizer regularizer = Regularizer::Plain;
  std::optional<MsdParams> msd;  ///< required by the barrier

  [[nodiscard]] int horizon() const { return static_cast<int>(x_ref.size()) - 1; }
  void validate() const;
};

struct WindowResult {
  double cost = 0.0;  ///< tracking cost over the window plus mu Theta
  Vec grad;           ///< d cost / d theta (when requested)
  Vec u0;             ///< first applied input of the window
  std::vector<Vec> states;  ///< predicted states x_k .. x_{k+H}
};

/// Rolls the PID law and the surrogate H steps forward with gains held at
/// theta and accumulates
///   sum_j 1/2 (e_{j+1}' Q e_{j+1} + u_j' R u_j) dt + 1/2 e_H' Q_T e_H + mu Theta.
WindowResult evaluate_window(const SegmentProblem& p, const Vec& theta, double rho, bool with_grad);

struct SegmentOptions {
  AdamConfig adam;  ///< defaults lr 1e-2, betas 0.9 / 0.999, eps 1e-7
  int max_iters = 200;
  double tol = 1e-6;  ///< stop when the max-norm gain change falls below this
  BarrierSchedule barrier;
};

struct TraceRow {
  int iter = 0;
  double cost = 0.0;
  double rho = 0.0;
  double g = 0.0;
  Vec theta;
};

struct SegmentResult {
  Vec theta;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  int restarts = 0;  ///< step-size halvings after a non-finite cost
  std::vector<TraceRow> trace;
};

/// Adam on the window cost from theta0 with projection after each step.
/// Barrier runs keep every iterate strictly inside g > 0 by backtracking;
/// an infeasible start is replaced by the box centre. Returns the best-cost
/// iterate (for the barrier, among iterates taken at the final rho).
SegmentResult optimize_segment(const SegmentProblem& p, const Vec& theta0, const SegmentOptions& options,
                               bool keep_trace = false);

/// Per-iteration optimisation trace: `step,iter,cost,rho,g,<gain labels>`.
void write_trace_header(std::ostream& os, const std::vector<std::string>& labels);
void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace, int step);

}  // namespace pinnpid
