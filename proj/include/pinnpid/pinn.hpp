#pragma once

/**
 * @file pinn.hpp
 * @brief Composite data + physics loss, training loop and rollout validation
 * of the transition surrogate.
 */

#include "pinnpid/adam.hpp"
#include "pinnpid/datagen.hpp"
#include "pinnpid/diffnet.hpp"
#include "pinnpid/dynamics.hpp"
#include "pinnpid/transition.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace pinnpid {

struct LossReport {
  double data = 0.0;
  double phys = 0.0;
  double total = 0.0;
};

/// Datasets laid out as network input columns.
struct PackedData {
  Mat inputs;   ///< (1+n+m) x N rows (t, x0, u)
  Mat targets;  ///< n x N
};

struct PackedPhys {
  Mat inputs;  ///< (1+n+m) x N rows (t, x, u)
};

PackedData pack_data(const std::vector<DataSample>& data);
PackedPhys pack_phys(const std::vector<PhysSample>& phys);

/// d phi-hat / dt - f(phi-hat, u) at one collocation point.
Vec physics_residual(const Network& net, const Plant& plant, const PhysSample& sample);

LossReport loss(const Network& net, const Plant& plant, const std::vector<DataSample>& data,
                const std::vector<PhysSample>& phys, double lambda);

/// Loss over packed sets; when `grad` is non-null it receives dL/d(params).
LossReport loss_and_grad(const Network& net, const Plant& plant, const PackedData& data, const PackedPhys& phys,
                         double lambda, Vec* grad);

// -- validation -------------------------------------------------------------------

/// Held-out RK4 trajectories under piecewise-constant inputs.
struct ValidationSet {
  double dt = 0.2;
  std::vector<std::vector<Vec>> inputs;  ///< inputs[r][k], held over [k dt, (k+1) dt)
  std::vector<std::vector<Vec>> states;  ///< states[r][k] at t = k dt, length inputs + 1
};

struct ValidationConfig {
  int trajectories = 16;
  double duration = 4.0;
  int substeps = 20;
  /// Initial states are drawn from the state box shrunk about its centre by this factor.
  double initial_fraction = 0.5;
  /// Redraw trajectories that leave the state box. Open-loop unstable plants
  /// (the upright arm) rarely stay inside for long and need this off.
  bool require_inside = true;
  std::uint64_t seed = 99;
};

/// With `require_inside`, trajectories that leave the state box are redrawn,
/// so that the set probes the region the model was trained on.
ValidationSet make_validation_set(const Plant& plant, const SamplingDomain& domain, const ValidationConfig& config);

/// RK4 ground truth for explicit initial states and input sequences.
ValidationSet rollout_truth(const Plant& plant, const std::vector<Vec>& x0, const std::vector<std::vector<Vec>>& inputs,
                            double dt, int substeps);

struct ValidationReport {
  Vec step_mae;     ///< one interval from the true state, per coordinate
  Vec step_mse;
  Vec rollout_mae;  ///< recurrent self-loop prediction over the whole horizon
  Vec rollout_mse;
};

ValidationReport validate(const TransitionModel& model, const ValidationSet& set);
/// Mean single-step squared error, the checkpointing score.
double single_step_mse(const TransitionModel& model, const ValidationSet& set);

// -- training ----------------------------------------------------------------------

struct TrainConfig {
  double lambda = 1.0;
  std::string optimizer = "adam";  ///< adam | lbfgs | adam-then-lbfgs
  int iterations = 20000;          ///< Adam iterations (L-BFGS iterations when optimizer is lbfgs)
  int lbfgs_iterations = 0;        ///< refinement iterations after Adam for adam-then-lbfgs
  int lbfgs_memory = 10;
  int regen_interval = 0;          ///< regenerate both datasets every this many iterations; 0 = never
  int validation_interval = 100;
  double lr_start = 1e-3;          ///< cosine decay from lr_start to lr_end over the Adam iterations
  double lr_end = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_data = 0;              ///< minibatch sizes; 0 = full batch
  int batch_phys = 0;
  std::uint64_t seed = 1;          ///< minibatch order
  std::string snapshot_path;       ///< where to dump parameters if the loss turns non-finite

  void validate() const;
};

struct HistoryRow {
  int iter = 0;
  LossReport loss;
  double val_mse = std::numeric_limits<double>::quiet_NaN();
  double val_mae = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  Network net;
  std::vector<HistoryRow> history;
  int best_iter = 0;
  double best_val_mse = std::numeric_limits<double>::quiet_NaN();
};

double cosine_lr(int iter, int total, double start, double end);

/// Minimises the composite loss starting from `init`. Datasets come from
/// `data_config` (round r > 0 of regeneration uses a derived seed). With a
/// validation set the parameters with the best single-step MSE are returned.
TrainResult train(const Network& init, const Plant& plant, const DatasetConfig& data_config, const TrainConfig& config,
                  const ValidationSet* validation, std::ostream* progress = nullptr);

void write_history_csv(std::ostream& os, const std::vector<HistoryRow>& history);

}  // namespace pinnpid
