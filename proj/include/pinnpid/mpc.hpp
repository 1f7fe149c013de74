#pragma once

/**
 * @file mpc.hpp
 * @brief Closed-loop executor: per step, optimise the gains over the
 * surrogate, apply the PID input to the RK4 plant for one interval, measure,
 * advance the error state.
 */

#include "pinnpid/analysis.hpp"
#include "pinnpid/dynamics.hpp"
#include "pinnpid/gainopt.hpp"
#include "pinnpid/random.hpp"
#include "pinnpid/transition.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pinnpid {

/// Piecewise-constant reference: `initial` from t = 0, then each step's value
/// from its switch time on.
struct ReferenceSignal {
  Vec initial;
  std::vector<std::pair<double, Vec>> steps;

  /// Active value at t; a switch at time s is active for t >= s - 1e-9.
  [[nodiscard]] Vec at(double t) const;
  [[nodiscard]] std::vector<double> switch_times() const;
  void validate(int n) const;
};

enum class GainMode { Adaptive, Fixed, AdaptiveFrozen };

GainMode gain_mode_from_name(const std::string& name);
std::string gain_mode_name(GainMode m);

struct Disturbance {
  double time = 0.0;  ///< active from this time on
  Vec offset;         ///< added to the plant input
};

struct ClosedLoopConfig {
  double dt = 0.2;
  double t_final = 60.0;
  int substeps = 20;
  GainMode mode = GainMode::Adaptive;
  Vec fixed_gains;           ///< gain vector for Fixed mode
  double freeze_time = 25.0; ///< AdaptiveFrozen: gains held for t > freeze_time
  double noise_level = 0.0;  ///< multiplicative Gaussian sensor noise
  std::vector<Disturbance> disturbances;
  bool saturate = true;
  /// AdaptiveFrozen only: keep clipping the input once the gains are frozen.
  /// Off reproduces the frozen linear loop of the disturbance test.
  bool saturate_after_freeze = true;
  bool anti_windup = true;
  int horizon = 5;
  int n_quad = 10;
  double divergence_threshold = 1e3;  ///< max-norm state bound before the run is declared diverged
  Vec x_ref_init;            ///< reference before t = 0 (zero when empty)
  /// Lookahead references taken from the schedule; otherwise the current
  /// reference is held over the window (no knowledge of future switches).
  bool reference_preview = false;
  bool warm_start = true;    ///< start each segment from the previous gains
  bool random_init = false;  ///< draw each segment's start uniformly from the gain box
  std::uint64_t seed = 1;

  [[nodiscard]] int steps() const;
  void validate() const;
};

/// Everything the gain optimiser needs besides the current state.
struct ControllerSetup {
  CostWeights weights;
  GainLayout layout;
  Box gain_bounds;
  Box input_box;
  Regularizer regularizer = Regularizer::Plain;
  SegmentOptions options;
  Vec initial_gains;               ///< first segment start; box centre when empty
  std::optional<MsdParams> msd;    ///< enables per-step stability reports and the barrier
  FrequencyGrid grid;
};

struct LogRow {
  double t = 0.0;
  Vec x_meas;
  Vec x_true;
  Vec x_ref;
  Vec u;
  Vec gains;
  double cost = 0.0;      ///< 1/2 (e'Qe + u'Ru) dt + mu ||theta||^2 at the measured error
  double opt_cost = std::numeric_limits<double>::quiet_NaN();  ///< window objective when optimised
  int opt_iters = 0;
  double g = std::numeric_limits<double>::quiet_NaN();
  double margin = std::numeric_limits<double>::quiet_NaN();
  double crossover = std::numeric_limits<double>::quiet_NaN();
};

struct TrajectoryLog {
  int state_dim = 0;
  int input_dim = 0;
  double dt = 0.2;
  std::vector<std::string> gain_labels;
  std::vector<LogRow> rows;
  Vec final_state;  ///< true state after the last logged step
  bool diverged = false;
  double diverged_at = std::numeric_limits<double>::quiet_NaN();
  bool has_stability = false;
};

/// Each coordinate multiplied by (1 + level * xi), xi standard normal.
Vec apply_measurement_noise(const Vec& x, double level, Rng& rng);

/// Optional per-segment trace sink (`--trace`).
struct TraceSink {
  std::ostream* os = nullptr;
};

TrajectoryLog run_closed_loop(const Plant& plant, const TransitionModel& model, const ClosedLoopConfig& config,
                              const ControllerSetup& controller, const ReferenceSignal& reference, const Vec& x0,
                              TraceSink trace = {});

/// Time after `t_start` from which |error| stays within band * step_size
/// until `t_end`, linearly interpolated between samples. Measured from
/// t_start; none when the last sample in the window is still outside.
std::optional<double> settling_time(const std::vector<double>& times, const std::vector<double>& errors,
                                    double step_size, double band_fraction, double t_start = 0.0,
                                    double t_end = std::numeric_limits<double>::infinity());

/// Settling of one coordinate of the true state after the last reference
/// switch (after t = 0 from the initial error when there is no switch).
std::optional<double> settling_time(const TrajectoryLog& log, int coordinate, double band_fraction);

/// Integral of |x_ref - x_true| of one coordinate (rectangle rule on the log grid).
double integrated_abs_error(const TrajectoryLog& log, int coordinate, double t_from = 0.0);

}  // namespace pinnpid
