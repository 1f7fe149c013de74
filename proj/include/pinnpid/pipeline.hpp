#pragma once

/**
 * @file pipeline.hpp
 * @brief Experiment stages driven by an ExperimentConfig: dataset
 * generation, training, model evaluation, closed-loop run, run artifacts.
 */

#include "pinnpid/config.hpp"
#include "pinnpid/io.hpp"
#include "pinnpid/mpc.hpp"
#include "pinnpid/pinn.hpp"

#include <iosfwd>
#include <memory>
#include <string>

namespace pinnpid {

/// Glorot initialisation over the configured domain.
Network initial_network(const ExperimentConfig& config);

ValidationSet validation_set_for(const ExperimentConfig& config, const Plant& plant);

struct TrainOutcome {
  TrainResult result;
  ValidationReport report;
  double seconds = 0.0;
};

TrainOutcome train_model(const ExperimentConfig& config, std::ostream* progress = nullptr);

/// The controller's transition model: the network at `model_path` (falls
/// back to config.model.path) or the exact linear model of the MSD.
std::unique_ptr<TransitionModel> make_model(const ExperimentConfig& config, const std::string& model_path = "");

TrajectoryLog run_experiment(const ExperimentConfig& config, const TransitionModel& model, TraceSink trace = {});

/// trajectory.csv, summary.json, config.resolved.json and SVG plots under plots/.
void write_run_outputs(const std::string& dir, const ExperimentConfig& config, const TrajectoryLog& log,
                       bool plots = true);

}  // namespace pinnpid
