#pragma once

/**
 * @file config.hpp
 * @brief Experiment configuration: one JSON document per experiment, overlaid
 * on per-plant defaults. Unknown keys are rejected.
 */

#include "pinnpid/analysis.hpp"
#include "pinnpid/datagen.hpp"
#include "pinnpid/dynamics.hpp"
#include "pinnpid/gainopt.hpp"
#include "pinnpid/mpc.hpp"
#include "pinnpid/pinn.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace pinnpid {

enum class PlantKind { Msd, Manipulator };

PlantKind plant_kind_from_name(const std::string& name);
std::string plant_kind_name(PlantKind k);

/// Where the controller's transition model comes from.
struct ModelSource {
  std::string kind = "pinn";  ///< pinn | exact-linear (mass-spring-damper only)
  std::string path;           ///< model file for kind pinn
};

struct ExperimentConfig {
  std::string name = "msd";
  std::uint64_t seed = 1;

  PlantKind plant = PlantKind::Msd;
  MsdParams msd;
  ManipulatorParams manipulator;

  DatasetConfig dataset;     ///< domain.dt is also the control interval
  std::vector<int> hidden;   ///< hidden layer widths
  TrainConfig train;
  ValidationConfig validation;
  ModelSource model;

  Vec q_diag;
  Vec q_terminal_diag;
  Vec r_diag;
  double mu = 1.0;
  std::string layout = "position-diagonal";
  Box gain_bounds;
  Box input_box;      ///< admissible applied input; may be narrower than the data domain
  Vec initial_gains;  ///< empty: box centre
  Regularizer regularizer = Regularizer::Plain;
  SegmentOptions optimizer;

  ClosedLoopConfig closed_loop;  ///< dt and seed are filled from the fields above
  ReferenceSignal reference;
  Vec x0;
  FrequencyGrid grid;

  std::string out_dir;  ///< empty: <output root>/<name>-seed<seed>

  [[nodiscard]] int state_dim() const { return plant == PlantKind::Msd ? 2 : 4; }
  [[nodiscard]] int input_dim() const { return plant == PlantKind::Msd ? 1 : 2; }

  /// Throws ConfigError on inconsistent dimensions or out-of-range values.
  void validate() const;
};

/// Full-scale settings of the chosen plant (servo schedule for the
/// mass-spring-damper, swing-up regulation for the manipulator).
ExperimentConfig default_config(PlantKind kind);

/// Parses JSON text; `plant.kind` selects the defaults the document is laid over.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Fully resolved document; parsing it back gives the same configuration.
std::string config_to_json(const ExperimentConfig& config);

/// Seeds of the individual stages, all derived from `config.seed`.
DatasetConfig dataset_for(const ExperimentConfig& config);
TrainConfig train_for(const ExperimentConfig& config);
ValidationConfig validation_for(const ExperimentConfig& config);
std::uint64_t init_seed_for(const ExperimentConfig& config);
ClosedLoopConfig closed_loop_for(const ExperimentConfig& config);
ControllerSetup controller_for(const ExperimentConfig& config);

std::unique_ptr<Plant> make_plant(const ExperimentConfig& config);
NetworkSpec network_spec_for(const ExperimentConfig& config);

/// Output root from PINNPID_OUT_ROOT, "runs" when unset.
std::string default_output_root();
/// `out_override` when given, else config.out_dir, else <root>/<name>-seed<seed>.
std::string output_dir_for(const ExperimentConfig& config, const std::string& out_override);

}  // namespace pinnpid
