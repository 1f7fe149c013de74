#include "pinnpid/pipeline.hpp"

#include "pinnpid/plots.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pinnpid {

Network initial_network(const ExperimentConfig& config) {
  const auto& d = config.dataset.domain;
  return Network::glorot(network_spec_for(config), InputScaling::for_domain(d.horizon(), d.state, d.input),
                         init_seed_for(config));
}

ValidationSet validation_set_for(const ExperimentConfig& config, const Plant& plant) {
  return make_validation_set(plant, config.dataset.domain, validation_for(config));
}

TrainOutcome train_model(const ExperimentConfig& config, std::ostream* progress) {
  const auto plant = make_plant(config);
  const ValidationSet val = validation_set_for(config, *plant);
  const auto t0 = std::chrono::steady_clock::now();
  TrainOutcome out;
  out.result = train(initial_network(config), *plant, dataset_for(config), train_for(config), &val, progress);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.report = validate(PinnModel(out.result.net, config.dataset.domain.dt), val);
  return out;
}

std::unique_ptr<TransitionModel> make_model(const ExperimentConfig& config, const std::string& model_path) {
  const double dt = config.dataset.domain.dt;
  if (config.model.kind == "exact-linear") {
    const auto& p = config.msd;
    Mat a(2, 2), b(2, 1);
    a << 0.0, 1.0, -p.stiffness / p.mass, -p.damping / p.mass;
    b << 0.0, 1.0 / p.mass;
    return std::make_unique<ExactLinearModel>(a, b, dt, config.dataset.domain.horizon());
  }
  const std::string path = model_path.empty() ? config.model.path : model_path;
  if (path.empty()) throw ConfigError("no model file given (set model.path or pass --model)");
  if (!std::filesystem::exists(path)) throw DomainError("model file '" + path + "' does not exist");
  Network net = load_network(path);
  if (net.state_dim() != config.state_dim() || net.control_dim() != config.input_dim())
    throw DomainError("model '" + path + "' does not match the plant dimensions");
  return std::make_unique<PinnModel>(std::move(net), dt);
}

TrajectoryLog run_experiment(const ExperimentConfig& config, const TransitionModel& model, TraceSink trace) {
  const auto plant = make_plant(config);
  return run_closed_loop(*plant, model, closed_loop_for(config), controller_for(config), config.reference, config.x0,
                         trace);
}

void write_run_outputs(const std::string& dir, const ExperimentConfig& config, const TrajectoryLog& log, bool plots) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  std::ostringstream csv;
  write_log_csv(csv, log);
  write_text_file((d / "trajectory.csv").string(), csv.str());
  write_text_file((d / "summary.json").string(), summary_json(summarize(log, config.input_dim())));
  write_text_file((d / "config.resolved.json").string(), config_to_json(config));
  if (plots) {
    std::optional<MsdParams> msd;
    if (config.plant == PlantKind::Msd) msd = config.msd;
    const PlotResult pr = emit_plots(log, (d / "plots").string(), {}, msd, config.grid);
    if (!pr.notes.empty()) {
      std::string notes;
      for (const auto& n : pr.notes) notes += n + "\n";
      write_text_file((d / "plots" / "NOTES.txt").string(), notes);
    }
  }
}

}  // namespace pinnpid
