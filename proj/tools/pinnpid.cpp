// pinnpid: command-line entry point for the PINN adaptive PID pipeline.
//
//   pinnpid gen-data   --config cfg.json [--seed N] [--out DIR]
//   pinnpid train      --config cfg.json [--seed N] [--out DIR]
//   pinnpid eval-model --config cfg.json --model FILE
//   pinnpid run        --config cfg.json [--model FILE] [--seed N] [--out DIR] [--trace]
//   pinnpid analyze    --gains kp,ki,kd [--config cfg.json] [--out DIR]
//   pinnpid plot       --log trajectory.csv [--config cfg.json] --out DIR
//   pinnpid sweep      --config cfg.json --seeds 1,2,3 [--jobs J] [--out DIR]
//
// Exit codes: 0 success, 1 domain error (numerical failure, missing model,
// self-check mismatch), 2 configuration or usage error. Failures print one
// JSON error record on stderr.

#include "pinnpid/analysis.hpp"
#include "pinnpid/config.hpp"
#include "pinnpid/datagen.hpp"
#include "pinnpid/gainopt.hpp"
#include "pinnpid/io.hpp"
#include "pinnpid/pipeline.hpp"
#include "pinnpid/platform.hpp"
#include "pinnpid/plots.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

using namespace pinnpid;
namespace fs = std::filesystem;
using ordered = nlohmann::ordered_json;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string model;
  std::string log;
  std::string gains;
  std::string seeds;
  std::string mode;
  std::int64_t seed = -1;
  int jobs = 0;
  bool trace = false;
  bool self_check = false;
  bool no_plots = false;
  bool quiet = false;
};

void print_error(const std::string& kind, const std::string& message) {
  ordered j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << j.dump() << std::endl;
}

ExperimentConfig resolve_config(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  ExperimentConfig c = load_config(o.config);
  if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
  if (!o.mode.empty()) {
    try {
      c.closed_loop.mode = gain_mode_from_name(o.mode);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  c.validate();
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// -- self-check: hand-derived values the library must reproduce --------------

int self_check() {
  struct Check {
    std::string name;
    double got;
    double want;
    double tol;
  };
  std::vector<Check> checks;
  const MsdParams msd;
  const FrozenLoop loop{msd, 1.2, 1.0, 1.2};
  checks.push_back({"routh_hurwitz g(1.2,1.0,1.2)", routh_hurwitz(loop), 2.74, 1e-12});
  const auto l1 = open_loop_response(loop, 1.0);
  checks.push_back({"L(j1) real", l1.real(), 0.4, 1e-12});
  checks.push_back({"L(j1) imag", l1.imag(), -2.4, 1e-12});
  {
    std::vector<double> t, e;
    for (int i = 0; i <= 10000; ++i) {
      t.push_back(i * 1e-3);
      e.push_back(std::exp(-i * 1e-3));
    }
    const auto st = settling_time(t, e, 1.0, 0.02);
    checks.push_back({"settling of exp(-t), 2% band", st ? *st : -1.0, std::log(50.0), 1e-6});
  }
  {
    const MsdPlant plant(msd);
    const Vec x0 = (Vec(2) << -0.7, 0.0).finished();
    const Vec u = Vec::Zero(1);
    // exact solution of the free response, x'' + 0.5 x' + x = 0
    const double a = 0.25, w = std::sqrt(1.0 - a * a);
    const double z = -0.7 * std::exp(-a * 4.0) * (std::cos(w * 4.0) + a / w * std::sin(w * 4.0));
    const double e1 = std::abs(rk4_integrate(plant, x0, u, 4.0, 40)[0] - z);
    const double e2 = std::abs(rk4_integrate(plant, x0, u, 4.0, 80)[0] - z);
    checks.push_back({"rk4 halving ratio", e1 / e2, 16.0, 2.0});
  }
  {
    const ManipulatorParams p;
    checks.push_back({"gravity compensation at upright", gravity_compensation_input(p, Vec::Zero(2)).norm(), 0.0, 1e-15});
  }
  bool ok = true;
  ordered arr = ordered::array();
  for (const auto& c : checks) {
    const bool pass = std::abs(c.got - c.want) <= c.tol;
    ok = ok && pass;
    arr.push_back({{"check", c.name}, {"got", c.got}, {"want", c.want}, {"tol", c.tol}, {"pass", pass}});
  }
  std::cout << ordered{{"self_check", arr}, {"pass", ok}}.dump(2) << std::endl;
  if (!ok) {
    print_error("self-check", "oracle mismatch beyond tolerance");
    return 1;
  }
  return 0;
}

// -- subcommands ------------------------------------------------------------------

int cmd_gen_data(const Options& o) {
  const ExperimentConfig c = resolve_config(o);
  const std::string dir = output_dir_for(c, o.out);
  const auto plant = make_plant(c);
  const DatasetConfig dc = dataset_for(c);
  DataSetStats stats;
  const auto data = build_data_set(*plant, dc, &stats);
  const auto phys = build_phys_set(dc);
  std::ostringstream a, b;
  write_data_csv(a, data);
  write_phys_csv(b, phys);
  write_text_file((fs::path(dir) / "data.csv").string(), a.str());
  write_text_file((fs::path(dir) / "phys.csv").string(), b.str());
  write_text_file((fs::path(dir) / "data.meta.json").string(), dataset_metadata_json(dc, plant->name(), stats));
  write_text_file((fs::path(dir) / "config.resolved.json").string(), config_to_json(c));
  std::cout << ordered{{"out", dir}, {"n_data", data.size()}, {"n_phys", phys.size()}, {"resampled", stats.resampled}}.dump()
            << std::endl;
  return 0;
}

int cmd_train(const Options& o) {
  ExperimentConfig c = resolve_config(o);
  const std::string dir = output_dir_for(c, o.out);
  fs::create_directories(dir);
  const std::string model_path = (fs::path(dir) / "model.pinn").string();
  c.train.snapshot_path = (fs::path(dir) / "model.nonfinite.pinn").string();
  const TrainOutcome t = train_model(c, o.quiet ? nullptr : &std::cerr);
  save_network(model_path, t.result.net);
  std::ostringstream hist;
  write_history_csv(hist, t.result.history);
  write_text_file((fs::path(dir) / "history.csv").string(), hist.str());
  write_text_file((fs::path(dir) / "validation.json").string(), validation_json(t.report));
  c.model.path = model_path;
  c.train.snapshot_path.clear();
  write_text_file((fs::path(dir) / "config.resolved.json").string(), config_to_json(c));
  std::cout << ordered{{"model", model_path},
                       {"best_iter", t.result.best_iter},
                       {"seconds", t.seconds},
                       {"validation", ordered::parse(validation_json(t.report))}}
                   .dump(2)
            << std::endl;
  return 0;
}

int cmd_eval_model(const Options& o) {
  const ExperimentConfig c = resolve_config(o);
  const auto model = make_model(c, o.model);
  const auto plant = make_plant(c);
  const ValidationReport rep = validate(*model, validation_set_for(c, *plant));
  const std::string text = validation_json(rep);
  if (!o.out.empty()) write_text_file((fs::path(o.out) / "validation.json").string(), text);
  std::cout << text;
  return 0;
}

void run_one(const ExperimentConfig& c, const std::string& dir, const std::string& model_path, bool trace, bool plots) {
  const auto model = make_model(c, model_path);
  fs::create_directories(dir);
  std::ofstream trace_file;
  TraceSink sink;
  if (trace) {
    trace_file.open((fs::path(dir) / "trace.csv").string(), std::ios::binary);
    if (!trace_file) throw DomainError("cannot write the trace file");
    sink.os = &trace_file;
  }
  ExperimentConfig resolved = c;
  if (!model_path.empty()) resolved.model.path = model_path;
  const TrajectoryLog log = run_experiment(resolved, *model, sink);
  write_run_outputs(dir, resolved, log, plots);
}

int cmd_run(const Options& o) {
  const ExperimentConfig c = resolve_config(o);
  const std::string dir = output_dir_for(c, o.out);
  run_one(c, dir, o.model, o.trace, !o.no_plots);
  // a diverged run is a valid experiment outcome (the unconstrained
  // disturbance test); it is reported in the summary, not as a failure
  std::cout << read_file((fs::path(dir) / "summary.json").string());
  return 0;
}

Vec parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse number '" + cell + "' in '" + s + "'");
    }
  }
  return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

int cmd_analyze(const Options& o) {
  ExperimentConfig c = o.config.empty() ? default_config(PlantKind::Msd) : resolve_config(o);
  if (c.plant != PlantKind::Msd) throw ConfigError("analyze needs the msd plant");
  // the stability analysis works on the nominal plant; a model file is only checked for readability
  if (!o.model.empty()) (void)load_network(o.model);
  const Vec g = parse_list(o.gains);
  if (g.size() != 3) throw ConfigError("--gains needs three values kp,ki,kd");
  const FrozenLoop loop = frozen_loop(c.msd, g);
  const StabilityReport rep = analyze(loop, c.grid);
  const std::string text = stability_json(rep, loop);
  if (!o.out.empty()) {
    write_text_file((fs::path(o.out) / "stability.json").string(), text);
    std::ostringstream ny;
    write_nyquist_csv(ny, loop, c.grid);
    write_text_file((fs::path(o.out) / "nyquist.csv").string(), ny.str());
    write_text_file((fs::path(o.out) / "nyquist.svg").string(), nyquist_svg(loop, c.grid));
  }
  std::cout << text;
  return 0;
}

int cmd_plot(const Options& o) {
  if (o.log.empty()) throw ConfigError("--log is required");
  if (o.out.empty()) throw ConfigError("--out is required");
  std::ifstream in(o.log);
  if (!in) throw DomainError("cannot open '" + o.log + "'");
  const TrajectoryLog log = read_log_csv(in);
  std::optional<MsdParams> msd;
  FrequencyGrid grid;
  if (!o.config.empty()) {
    const ExperimentConfig c = resolve_config(o);
    if (c.plant == PlantKind::Msd) msd = c.msd;
    grid = c.grid;
  } else if (log.has_stability) {
    msd = MsdParams{};
  }
  const PlotResult pr = emit_plots(log, o.out, {}, msd, grid);
  std::cout << ordered{{"written", pr.written}, {"notes", pr.notes}}.dump(2) << std::endl;
  return 0;
}

int cmd_sweep(const Options& o) {
  const ExperimentConfig base = resolve_config(o);
  const Vec seeds = parse_list(o.seeds);
  if (seeds.size() == 0) throw ConfigError("--seeds needs at least one seed");
  for (double s : seeds)
    if (s < 0 || s != std::floor(s)) throw ConfigError("--seeds must be non-negative integers");
  const std::string root = o.out.empty() ? default_output_root() + "/" + base.name + "-sweep" : o.out;
  const int jobs = o.jobs > 0 ? o.jobs : std::max(1u, std::thread::hardware_concurrency());

  std::atomic<Eigen::Index> next{0};
  std::mutex mu;
  ordered results = ordered::array();
  std::string first_error;
  auto worker = [&] {
    for (Eigen::Index i = next++; i < seeds.size(); i = next++) {
      ExperimentConfig c = base;
      c.seed = static_cast<std::uint64_t>(seeds[i]);
      const std::string dir = (fs::path(root) / ("seed-" + std::to_string(c.seed))).string();
      try {
        run_one(c, dir, o.model, o.trace, !o.no_plots);
        const ordered summary = ordered::parse(read_file((fs::path(dir) / "summary.json").string()));
        std::lock_guard<std::mutex> lock(mu);
        results.push_back({{"seed", c.seed}, {"dir", dir}, {"summary", summary}});
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        if (first_error.empty()) first_error = "seed " + std::to_string(c.seed) + ": " + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < std::min<int>(jobs, static_cast<int>(seeds.size())); ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  std::sort(results.begin(), results.end(),
            [](const ordered& a, const ordered& b) { return a["seed"].get<std::uint64_t>() < b["seed"].get<std::uint64_t>(); });
  write_text_file((fs::path(root) / "sweep.json").string(), results.dump(2) + "\n");
  std::cout << results.dump(2) << std::endl;
  if (!first_error.empty()) throw DomainError(first_error);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"PINN-based adaptive PID control: surrogate training, gain optimisation, stability analysis"};
  app.require_subcommand(0, 1);
  Options o;
  app.add_flag("--self-check", o.self_check, "Check the library against hand-derived values and exit");

  auto common = [&](CLI::App* s, bool with_seed, bool with_out) {
    s->add_option("--config", o.config, "Experiment config (JSON)");
    if (with_seed) s->add_option("--seed", o.seed, "Override the config seed")->check(CLI::NonNegativeNumber);
    if (with_out) s->add_option("--out", o.out, "Output directory (default: $PINNPID_OUT_ROOT/<name>-seed<seed>)");
    s->add_flag("--self-check", o.self_check, "Run the self-check before the command");
  };
  auto* gen = app.add_subcommand("gen-data", "Generate the data and physics training sets");
  common(gen, true, true);
  auto* tr = app.add_subcommand("train", "Train the transition surrogate");
  common(tr, true, true);
  tr->add_flag("--quiet", o.quiet, "No training progress on stderr");
  auto* ev = app.add_subcommand("eval-model", "Validate a trained model on held-out RK4 trajectories");
  common(ev, true, true);
  ev->add_option("--model", o.model, "Model file")->required();
  auto* run = app.add_subcommand("run", "Closed-loop experiment");
  common(run, true, true);
  run->add_option("--model", o.model, "Model file (default: model.path of the config)");
  run->add_option("--mode", o.mode, "Override the gain mode (adaptive, fixed, adaptive-frozen)");
  run->add_flag("--trace", o.trace, "Write the per-iteration optimiser trace");
  run->add_flag("--no-plots", o.no_plots, "Skip the SVG plots");
  auto* an = app.add_subcommand("analyze", "Frozen-gain stability report of the mass-spring-damper loop");
  common(an, false, true);
  an->add_option("--gains", o.gains, "kp,ki,kd")->required();
  an->add_option("--model", o.model, "Model file (checked for readability only)");
  auto* pl = app.add_subcommand("plot", "Render SVG plots from a trajectory CSV");
  common(pl, false, true);
  pl->add_option("--log", o.log, "trajectory.csv of a run")->required();
  auto* sw = app.add_subcommand("sweep", "Run one config over several seeds in parallel");
  common(sw, false, true);
  sw->add_option("--seeds", o.seeds, "Comma-separated seeds")->required();
  sw->add_option("--jobs", o.jobs, "Parallel runs (default: hardware threads)");
  sw->add_option("--model", o.model, "Model file");
  sw->add_flag("--trace", o.trace, "Write optimiser traces");
  sw->add_flag("--no-plots", o.no_plots, "Skip the SVG plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (o.self_check) {
      const int rc = self_check();
      if (rc != 0 || app.get_subcommands().empty()) return rc;
    }
    if (gen->parsed()) return cmd_gen_data(o);
    if (tr->parsed()) return cmd_train(o);
    if (ev->parsed()) return cmd_eval_model(o);
    if (run->parsed()) return cmd_run(o);
    if (an->parsed()) return cmd_analyze(o);
    if (pl->parsed()) return cmd_plot(o);
    if (sw->parsed()) return cmd_sweep(o);
    std::cerr << app.help() << std::endl;
    print_error("usage", "a subcommand is required");
    return 2;
  } catch (const ConfigError& e) {
    print_error("config", e.what());
    return 2;
  } catch (const DomainError& e) {
    print_error("domain", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("domain", e.what());
    return 1;
  }
}
