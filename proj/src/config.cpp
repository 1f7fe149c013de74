#include "pinnpid/config.hpp"

#include "pinnpid/random.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace pinnpid {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

Vec vec_of(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

/// One JSON object being read; remembers which keys were consumed so the
/// leftovers can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + ": wrong type");
    }
  }

  void get_uint(const std::string& key, std::uint64_t& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const json& v = j_.at(key);
    if (!v.is_number_unsigned()) throw ConfigError(where(key) + ": expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void get_vec(const std::string& key, Vec& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    out = to_vec(j_.at(key), where(key));
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    return Section(j_.at(key), where(key));
  }

  [[nodiscard]] const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + where(it.key()) + "'");
  }

  [[nodiscard]] std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  static Vec to_vec(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(where + ": expected an array of numbers");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

/// Reference entries may list positions only; velocities are then zero.
Vec pad_reference(const Vec& v, int n, int p, const std::string& where) {
  if (v.size() == n) return v;
  if (v.size() == p) {
    Vec out = Vec::Zero(n);
    out.head(p) = v;
    return out;
  }
  throw ConfigError(where + ": expected " + std::to_string(p) + " or " + std::to_string(n) + " entries");
}

ordered vec_json(const Vec& v) {
  ordered a = ordered::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

void check_size(const Vec& v, Eigen::Index n, const std::string& what) {
  if (v.size() != n)
    throw ConfigError(what + ": expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
}

void read_plant(Section s, ExperimentConfig& c) {
  std::string kind;
  s.get("kind", kind);
  if (c.plant == PlantKind::Msd) {
    s.get("mass", c.msd.mass);
    s.get("damping", c.msd.damping);
    s.get("stiffness", c.msd.stiffness);
  } else {
    auto& p = c.manipulator;
    s.get("m1", p.m1);
    s.get("m2", p.m2);
    s.get("l1", p.l1);
    s.get("l2", p.l2);
    s.get("lc1", p.lc1);
    s.get("lc2", p.lc2);
    s.get("i1", p.i1);
    s.get("i2", p.i2);
    s.get("gravity", p.gravity);
    s.get("b_alpha", p.b_alpha);
    s.get("b_beta", p.b_beta);
    s.get("joint_damping", p.joint_damping);
  }
  s.finish();
}

void read_domain(Section s, ExperimentConfig& c) {
  auto& d = c.dataset.domain;
  s.get("dt", d.dt);
  s.get("epsilon", d.epsilon);
  s.get_vec("state_lower", d.state.lower);
  s.get_vec("state_upper", d.state.upper);
  s.get_vec("input_lower", d.input.lower);
  s.get_vec("input_upper", d.input.upper);
  s.finish();
}

void read_train(Section s, TrainConfig& t) {
  s.get("lambda", t.lambda);
  s.get("optimizer", t.optimizer);
  s.get("iterations", t.iterations);
  s.get("lbfgs_iterations", t.lbfgs_iterations);
  s.get("lbfgs_memory", t.lbfgs_memory);
  s.get("regen_interval", t.regen_interval);
  s.get("validation_interval", t.validation_interval);
  s.get("lr_start", t.lr_start);
  s.get("lr_end", t.lr_end);
  s.get("beta1", t.beta1);
  s.get("beta2", t.beta2);
  s.get("eps", t.adam_eps);
  s.get("batch_data", t.batch_data);
  s.get("batch_phys", t.batch_phys);
  s.finish();
}

void read_controller(Section s, ExperimentConfig& c) {
  s.get_vec("q", c.q_diag);
  s.get_vec("q_terminal", c.q_terminal_diag);
  s.get_vec("r", c.r_diag);
  s.get("mu", c.mu);
  s.get("layout", c.layout);
  s.get_vec("gain_lower", c.gain_bounds.lower);
  s.get_vec("gain_upper", c.gain_bounds.upper);
  s.get_vec("input_lower", c.input_box.lower);
  s.get_vec("input_upper", c.input_box.upper);
  s.get_vec("initial_gains", c.initial_gains);
  std::string reg = regularizer_name(c.regularizer);
  s.get("regularizer", reg);
  try {
    c.regularizer = regularizer_from_name(reg);
  } catch (const DomainError& e) {
    throw ConfigError(s.where("regularizer") + ": " + e.what());
  }
  auto& o = c.optimizer;
  s.get("lr", o.adam.lr);
  s.get("beta1", o.adam.beta1);
  s.get("beta2", o.adam.beta2);
  s.get("eps", o.adam.eps);
  s.get("max_iters", o.max_iters);
  s.get("tol", o.tol);
  if (s.has("barrier")) {
    Section b = s.sub("barrier");
    b.get("rho_start", o.barrier.rho_start);
    b.get("rho_end", o.barrier.rho_end);
    b.get("iterations", o.barrier.iterations);
    b.finish();
  }
  s.finish();
}

void read_closed_loop(Section s, ExperimentConfig& c) {
  auto& l = c.closed_loop;
  s.get("t_final", l.t_final);
  s.get("substeps", l.substeps);
  std::string mode = gain_mode_name(l.mode);
  s.get("mode", mode);
  try {
    l.mode = gain_mode_from_name(mode);
  } catch (const DomainError& e) {
    throw ConfigError(s.where("mode") + ": " + e.what());
  }
  s.get_vec("fixed_gains", l.fixed_gains);
  s.get("freeze_time", l.freeze_time);
  s.get("noise_level", l.noise_level);
  if (s.has("disturbances")) {
    const std::string where = s.where("disturbances");
    const json& arr = s.raw("disturbances");
    if (!arr.is_array()) throw ConfigError(where + ": expected an array");
    l.disturbances.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section d(arr[i], where + "[" + std::to_string(i) + "]");
      Disturbance dist;
      d.get("time", dist.time);
      d.get_vec("offset", dist.offset);
      d.finish();
      l.disturbances.push_back(dist);
    }
  }
  s.get("saturate", l.saturate);
  s.get("saturate_after_freeze", l.saturate_after_freeze);
  s.get("anti_windup", l.anti_windup);
  s.get("horizon", l.horizon);
  s.get("n_quad", l.n_quad);
  s.get("divergence_threshold", l.divergence_threshold);
  s.get_vec("x_ref_init", l.x_ref_init);
  s.get("reference_preview", l.reference_preview);
  s.get("warm_start", l.warm_start);
  s.get("random_init", l.random_init);
  s.finish();
}

void read_reference(Section s, ExperimentConfig& c) {
  const int n = c.state_dim(), p = c.input_dim();
  if (s.has("initial")) {
    Vec v;
    s.get_vec("initial", v);
    c.reference.initial = pad_reference(v, n, p, s.where("initial"));
  }
  if (s.has("steps")) {
    const std::string where = s.where("steps");
    const json& arr = s.raw("steps");
    if (!arr.is_array()) throw ConfigError(where + ": expected an array");
    c.reference.steps.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string w = where + "[" + std::to_string(i) + "]";
      Section st(arr[i], w);
      double time = 0.0;
      Vec v;
      st.get("time", time);
      st.get_vec("value", v);
      st.finish();
      c.reference.steps.emplace_back(time, pad_reference(v, n, p, w + ".value"));
    }
  }
  s.finish();
}

template <class F>
void rethrow_as_config(const std::string& what, F&& f) {
  try {
    f();
  } catch (const DomainError& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace

PlantKind plant_kind_from_name(const std::string& name) {
  if (name == "msd") return PlantKind::Msd;
  if (name == "manipulator") return PlantKind::Manipulator;
  throw ConfigError("unknown plant '" + name + "' (expected msd or manipulator)");
}

std::string plant_kind_name(PlantKind k) { return k == PlantKind::Msd ? "msd" : "manipulator"; }

ExperimentConfig default_config(PlantKind kind) {
  ExperimentConfig c;
  c.plant = kind;
  c.dataset.n_data = 20000;
  c.dataset.n_phys = 100000;
  c.dataset.domain.dt = 0.2;
  c.dataset.domain.epsilon = 0.05;
  c.train.lambda = 1.0;
  c.train.validation_interval = 10;
  c.optimizer.adam.lr = 1e-2;
  c.optimizer.adam.eps = 1e-7;
  c.closed_loop.substeps = 20;
  c.closed_loop.horizon = 20;
  c.closed_loop.n_quad = 10;
  if (kind == PlantKind::Msd) {
    c.name = "msd_servo";
    c.dataset.domain.state = Box(vec_of({-2.0, -1.5}), vec_of({2.0, 1.5}));
    c.dataset.domain.input = Box(vec_of({-1.0}), vec_of({1.0}));
    c.hidden = {32, 32, 32};
    c.train.iterations = 200000;
    c.train.regen_interval = 100000;
    c.validation.duration = 40.0;
    c.q_diag = vec_of({1000.0, 1.0});
    c.q_terminal_diag = 20.0 * c.q_diag;
    c.r_diag = vec_of({0.01});
    c.gain_bounds = Box(Vec::Zero(3), Vec::Constant(3, 5.0));
    c.input_box = Box(vec_of({-1.0}), vec_of({1.0}));
    c.optimizer.max_iters = 20000;
    c.optimizer.barrier.iterations = 20000;
    c.closed_loop.t_final = 60.0;
    c.closed_loop.fixed_gains = vec_of({1.2, 1.0, 1.2});
    c.closed_loop.noise_level = 0.03;
    c.reference.initial = Vec::Zero(2);
    c.reference.steps = {{20.0, vec_of({0.3, 0.0})}, {40.0, vec_of({-0.5, 0.0})}};
    c.x0 = vec_of({-0.7, 0.0});
  } else {
    constexpr double pi = std::numbers::pi;
    c.name = "manipulator_regulation";
    c.dataset.domain.state = Box(vec_of({-pi, -pi, -2.5, -2.5}), vec_of({pi, pi, 2.5, 2.5}));
    c.dataset.domain.input = Box(Vec::Constant(2, -0.5), Vec::Constant(2, 0.5));
    c.hidden = {64, 64, 64, 64};
    c.train.iterations = 800000;
    c.train.regen_interval = 400000;
    c.validation.require_inside = false;
    c.validation.duration = 1.0;
    c.q_diag = vec_of({100.0, 100.0, 0.01, 0.01});
    c.q_terminal_diag = 20.0 * c.q_diag;
    c.r_diag = vec_of({0.01, 0.01});
    c.gain_bounds = Box(vec_of({0, 0, -3, -3, 0, 0}), vec_of({3, 3, 3, 3, 3, 3}));
    c.input_box = Box(Vec::Constant(2, -0.48), Vec::Constant(2, 0.48));
    c.optimizer.max_iters = 16000;
    c.optimizer.barrier.iterations = 16000;
    c.closed_loop.t_final = 40.0;
    c.closed_loop.fixed_gains = vec_of({2.0, 2.0, 0.3, 0.3, 0.2, 0.2});
    c.closed_loop.noise_level = 0.0;
    c.reference.initial = Vec::Zero(4);
    c.x0 = vec_of({-2.0, 1.5, 0.0, 0.0});
  }
  return c;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Section root(doc, "");

  PlantKind kind = PlantKind::Msd;
  if (doc.is_object() && doc.contains("plant")) {
    const json& p = doc.at("plant");
    if (!p.is_object()) throw ConfigError("plant: expected an object");
    if (p.contains("kind")) {
      if (!p.at("kind").is_string()) throw ConfigError("plant.kind: wrong type");
      kind = plant_kind_from_name(p.at("kind").get<std::string>());
    }
  }
  ExperimentConfig c = default_config(kind);

  root.get("name", c.name);
  root.get_uint("seed", c.seed);
  if (root.has("plant")) read_plant(root.sub("plant"), c);
  if (root.has("domain")) read_domain(root.sub("domain"), c);
  if (root.has("dataset")) {
    Section s = root.sub("dataset");
    s.get("n_data", c.dataset.n_data);
    s.get("n_phys", c.dataset.n_phys);
    s.finish();
  }
  if (root.has("network")) {
    Section s = root.sub("network");
    s.get("hidden", c.hidden);
    s.finish();
  }
  if (root.has("train")) read_train(root.sub("train"), c.train);
  if (root.has("validation")) {
    Section s = root.sub("validation");
    auto& v = c.validation;
    s.get("trajectories", v.trajectories);
    s.get("duration", v.duration);
    s.get("substeps", v.substeps);
    s.get("initial_fraction", v.initial_fraction);
    s.get("require_inside", v.require_inside);
    s.finish();
  }
  if (root.has("model")) {
    Section s = root.sub("model");
    s.get("kind", c.model.kind);
    s.get("path", c.model.path);
    s.finish();
  }
  if (root.has("controller")) read_controller(root.sub("controller"), c);
  if (root.has("closed_loop")) read_closed_loop(root.sub("closed_loop"), c);
  if (root.has("reference")) read_reference(root.sub("reference"), c);
  if (root.has("x0")) {
    Vec v;
    root.get_vec("x0", v);
    c.x0 = v;
  }
  if (root.has("frequency_grid")) {
    Section s = root.sub("frequency_grid");
    s.get("omega_min", c.grid.omega_min);
    s.get("omega_max", c.grid.omega_max);
    s.get("points", c.grid.points);
    s.finish();
  }
  if (root.has("output")) {
    Section s = root.sub("output");
    s.get("dir", c.out_dir);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void ExperimentConfig::validate() const {
  const int n = state_dim(), m = input_dim();
  if (name.empty()) throw ConfigError("name must not be empty");
  rethrow_as_config("plant", [&] {
    if (plant == PlantKind::Msd)
      msd.validate();
    else
      manipulator.validate();
  });
  check_size(dataset.domain.state.lower, n, "domain.state_lower");
  check_size(dataset.domain.state.upper, n, "domain.state_upper");
  check_size(dataset.domain.input.lower, m, "domain.input_lower");
  check_size(dataset.domain.input.upper, m, "domain.input_upper");
  rethrow_as_config("dataset", [&] { dataset.validate(); });
  if (hidden.empty()) throw ConfigError("network.hidden: at least one hidden layer");
  for (int w : hidden)
    if (w < 1) throw ConfigError("network.hidden: widths must be >= 1");
  rethrow_as_config("train", [&] { train.validate(); });
  if (validation.trajectories < 1) throw ConfigError("validation.trajectories must be >= 1");
  if (!(validation.duration >= dataset.domain.dt)) throw ConfigError("validation.duration must cover one interval");
  if (validation.substeps < 1) throw ConfigError("validation.substeps must be >= 1");
  if (!(validation.initial_fraction > 0.0 && validation.initial_fraction <= 1.0))
    throw ConfigError("validation.initial_fraction must lie in (0, 1]");
  if (model.kind != "pinn" && model.kind != "exact-linear")
    throw ConfigError("model.kind: expected pinn or exact-linear");
  if (model.kind == "exact-linear" && plant != PlantKind::Msd)
    throw ConfigError("model.kind exact-linear is only available for the msd plant");

  check_size(q_diag, n, "controller.q");
  check_size(q_terminal_diag, n, "controller.q_terminal");
  check_size(r_diag, m, "controller.r");
  if ((q_diag.array() < 0.0).any() || (q_terminal_diag.array() < 0.0).any())
    throw ConfigError("controller.q and q_terminal must be nonnegative");
  if (!(r_diag.array() > 0.0).all()) throw ConfigError("controller.r must be positive");
  if (!(mu >= 0.0)) throw ConfigError("controller.mu must be >= 0");
  GainLayout lay;
  rethrow_as_config("controller.layout", [&] { lay = GainLayout::from_name(layout, m, n); });
  check_size(gain_bounds.lower, lay.size(), "controller.gain_lower");
  check_size(gain_bounds.upper, lay.size(), "controller.gain_upper");
  rethrow_as_config("controller", [&] { gain_bounds.validate("gain bounds", false); });
  check_size(input_box.lower, m, "controller.input_lower");
  check_size(input_box.upper, m, "controller.input_upper");
  rethrow_as_config("controller", [&] { input_box.validate("input box", false); });
  if (initial_gains.size() != 0) {
    check_size(initial_gains, lay.size(), "controller.initial_gains");
    if (!gain_bounds.contains(initial_gains)) throw ConfigError("controller.initial_gains lie outside the gain box");
  }
  if (optimizer.max_iters < 1) throw ConfigError("controller.max_iters must be >= 1");
  if (!(optimizer.adam.lr > 0.0)) throw ConfigError("controller.lr must be positive");
  if (!(optimizer.tol >= 0.0)) throw ConfigError("controller.tol must be >= 0");
  rethrow_as_config("controller.barrier", [&] { optimizer.barrier.validate(); });
  if (regularizer == Regularizer::Barrier && !(plant == PlantKind::Msd && lay.size() == 3))
    throw ConfigError("the barrier regularizer needs the msd plant with the position-diagonal layout");

  rethrow_as_config("closed_loop", [&] { closed_loop_for(*this).validate(); });
  if (closed_loop.fixed_gains.size() != 0) check_size(closed_loop.fixed_gains, lay.size(), "closed_loop.fixed_gains");
  if (closed_loop.x_ref_init.size() != 0) check_size(closed_loop.x_ref_init, n, "closed_loop.x_ref_init");
  for (const auto& d : closed_loop.disturbances) check_size(d.offset, m, "closed_loop.disturbances.offset");
  rethrow_as_config("reference", [&] { reference.validate(n); });
  check_size(x0, n, "x0");
  rethrow_as_config("frequency_grid", [&] { grid.validate(); });
}

std::string config_to_json(const ExperimentConfig& c) {
  ordered j;
  j["name"] = c.name;
  j["seed"] = c.seed;

  ordered plant;
  plant["kind"] = plant_kind_name(c.plant);
  if (c.plant == PlantKind::Msd) {
    plant["mass"] = c.msd.mass;
    plant["damping"] = c.msd.damping;
    plant["stiffness"] = c.msd.stiffness;
  } else {
    const auto& p = c.manipulator;
    plant["m1"] = p.m1;
    plant["m2"] = p.m2;
    plant["l1"] = p.l1;
    plant["l2"] = p.l2;
    plant["lc1"] = p.lc1;
    plant["lc2"] = p.lc2;
    plant["i1"] = p.i1;
    plant["i2"] = p.i2;
    plant["gravity"] = p.gravity;
    plant["b_alpha"] = p.b_alpha;
    plant["b_beta"] = p.b_beta;
    plant["joint_damping"] = p.joint_damping;
  }
  j["plant"] = plant;

  const auto& d = c.dataset.domain;
  j["domain"] = {{"dt", d.dt},
                 {"epsilon", d.epsilon},
                 {"state_lower", vec_json(d.state.lower)},
                 {"state_upper", vec_json(d.state.upper)},
                 {"input_lower", vec_json(d.input.lower)},
                 {"input_upper", vec_json(d.input.upper)}};
  j["dataset"] = {{"n_data", c.dataset.n_data}, {"n_phys", c.dataset.n_phys}};
  j["network"] = {{"hidden", c.hidden}};
  const auto& t = c.train;
  j["train"] = {{"lambda", t.lambda},
                {"optimizer", t.optimizer},
                {"iterations", t.iterations},
                {"lbfgs_iterations", t.lbfgs_iterations},
                {"lbfgs_memory", t.lbfgs_memory},
                {"regen_interval", t.regen_interval},
                {"validation_interval", t.validation_interval},
                {"lr_start", t.lr_start},
                {"lr_end", t.lr_end},
                {"beta1", t.beta1},
                {"beta2", t.beta2},
                {"eps", t.adam_eps},
                {"batch_data", t.batch_data},
                {"batch_phys", t.batch_phys}};
  const auto& v = c.validation;
  j["validation"] = {{"trajectories", v.trajectories},
                     {"duration", v.duration},
                     {"substeps", v.substeps},
                     {"initial_fraction", v.initial_fraction},
                     {"require_inside", v.require_inside}};
  j["model"] = {{"kind", c.model.kind}, {"path", c.model.path}};
  const auto& o = c.optimizer;
  j["controller"] = {{"q", vec_json(c.q_diag)},
                     {"q_terminal", vec_json(c.q_terminal_diag)},
                     {"r", vec_json(c.r_diag)},
                     {"mu", c.mu},
                     {"layout", c.layout},
                     {"gain_lower", vec_json(c.gain_bounds.lower)},
                     {"gain_upper", vec_json(c.gain_bounds.upper)},
                     {"input_lower", vec_json(c.input_box.lower)},
                     {"input_upper", vec_json(c.input_box.upper)},
                     {"initial_gains", vec_json(c.initial_gains)},
                     {"regularizer", regularizer_name(c.regularizer)},
                     {"lr", o.adam.lr},
                     {"beta1", o.adam.beta1},
                     {"beta2", o.adam.beta2},
                     {"eps", o.adam.eps},
                     {"max_iters", o.max_iters},
                     {"tol", o.tol},
                     {"barrier",
                      {{"rho_start", o.barrier.rho_start},
                       {"rho_end", o.barrier.rho_end},
                       {"iterations", o.barrier.iterations}}}};
  const auto& l = c.closed_loop;
  ordered dist = ordered::array();
  for (const auto& x : l.disturbances) dist.push_back({{"time", x.time}, {"offset", vec_json(x.offset)}});
  j["closed_loop"] = {{"t_final", l.t_final},
                      {"substeps", l.substeps},
                      {"mode", gain_mode_name(l.mode)},
                      {"fixed_gains", vec_json(l.fixed_gains)},
                      {"freeze_time", l.freeze_time},
                      {"noise_level", l.noise_level},
                      {"disturbances", dist},
                      {"saturate", l.saturate},
                      {"saturate_after_freeze", l.saturate_after_freeze},
                      {"anti_windup", l.anti_windup},
                      {"horizon", l.horizon},
                      {"n_quad", l.n_quad},
                      {"divergence_threshold", l.divergence_threshold},
                      {"x_ref_init", vec_json(l.x_ref_init)},
                      {"reference_preview", l.reference_preview},
                      {"warm_start", l.warm_start},
                      {"random_init", l.random_init}};
  ordered steps = ordered::array();
  for (const auto& [time, value] : c.reference.steps) steps.push_back({{"time", time}, {"value", vec_json(value)}});
  j["reference"] = {{"initial", vec_json(c.reference.initial)}, {"steps", steps}};
  j["x0"] = vec_json(c.x0);
  j["frequency_grid"] = {{"omega_min", c.grid.omega_min}, {"omega_max", c.grid.omega_max}, {"points", c.grid.points}};
  j["output"] = {{"dir", c.out_dir}};
  return j.dump(2) + "\n";
}

DatasetConfig dataset_for(const ExperimentConfig& c) {
  DatasetConfig d = c.dataset;
  d.seed = c.seed;
  return d;
}

TrainConfig train_for(const ExperimentConfig& c) {
  TrainConfig t = c.train;
  t.seed = derive_seed(c.seed, 102);
  return t;
}

ValidationConfig validation_for(const ExperimentConfig& c) {
  ValidationConfig v = c.validation;
  v.seed = derive_seed(c.seed, 103);
  return v;
}

std::uint64_t init_seed_for(const ExperimentConfig& c) { return derive_seed(c.seed, 101); }

ClosedLoopConfig closed_loop_for(const ExperimentConfig& c) {
  ClosedLoopConfig l = c.closed_loop;
  l.dt = c.dataset.domain.dt;
  l.seed = c.seed;
  return l;
}

ControllerSetup controller_for(const ExperimentConfig& c) {
  const int n = c.state_dim(), m = c.input_dim();
  ControllerSetup s;
  s.weights.q = c.q_diag.asDiagonal();
  s.weights.q_t = c.q_terminal_diag.asDiagonal();
  s.weights.r = c.r_diag.asDiagonal();
  s.weights.mu = c.mu;
  s.layout = GainLayout::from_name(c.layout, m, n);
  s.gain_bounds = c.gain_bounds;
  s.input_box = c.input_box;
  s.regularizer = c.regularizer;
  s.options = c.optimizer;
  s.initial_gains = c.initial_gains;
  if (c.plant == PlantKind::Msd) s.msd = c.msd;
  s.grid = c.grid;
  return s;
}

std::unique_ptr<Plant> make_plant(const ExperimentConfig& c) {
  if (c.plant == PlantKind::Msd) return std::make_unique<MsdPlant>(c.msd);
  return std::make_unique<ManipulatorPlant>(c.manipulator);
}

NetworkSpec network_spec_for(const ExperimentConfig& c) {
  NetworkSpec s;
  const int n = c.state_dim(), m = c.input_dim();
  s.widths.push_back(1 + n + m);
  for (int w : c.hidden) s.widths.push_back(w);
  s.widths.push_back(n);
  return s;
}

std::string default_output_root() {
  const char* env = std::getenv("PINNPID_OUT_ROOT");
  return env != nullptr && *env != '\0' ? std::string(env) : std::string("runs");
}

std::string output_dir_for(const ExperimentConfig& c, const std::string& out_override) {
  if (!out_override.empty()) return out_override;
  if (!c.out_dir.empty()) return c.out_dir;
  return default_output_root() + "/" + c.name + "-seed" + std::to_string(c.seed);
}

}  // namespace pinnpid
