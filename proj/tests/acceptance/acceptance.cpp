// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.
//
// Criteria 4-7 train models and run closed loops from the shipped configs
// (PINNPID_CONFIG_DIR); criterion 8 drives the command-line tool
// (PINNPID_CLI) twice and compares the written files byte for byte.

#include "pinnpid/analysis.hpp"
#include "pinnpid/config.hpp"
#include "pinnpid/diffnet.hpp"
#include "pinnpid/dynamics.hpp"
#include "pinnpid/io.hpp"
#include "pinnpid/pipeline.hpp"
#include "pinnpid/platform.hpp"
#include "pinnpid/random.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace pinnpid;

namespace {

// -- pinned tolerances -------------------------------------------------------

constexpr int kAutodiffNetworks = 100;
constexpr double kAutodiffRelTol = 1e-5;
constexpr double kAutodiffSeconds = 60.0;

constexpr double kRk4RatioLo = 14.0;
constexpr double kRk4RatioHi = 18.0;

constexpr int kRouthTriples = 1000;
constexpr double kRouthDeadband = 1e-9;
constexpr double kRouthAnchor = 2.74;  // (1.2 + 0.5)(1.2 + 1) - 1 * 1.0

constexpr double kStepMaeTol = 5e-3;
constexpr double kRolloutMaeTol = 2e-2;
constexpr double kTrainSeconds = 600.0;

constexpr double kSettleBand = 0.02;  // m, absolute
constexpr double kSettleWithin = 5.0;  // s after each switch
constexpr double kServoSeconds = 1800.0;

constexpr double kBoundedZ = 5.0;  // m

constexpr double kTailFraction = 0.2;
constexpr double kGravityRelTol = 0.10;
constexpr double kUprightAbsTol = 0.02;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string config_path(const std::string& name) { return std::string(PINNPID_CONFIG_DIR) + "/" + name + ".json"; }

double rel_err(const Vec& a, const Vec& b) {
  const double scale = std::max({a.lpNorm<Eigen::Infinity>(), b.lpNorm<Eigen::Infinity>(), 1e-6});
  return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

// -- 1: autodiff against central differences --------------------------------

Outcome check_autodiff() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_param = 0.0, worst_input = 0.0, worst_rate = 0.0, worst_rate_param = 0.0;
  for (int k = 0; k < kAutodiffNetworks; ++k) {
    Rng rng(derive_seed(2024, static_cast<std::uint64_t>(k)));
    const int n = 1 + static_cast<int>(rng.below(4));
    const int m = 1 + static_cast<int>(rng.below(2));
    const int depth = 1 + static_cast<int>(rng.below(4));
    NetworkSpec spec;
    spec.widths.push_back(1 + n + m);
    for (int l = 0; l < depth; ++l) spec.widths.push_back(2 + static_cast<int>(rng.below(15)));
    spec.widths.push_back(n);

    Vec lo(1 + n + m), hi(1 + n + m);
    lo[0] = 0.0;
    hi[0] = 0.25;
    for (int i = 1; i < 1 + n + m; ++i) {
      lo[i] = -rng.uniform(0.5, 3.0);
      hi[i] = rng.uniform(0.5, 3.0);
    }
    Network net = Network::glorot(spec, InputScaling{lo, hi}, rng.next());
    Vec p = net.params();
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] += 0.2 * rng.normal();
    net.set_params(p);

    auto draw = [&](int dim, int offset) {
      Vec v(dim);
      for (int i = 0; i < dim; ++i) v[i] = rng.uniform(lo[offset + i], hi[offset + i]);
      return v;
    };
    const double t = rng.uniform(0.0, 0.25);
    const Vec x = draw(n, 1);
    const Vec u = draw(m, 1 + n);
    Vec cot(n);
    for (int i = 0; i < n; ++i) cot[i] = rng.normal();

    // Parameter gradient of cot . phi and of cot . dphi/dt.
    const Vec g_out = net.grad_params({Sample{t, x, u}}, cot);
    ForwardPass pass;
    net.forward_batch(net.pack(t, x, u), pass, true);
    Vec g_rate = Vec::Zero(p.size());
    const Mat zero_cot = Mat::Zero(n, 1);
    const Mat rate_cot = cot;
    net.backward_batch(pass, zero_cot, &rate_cot, &g_rate, nullptr);

    Vec fd_out(p.size()), fd_rate(p.size());
    Network probe = net;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(p[i]));
      Vec pp = p, pm = p;
      pp[i] += h;
      pm[i] -= h;
      probe.set_params(pp);
      const double fp = cot.dot(probe.forward(t, x, u)), rp = cot.dot(probe.time_derivative(t, x, u));
      probe.set_params(pm);
      const double fm = cot.dot(probe.forward(t, x, u)), rm = cot.dot(probe.time_derivative(t, x, u));
      fd_out[i] = (fp - fm) / (2.0 * h);
      fd_rate[i] = (rp - rm) / (2.0 * h);
    }
    worst_param = std::max(worst_param, rel_err(g_out, fd_out));
    worst_rate_param = std::max(worst_rate_param, rel_err(g_rate, fd_rate));

    // Input pullbacks.
    const InputPullback pb = net.grad_inputs(t, x, u, cot);
    Vec fd_x(n), fd_u(m);
    for (int i = 0; i < n; ++i) {
      const double h = 1e-6;
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      fd_x[i] = (cot.dot(net.forward(t, xp, u)) - cot.dot(net.forward(t, xm, u))) / (2.0 * h);
    }
    for (int i = 0; i < m; ++i) {
      const double h = 1e-6;
      Vec up = u, um = u;
      up[i] += h;
      um[i] -= h;
      fd_u[i] = (cot.dot(net.forward(t, x, up)) - cot.dot(net.forward(t, x, um))) / (2.0 * h);
    }
    worst_input = std::max({worst_input, rel_err(pb.dx, fd_x), rel_err(pb.du, fd_u)});

    // Forward-mode time derivative.
    const double h = 1e-6;
    const Vec fd_t = (net.forward(t + h, x, u) - net.forward(t - h, x, u)) / (2.0 * h);
    worst_rate = std::max(worst_rate, rel_err(net.time_derivative(t, x, u), fd_t));
  }
  const double secs = seconds_since(t0);
  const double worst = std::max({worst_param, worst_rate_param, worst_input, worst_rate});
  Outcome o;
  o.pass = worst <= kAutodiffRelTol && secs < kAutodiffSeconds;
  o.detail = "worst relative error params " + sci(worst_param) + ", params via d/dt " + sci(worst_rate_param) +
             ", inputs " + sci(worst_input) + ", d/dt " + sci(worst_rate) + " (tol " + sci(kAutodiffRelTol) +
             "), " + sci(secs) + " s";
  return o;
}

// -- 2: RK4 global error ratio ------------------------------------------------

Outcome check_rk4_order() {
  const MsdParams p;
  const MsdPlant plant(p);
  const Vec x0 = (Vec(2) << -0.7, 0.0).finished();
  const Vec u = Vec::Zero(1);
  // Underdamped free response: x(t) = e^{-zeta w t} (A cos wd t + B sin wd t).
  const double wn = p.natural_frequency(), zeta = p.damping_ratio();
  const double sigma = zeta * wn, wd = wn * std::sqrt(1.0 - zeta * zeta);
  const double a = x0[0], b = (x0[1] + sigma * x0[0]) / wd;
  const double t = 4.0;
  const double e = std::exp(-sigma * t);
  Vec exact(2);
  exact[0] = e * (a * std::cos(wd * t) + b * std::sin(wd * t));
  exact[1] = e * ((-sigma * a + wd * b) * std::cos(wd * t) + (-sigma * b - wd * a) * std::sin(wd * t));

  const auto f = [&](const Vec& x, const Vec& uu) { return plant.rhs(x, uu); };
  const double err_h = (rk4_integrate(f, x0, u, t, 40) - exact).norm();
  const double err_h2 = (rk4_integrate(f, x0, u, t, 80) - exact).norm();
  const double ratio = err_h / err_h2;
  return {ratio >= kRk4RatioLo && ratio <= kRk4RatioHi,
          "error(h=0.1) / error(h=0.05) = " + sci(ratio) + " (want [" + sci(kRk4RatioLo) + ", " + sci(kRk4RatioHi) +
              "])"};
}

// -- 3: Routh-Hurwitz against polynomial roots --------------------------------

Outcome check_routh_roots() {
  const MsdParams p;
  Rng rng(7);
  int compared = 0, mismatches = 0;
  for (int k = 0; k < kRouthTriples; ++k) {
    const FrozenLoop loop{p, rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0)};
    const double g = routh_hurwitz(loop);
    if (std::abs(g) <= kRouthDeadband) continue;
    // Companion matrix of s^3 + c2 s^2 + c1 s + c0.
    const double c2 = (p.damping + loop.kd) / p.mass, c1 = (p.stiffness + loop.kp) / p.mass, c0 = loop.ki / p.mass;
    Eigen::Matrix3d comp;
    comp << -c2, -c1, -c0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
    const auto roots = comp.eigenvalues();
    const bool roots_stable = (roots.real().array() < 0.0).all();
    ++compared;
    if (roots_stable != (g > 0.0)) ++mismatches;
  }
  const double anchor = routh_hurwitz(FrozenLoop{p, 1.2, 1.0, 1.2});
  const bool anchor_ok = std::abs(anchor - kRouthAnchor) < 1e-12;
  return {mismatches == 0 && anchor_ok, std::to_string(mismatches) + " sign mismatches in " +
                                            std::to_string(compared) + " triples; g(1.2, 1.0, 1.2) = " +
                                            format_double(anchor) + " (want 2.74)"};
}

// -- 4: MSD surrogate quality -------------------------------------------------

struct TrainedModel {
  ExperimentConfig config;
  TrainOutcome outcome;
};

TrainedModel train_from(const std::string& name) {
  TrainedModel t;
  t.config = load_config(config_path(name));
  t.outcome = train_model(t.config);
  return t;
}

Outcome check_msd_quality(const TrainedModel& m) {
  const auto& r = m.outcome.report;
  const double step = r.step_mae.maxCoeff(), roll = r.rollout_mae.maxCoeff();
  const auto& c = m.config;
  const bool scale_ok = c.dataset.n_data <= 2000 && c.dataset.n_phys <= 10000 && c.train.iterations <= 20000;
  Outcome o;
  o.pass = scale_ok && step <= kStepMaeTol && roll <= kRolloutMaeTol && m.outcome.seconds < kTrainSeconds;
  o.detail = "step MAE " + sci(step) + " (tol " + sci(kStepMaeTol) + "), " + sci(c.validation.duration) +
             " s rollout MAE " + sci(roll) + " (tol " + sci(kRolloutMaeTol) + "), trained in " +
             sci(m.outcome.seconds) + " s";
  return o;
}

// -- 5: adaptive servo against the fixed baseline -----------------------------

std::vector<double> position_errors(const TrajectoryLog& log, int coord, std::vector<double>& times) {
  std::vector<double> err;
  times.clear();
  for (const auto& row : log.rows) {
    times.push_back(row.t);
    err.push_back(row.x_ref[coord] - row.x_true[coord]);
  }
  return err;
}

Outcome check_servo(const TransitionModel& model) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig adaptive = load_config(config_path("msd_servo"));
  ExperimentConfig fixed = adaptive;
  fixed.closed_loop.mode = GainMode::Fixed;
  const TrajectoryLog a = run_experiment(adaptive, model);
  const TrajectoryLog f = run_experiment(fixed, model);
  const double secs = seconds_since(t0);

  std::vector<double> times;
  const std::vector<double> err = position_errors(a, 0, times);
  const std::vector<double> switches = adaptive.reference.switch_times();
  bool settled = !a.diverged && !switches.empty();
  std::string settle_text;
  for (std::size_t i = 0; i < switches.size(); ++i) {
    const double end = i + 1 < switches.size() ? switches[i + 1] : adaptive.closed_loop.t_final;
    const auto ts = settling_time(times, err, 1.0, kSettleBand, switches[i], end);
    settled = settled && ts && *ts <= kSettleWithin;
    settle_text += (i ? ", " : "") + (ts ? sci(*ts) : std::string("never")) + " s after " + sci(switches[i]) + " s";
  }
  const double iae_a = integrated_abs_error(a, 0), iae_f = integrated_abs_error(f, 0);
  Outcome o;
  o.pass = settled && iae_a < iae_f && secs < kServoSeconds;
  o.detail = "settled within " + sci(kSettleBand) + " m: " + settle_text + " (limit " + sci(kSettleWithin) +
             " s); IAE adaptive " + sci(iae_a) + " vs fixed " + sci(iae_f) + "; " + sci(secs) + " s";
  return o;
}

// -- 6: stability-constrained runs ---------------------------------------------

Outcome check_barrier(const TransitionModel& model) {
  const TrajectoryLog servo = run_experiment(load_config(config_path("msd_servo_barrier")), model);
  double margin_min = INFINITY, g_min = INFINITY;
  for (const auto& row : servo.rows) {
    margin_min = std::min(margin_min, row.margin);
    g_min = std::min(g_min, row.g);
  }
  const bool servo_ok = servo.has_stability && !servo.diverged && margin_min > 0.0 && g_min > 0.0;

  const ExperimentConfig dist_cfg = load_config(config_path("msd_disturbance_barrier"));
  const TrajectoryLog dist = run_experiment(dist_cfg, model);
  double z_max = 0.0;
  for (const auto& row : dist.rows) z_max = std::max(z_max, std::abs(row.x_true[0]));
  const bool bounded = !dist.diverged && z_max < kBoundedZ;

  // Unconstrained counterpart: a frozen gain set with g < 0 must end in divergence.
  const ExperimentConfig plain_cfg = load_config(config_path("msd_disturbance"));
  const TrajectoryLog plain = run_experiment(plain_cfg, model);
  double frozen_g = NAN;
  for (const auto& row : plain.rows) {
    if (row.t > plain_cfg.closed_loop.freeze_time + 1e-9) {
      frozen_g = row.g;
      break;
    }
  }
  const bool implication = !(frozen_g < 0.0) || plain.diverged;

  Outcome o;
  o.pass = servo_ok && bounded && implication;
  o.detail = "barrier servo min margin " + sci(margin_min) + ", min g " + sci(g_min) +
             "; barrier disturbance max |z| " + sci(z_max) + " m (limit " + sci(kBoundedZ) +
             "); unconstrained frozen g " + sci(frozen_g) + ", diverged " + (plain.diverged ? "yes" : "no");
  if (!(frozen_g < 0.0)) o.detail += " (frozen gains stable, implication holds trivially)";
  return o;
}

// -- 7: manipulator steady-state input -------------------------------------------

struct TailInput {
  double worst_dev = 0.0;  ///< max over the tail of |u - u_target|
  double target_norm = 0.0;
  bool diverged = false;
};

TailInput tail_input(const std::string& run_name, const TrainedModel& m) {
  const ExperimentConfig cfg = load_config(config_path(run_name));
  const PinnModel model(m.outcome.result.net, cfg.dataset.domain.dt);
  const TrajectoryLog log = run_experiment(cfg, model);
  const Vec q_ref = cfg.reference.initial.head(2);
  const Vec target = gravity_compensation_input(cfg.manipulator, q_ref);
  TailInput t;
  t.diverged = log.diverged;
  t.target_norm = target.norm();
  const std::size_t n = log.rows.size();
  const auto first = static_cast<std::size_t>(std::floor((1.0 - kTailFraction) * static_cast<double>(n)));
  for (std::size_t k = first; k < n; ++k) {
    const Vec d = log.rows[k].u - target;
    t.worst_dev = std::max(t.worst_dev, d.norm());
  }
  return t;
}

Outcome check_manipulator() {
  const TrainedModel horizontal = train_from("manipulator_model_horizontal");
  const TrainedModel upright = train_from("manipulator_model_upright");
  const TailInput h = tail_input("manipulator_desk", horizontal);
  const TailInput up = tail_input("manipulator_desk_upright", upright);
  const double rel = h.worst_dev / h.target_norm;
  Outcome o;
  o.pass = !h.diverged && !up.diverged && rel <= kGravityRelTol && up.worst_dev <= kUprightAbsTol;
  o.detail = "gravity-loaded reference: tail input within " + sci(100.0 * rel) + "% of compensation (limit " +
             sci(100.0 * kGravityRelTol) + "%); upright: tail |u| <= " + sci(up.worst_dev) + " (limit " +
             sci(kUprightAbsTol) + "); training " + sci(horizontal.outcome.seconds + upright.outcome.seconds) + " s";
  return o;
}

// -- 8: determinism of the command-line run ---------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome check_determinism(const Network& msd_net) {
  const fs::path dir = fs::temp_directory_path() / ("pinnpid-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const fs::path model = dir / "msd.pinn";
  save_network(model.string(), msd_net);

  auto run = [&](const std::string& out) {
    const std::string cmd = std::string("\"") + PINNPID_CLI + "\" run --config \"" + config_path("msd_servo") +
                            "\" --model \"" + model.string() + "\" --out \"" + (dir / out).string() +
                            "\" --no-plots > /dev/null";
    return std::system(cmd.c_str());
  };
  const int rc_a = run("a"), rc_b = run("b");
  Outcome o;
  if (rc_a != 0 || rc_b != 0) {
    o.detail = "run exited with " + std::to_string(rc_a) + " / " + std::to_string(rc_b);
  } else {
    const std::string csv_a = slurp(dir / "a" / "trajectory.csv"), csv_b = slurp(dir / "b" / "trajectory.csv");
    const std::string sum_a = slurp(dir / "a" / "summary.json"), sum_b = slurp(dir / "b" / "summary.json");
    o.pass = !csv_a.empty() && csv_a == csv_b && sum_a == sum_b;
    o.detail = "two runs: trajectory.csv " + std::string(csv_a == csv_b ? "identical" : "DIFFERENT") + " (" +
               std::to_string(csv_a.size()) + " bytes), summary.json " + (sum_a == sum_b ? "identical" : "DIFFERENT");
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return o;
}

Outcome guarded(const std::function<Outcome()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  tune_allocator();
  int failures = 0;
  auto report = [&](int id, const std::string& name, const Outcome& o) {
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << o.detail << std::endl;
  };

  report(1, "autodiff vs central differences", guarded(check_autodiff));
  report(2, "RK4 order on the mass-spring-damper", guarded(check_rk4_order));
  report(3, "Routh-Hurwitz sign vs cubic roots", guarded(check_routh_roots));

  std::optional<TrainedModel> msd;
  Outcome train_failure;
  try {
    msd = train_from("msd_model");
  } catch (const std::exception& e) {
    train_failure = {false, std::string("training failed: ") + e.what()};
  }
  if (msd) {
    const PinnModel model(msd->outcome.result.net, msd->config.dataset.domain.dt);
    report(4, "MSD surrogate accuracy", guarded([&] { return check_msd_quality(*msd); }));
    report(5, "MSD adaptive servo tracking", guarded([&] { return check_servo(model); }));
    report(6, "stability-constrained gains", guarded([&] { return check_barrier(model); }));
  } else {
    report(4, "MSD surrogate accuracy", train_failure);
    report(5, "MSD adaptive servo tracking", train_failure);
    report(6, "stability-constrained gains", train_failure);
  }
  report(7, "manipulator steady-state input", guarded(check_manipulator));
  if (msd) {
    report(8, "run determinism", guarded([&] { return check_determinism(msd->outcome.result.net); }));
  } else {
    report(8, "run determinism", train_failure);
  }

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
