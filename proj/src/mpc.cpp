#include "pinnpid/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace pinnpid {

namespace {

constexpr double kSwitchTol = 1e-9;

int step_index(double t, double dt) { return static_cast<int>(std::lround(t / dt)); }

}  // namespace

Vec ReferenceSignal::at(double t) const {
  const Vec* active = &initial;
  for (const auto& [s, v] : steps) {
    if (t >= s - kSwitchTol)
      active = &v;
    else
      break;
  }
  return *active;
}

std::vector<double> ReferenceSignal::switch_times() const {
  std::vector<double> out;
  for (const auto& s : steps) out.push_back(s.first);
  return out;
}

void ReferenceSignal::validate(int n) const {
  if (initial.size() != n) throw DomainError("reference dimension does not match the plant");
  double last = 0.0;
  for (const auto& [s, v] : steps) {
    if (!(s > last)) throw DomainError("reference switch times must be positive and strictly increasing");
    if (v.size() != n) throw DomainError("reference dimension does not match the plant");
    last = s;
  }
}

GainMode gain_mode_from_name(const std::string& name) {
  if (name == "adaptive") return GainMode::Adaptive;
  if (name == "fixed") return GainMode::Fixed;
  if (name == "adaptive-frozen") return GainMode::AdaptiveFrozen;
  throw DomainError("unknown gain mode '" + name + "' (expected adaptive, fixed or adaptive-frozen)");
}

std::string gain_mode_name(GainMode m) {
  switch (m) {
    case GainMode::Adaptive:
      return "adaptive";
    case GainMode::Fixed:
      return "fixed";
    case GainMode::AdaptiveFrozen:
      return "adaptive-frozen";
  }
  return "adaptive";
}

int ClosedLoopConfig::steps() const { return step_index(t_final, dt); }

void ClosedLoopConfig::validate() const {
  if (!(dt > 0.0)) throw DomainError("closed loop: dt must be positive");
  if (!(t_final > 0.0)) throw DomainError("closed loop: t_final must be positive");
  if (std::abs(t_final / dt - std::round(t_final / dt)) > 1e-9 * std::max(1.0, t_final / dt))
    throw DomainError("closed loop: t_final must be a multiple of dt");
  if (substeps < 1) throw DomainError("closed loop: substeps must be >= 1");
  if (!(noise_level >= 0.0)) throw DomainError("closed loop: noise level must be >= 0");
  if (horizon < 1) throw DomainError("closed loop: horizon must be >= 1");
  if (n_quad < 2) throw DomainError("closed loop: n_quad must be >= 2");
  if (!(divergence_threshold > 0.0)) throw DomainError("closed loop: divergence threshold must be positive");
  if (mode == GainMode::Fixed && fixed_gains.size() == 0) throw DomainError("fixed gain mode needs fixed_gains");
  for (const auto& d : disturbances)
    if (!(d.time >= 0.0)) throw DomainError("disturbance time must be >= 0");
}

Vec apply_measurement_noise(const Vec& x, double level, Rng& rng) {
  if (!(level >= 0.0)) throw DomainError("noise level must be >= 0");
  Vec out = x;
  if (level == 0.0) return out;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] *= 1.0 + level * rng.normal();
  return out;
}

TrajectoryLog run_closed_loop(const Plant& plant, const TransitionModel& model, const ClosedLoopConfig& config,
                              const ControllerSetup& controller, const ReferenceSignal& reference, const Vec& x0,
                              TraceSink trace) {
  config.validate();
  const int n = plant.state_dim(), m = plant.input_dim();
  if (model.state_dim() != n || model.input_dim() != m) throw DomainError("model and plant dimensions differ");
  if (model.horizon() + 1e-12 < config.dt) throw DomainError("model horizon is shorter than the sampling interval");
  if (x0.size() != n) throw DomainError("initial state dimension mismatch");
  reference.validate(n);
  controller.weights.validate(n, m);
  const GainLayout& layout = controller.layout;
  if (controller.gain_bounds.dim() != layout.size()) throw DomainError("gain bounds do not match the layout");
  if (config.mode == GainMode::Fixed && config.fixed_gains.size() != layout.size())
    throw DomainError("fixed gains do not match the layout");
  for (const auto& d : config.disturbances)
    if (d.offset.size() != m) throw DomainError("disturbance dimension mismatch");

  const double dt = config.dt;
  const int steps = config.steps();
  const Vec xref_init = config.x_ref_init.size() == 0 ? Vec::Zero(n) : config.x_ref_init;
  if (xref_init.size() != n) throw DomainError("x_ref_init dimension mismatch");
  const bool stability = controller.msd.has_value() && layout.size() == 3 && m == 1;
  const int freeze_step = step_index(config.freeze_time, dt);

  Rng noise_rng(derive_seed(config.seed, 21));
  Rng init_rng(derive_seed(config.seed, 22));

  TrajectoryLog log;
  log.state_dim = n;
  log.input_dim = m;
  log.dt = dt;
  log.gain_labels = layout.labels();
  log.has_stability = stability;

  SegmentProblem prob;
  prob.model = &model;
  prob.weights = controller.weights;
  prob.layout = layout;
  prob.bounds = controller.gain_bounds;
  prob.input_box = controller.input_box;
  prob.saturate = config.saturate;
  prob.anti_windup = config.anti_windup;
  prob.dt = dt;
  prob.n_quad = config.n_quad;
  prob.regularizer = controller.regularizer;
  prob.msd = controller.msd;

  Vec theta;
  if (config.mode == GainMode::Fixed)
    theta = config.fixed_gains;
  else if (controller.initial_gains.size() > 0)
    theta = controller.initial_gains;
  else
    theta = controller.gain_bounds.center();
  if (theta.size() != layout.size()) throw DomainError("initial gains do not match the layout");

  if (trace.os != nullptr) write_trace_header(*trace.os, log.gain_labels);

  Vec x_true = x0;
  ErrorState e;
  ErrorState integ_source;  // carries the model-propagated integral into the next step
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    const Vec x_meas = apply_measurement_noise(x_true, config.noise_level, noise_rng);
    const Vec xref = reference.at(t);
    if (k == 0) {
      e = error_init(model, x_meas, xref, xref_init, Vec::Zero(m), dt);
    } else {
      ErrorState next;
      next.prop = xref - x_meas;
      next.integ = integ_source.integ;
      next.deri = (next.prop - e.prop) / dt;
      e = std::move(next);
    }

    LogRow row;
    row.t = t;
    row.x_meas = x_meas;
    row.x_true = x_true;
    row.x_ref = xref;

    const bool optimise = config.mode == GainMode::Adaptive ||
                          (config.mode == GainMode::AdaptiveFrozen && k <= freeze_step);
    if (optimise) {
      prob.x = x_meas;
      prob.error = e;
      prob.x_ref.clear();
      for (int j = 0; j <= config.horizon; ++j) prob.x_ref.push_back(config.reference_preview ? reference.at(t + j * dt) : xref);
      Vec start = theta;
      if (config.random_init) {
        start.resize(layout.size());
        for (int i = 0; i < layout.size(); ++i)
          start[i] = init_rng.uniform(controller.gain_bounds.lower[i], controller.gain_bounds.upper[i]);
      } else if (!config.warm_start && k > 0) {
        start = controller.gain_bounds.center();
      }
      const SegmentResult seg = optimize_segment(prob, start, controller.options, trace.os != nullptr);
      if (trace.os != nullptr) write_trace_csv(*trace.os, seg.trace, k);
      theta = seg.theta;
      row.opt_cost = seg.cost;
      row.opt_iters = seg.iterations;
    }

    const bool frozen = config.mode == GainMode::AdaptiveFrozen && k > freeze_step;
    const bool saturate = config.saturate && (config.saturate_after_freeze || !frozen);
    const Mat f = layout.assemble(theta);
    const ControlOutput co = control_input(f, e, controller.input_box, saturate);
    row.u = co.u;
    row.gains = theta;
    row.cost = stage_cost(e.prop, co.u, theta, controller.weights, dt, Regularizer::Plain);
    if (stability) {
      const StabilityReport rep = analyze(frozen_loop(*controller.msd, theta), controller.grid);
      row.g = rep.g;
      row.margin = rep.margin;
      if (rep.crossover) row.crossover = *rep.crossover;
    }
    log.rows.push_back(std::move(row));

    Vec u_plant = co.u;
    for (const auto& d : config.disturbances)
      if (k >= step_index(d.time, dt)) u_plant += d.offset;

    try {
      const Vec x_next = rk4_integrate(plant, x_true, u_plant, dt, config.substeps);
      if (!(x_next.lpNorm<Eigen::Infinity>() <= config.divergence_threshold))
        throw DomainError("state left the divergence bound");
      x_true = x_next;
    } catch (const DomainError&) {
      log.diverged = true;
      log.diverged_at = (k + 1) * dt;
      break;
    }

    // integral channel for the next step, propagated through the model from the measurement
    WindupInfo windup{f, co.saturation};
    const bool use_windup = config.anti_windup && saturate;
    const Vec xref_next = reference.at((k + 1) * dt);
    integ_source = error_update(model, xref, xref_next, x_meas, co.u, e, dt, config.n_quad,
                                use_windup ? &windup : nullptr)
                       .next;
  }
  log.final_state = x_true;
  return log;
}

std::optional<double> settling_time(const std::vector<double>& times, const std::vector<double>& errors,
                                    double step_size, double band_fraction, double t_start, double t_end) {
  if (!(band_fraction > 0.0)) throw DomainError("settling_time: band fraction must be positive");
  if (times.size() != errors.size()) throw DomainError("settling_time: times and errors differ in length");
  const double thr = band_fraction * std::abs(step_size);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] >= t_start - kSwitchTol && times[i] < t_end - kSwitchTol) idx.push_back(i);
  if (idx.empty()) return std::nullopt;
  std::ptrdiff_t last_out = -1;
  for (std::size_t j = 0; j < idx.size(); ++j)
    if (std::abs(errors[idx[j]]) > thr) last_out = static_cast<std::ptrdiff_t>(j);
  if (last_out < 0) return 0.0;
  if (static_cast<std::size_t>(last_out) + 1 == idx.size()) return std::nullopt;
  const std::size_t a = idx[last_out], b = idx[last_out + 1];
  const double ea = std::abs(errors[a]), eb = std::abs(errors[b]);
  const double s = (ea - thr) / (ea - eb);
  return times[a] + s * (times[b] - times[a]) - t_start;
}

std::optional<double> settling_time(const TrajectoryLog& log, int coordinate, double band_fraction) {
  if (log.rows.empty()) return std::nullopt;
  if (coordinate < 0 || coordinate >= log.state_dim) throw DomainError("settling_time: coordinate out of range");
  // last switch visible in the log
  std::size_t start = 0;
  for (std::size_t i = 1; i < log.rows.size(); ++i)
    if (log.rows[i].x_ref[coordinate] != log.rows[i - 1].x_ref[coordinate]) start = i;
  const double step = start == 0 ? log.rows[0].x_ref[coordinate] - log.rows[0].x_true[coordinate]
                                 : log.rows[start].x_ref[coordinate] - log.rows[start - 1].x_ref[coordinate];
  std::vector<double> times, errors;
  for (const auto& r : log.rows) {
    times.push_back(r.t);
    errors.push_back(r.x_ref[coordinate] - r.x_true[coordinate]);
  }
  if (step == 0.0) return std::nullopt;
  return settling_time(times, errors, step, band_fraction, log.rows[start].t);
}

double integrated_abs_error(const TrajectoryLog& log, int coordinate, double t_from) {
  if (coordinate < 0 || coordinate >= log.state_dim) throw DomainError("integrated_abs_error: coordinate out of range");
  double s = 0.0;
  for (const auto& r : log.rows)
    if (r.t >= t_from - kSwitchTol) s += std::abs(r.x_ref[coordinate] - r.x_true[coordinate]) * log.dt;
  return s;
}

}  // namespace pinnpid
