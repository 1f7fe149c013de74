#include "pinnpid/pinn.hpp"
#include "pinnpid/lbfgs.hpp"
#include "pinnpid/platform.hpp"
#include "pinnpid/random.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

namespace pinnpid {

PackedData pack_data(const std::vector<DataSample>& data) {
  if (data.empty()) throw DomainError("data set is empty");
  const Eigen::Index n = data.front().x0.size(), m = data.front().u.size();
  PackedData p;
  p.inputs.resize(1 + n + m, data.size());
  p.targets.resize(n, data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    p.inputs(0, i) = data[i].t;
    p.inputs.col(i).segment(1, n) = data[i].x0;
    p.inputs.col(i).segment(1 + n, m) = data[i].u;
    p.targets.col(i) = data[i].xf;
  }
  return p;
}

PackedPhys pack_phys(const std::vector<PhysSample>& phys) {
  if (phys.empty()) throw DomainError("physics set is empty");
  const Eigen::Index n = phys.front().x.size(), m = phys.front().u.size();
  PackedPhys p;
  p.inputs.resize(1 + n + m, phys.size());
  for (std::size_t i = 0; i < phys.size(); ++i) {
    p.inputs(0, i) = phys[i].t;
    p.inputs.col(i).segment(1, n) = phys[i].x;
    p.inputs.col(i).segment(1 + n, m) = phys[i].u;
  }
  return p;
}

Vec physics_residual(const Network& net, const Plant& plant, const PhysSample& s) {
  ForwardPass pass;
  net.forward_batch(net.pack(s.t, s.x, s.u), pass, true);
  return pass.output_rate().col(0) - plant.rhs(pass.output().col(0), s.u);
}

LossReport loss(const Network& net, const Plant& plant, const std::vector<DataSample>& data,
                const std::vector<PhysSample>& phys, double lambda) {
  return loss_and_grad(net, plant, pack_data(data), pack_phys(phys), lambda, nullptr);
}

LossReport loss_and_grad(const Network& net, const Plant& plant, const PackedData& data, const PackedPhys& phys,
                         double lambda, Vec* grad) {
  const int n = net.state_dim(), m = net.control_dim();
  if (plant.state_dim() != n || plant.input_dim() != m) throw DomainError("network and plant dimensions differ");
  const double nd = static_cast<double>(data.inputs.cols());
  const double np = static_cast<double>(phys.inputs.cols());
  if (grad != nullptr) grad->setZero(net.params().size());

  LossReport r;
  ForwardPass pass;
  net.forward_batch(data.inputs, pass, false);
  const Mat diff = pass.output() - data.targets;
  r.data = diff.squaredNorm() / nd;
  if (grad != nullptr) net.backward_batch(pass, (2.0 / nd) * diff, nullptr, grad, nullptr);

  net.forward_batch(phys.inputs, pass, true);
  const Mat U = phys.inputs.bottomRows(m);
  const Mat residual = pass.output_rate() - plant.rhs_batch(pass.output(), U);
  r.phys = residual.squaredNorm() / np;
  if (grad != nullptr) {
    const Mat rate_cot = (2.0 * lambda / np) * residual;
    const Mat out_cot = -plant.state_vjp_batch(pass.output(), U, rate_cot);
    net.backward_batch(pass, out_cot, &rate_cot, grad, nullptr);
  }
  r.total = r.data + lambda * r.phys;
  return r;
}

// -- validation -------------------------------------------------------------------

ValidationSet rollout_truth(const Plant& plant, const std::vector<Vec>& x0, const std::vector<std::vector<Vec>>& inputs,
                            double dt, int substeps) {
  if (x0.size() != inputs.size()) throw DomainError("one input sequence per initial state required");
  ValidationSet set;
  set.dt = dt;
  set.inputs = inputs;
  for (std::size_t r = 0; r < x0.size(); ++r) {
    const auto traj = simulate_zoh(plant, x0[r], inputs[r], dt, substeps);
    std::vector<Vec> states;
    for (std::size_t i = 0; i < traj.size(); i += substeps) states.push_back(traj[i]);
    set.states.push_back(std::move(states));
  }
  return set;
}

ValidationSet make_validation_set(const Plant& plant, const SamplingDomain& domain, const ValidationConfig& config) {
  domain.validate();
  if (config.trajectories < 1 || config.substeps < 1) throw DomainError("validation needs trajectories and substeps >= 1");
  const double steps_real = config.duration / domain.dt;
  const int steps = static_cast<int>(std::lround(steps_real));
  if (steps < 1 || std::abs(steps_real - steps) > 1e-9) throw DomainError("validation horizon must be a multiple of dt");

  Rng rng(config.seed);
  const Vec c = domain.state.center();
  const Vec half = 0.5 * config.initial_fraction * (domain.state.upper - domain.state.lower);
  ValidationSet set;
  set.dt = domain.dt;
  for (int r = 0; r < config.trajectories; ++r) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 1000) throw DomainError("could not draw a validation trajectory inside the state box");
      Vec x0(c.size());
      for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] = rng.uniform(c[i] - half[i], c[i] + half[i]);
      std::vector<Vec> us(steps);
      for (auto& u : us) {
        u.resize(domain.input.dim());
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.uniform(domain.input.lower[i], domain.input.upper[i]);
      }
      std::vector<Vec> traj;
      try {
        traj = simulate_zoh(plant, x0, us, domain.dt, config.substeps);
      } catch (const DomainError&) {
        continue;
      }
      bool inside = true;
      if (config.require_inside)
        for (const auto& x : traj) inside = inside && domain.state.contains(x);
      if (!inside) continue;
      std::vector<Vec> states;
      for (std::size_t i = 0; i < traj.size(); i += config.substeps) states.push_back(traj[i]);
      set.inputs.push_back(std::move(us));
      set.states.push_back(std::move(states));
      break;
    }
  }
  return set;
}

ValidationReport validate(const TransitionModel& model, const ValidationSet& set) {
  if (set.states.empty()) throw DomainError("empty validation set");
  const int n = model.state_dim();
  ValidationReport rep;
  rep.step_mae.setZero(n);
  rep.step_mse.setZero(n);
  rep.rollout_mae.setZero(n);
  rep.rollout_mse.setZero(n);
  std::size_t count = 0;
  for (std::size_t r = 0; r < set.states.size(); ++r) {
    const auto& xs = set.states[r];
    const auto& us = set.inputs[r];
    Vec pred = xs.front();
    for (std::size_t k = 0; k < us.size(); ++k) {
      const Vec one = model.step(xs[k], us[k]) - xs[k + 1];
      rep.step_mae += one.cwiseAbs();
      rep.step_mse += one.cwiseAbs2();
      pred = model.step(pred, us[k]);
      const Vec roll = pred - xs[k + 1];
      rep.rollout_mae += roll.cwiseAbs();
      rep.rollout_mse += roll.cwiseAbs2();
      ++count;
    }
  }
  const double inv = 1.0 / static_cast<double>(count);
  rep.step_mae *= inv;
  rep.step_mse *= inv;
  rep.rollout_mae *= inv;
  rep.rollout_mse *= inv;
  return rep;
}

double single_step_mse(const TransitionModel& model, const ValidationSet& set) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < set.states.size(); ++r) {
    for (std::size_t k = 0; k < set.inputs[r].size(); ++k) {
      acc += (model.step(set.states[r][k], set.inputs[r][k]) - set.states[r][k + 1]).squaredNorm();
      ++count;
    }
  }
  return acc / (static_cast<double>(count) * model.state_dim());
}

// -- training ----------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(lambda > 0.0)) throw DomainError("train.lambda must be positive");
  if (optimizer != "adam" && optimizer != "lbfgs" && optimizer != "adam-then-lbfgs")
    throw DomainError("train.optimizer must be adam, lbfgs or adam-then-lbfgs");
  if (iterations < 0 || lbfgs_iterations < 0) throw DomainError("iteration counts must be nonnegative");
  if (validation_interval < 1) throw DomainError("train.validation_interval must be >= 1");
  if (regen_interval < 0) throw DomainError("train.regen_interval must be nonnegative");
  if (regen_interval > 0 && iterations % regen_interval != 0)
    throw DomainError("train.regen_interval must divide train.iterations");
  if (!(lr_start > 0.0 && lr_end > 0.0)) throw DomainError("learning rates must be positive");
  if (batch_data < 0 || batch_phys < 0) throw DomainError("batch sizes must be nonnegative");
  if (lbfgs_memory < 1) throw DomainError("train.lbfgs_memory must be >= 1");
}

double cosine_lr(int iter, int total, double start, double end) {
  if (total <= 1) return start;
  const double pi = std::acos(-1.0);
  return end + 0.5 * (start - end) * (1.0 + std::cos(pi * iter / (total - 1)));
}

namespace {

/// Draws minibatch columns by walking a reshuffled permutation.
class BatchCursor {
 public:
  BatchCursor(Eigen::Index total, int batch, std::uint64_t seed) : order_(total), batch_(batch), rng_(seed) {
    std::iota(order_.begin(), order_.end(), Eigen::Index(0));
    shuffle();
  }

  [[nodiscard]] bool full() const { return batch_ <= 0 || batch_ >= Eigen::Index(order_.size()); }

  Mat take(const Mat& src) {
    Mat out(src.rows(), batch_);
    for (int j = 0; j < batch_; ++j) {
      if (pos_ == order_.size()) shuffle();
      out.col(j) = src.col(order_[pos_++]);
    }
    return out;
  }

 private:
  void shuffle() {
    for (std::size_t i = order_.size() - 1; i > 0; --i) std::swap(order_[i], order_[rng_.below(i + 1)]);
    pos_ = 0;
  }

  std::vector<Eigen::Index> order_;
  Eigen::Index batch_;
  Rng rng_;
  std::size_t pos_ = 0;
};

struct Trainer {
  const Plant& plant;
  const DatasetConfig& data_config;
  const TrainConfig& cfg;
  const ValidationSet* validation;
  std::ostream* progress;

  Network net;
  PackedData data;
  PackedPhys phys;
  Mat data_stacked;  // inputs over targets, for drawing minibatches
  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  Vec best_params;

  void regenerate(int round) {
    DatasetConfig dc = data_config;
    if (round > 0) dc.seed = derive_seed(data_config.seed, 1000 + std::uint64_t(round));
    data = pack_data(build_data_set(plant, dc));
    phys = pack_phys(build_phys_set(dc));
    data_stacked.resize(data.inputs.rows() + data.targets.rows(), data.inputs.cols());
    data_stacked << data.inputs, data.targets;
  }

  void fail(int iter, const std::string& what) {
    std::ostringstream msg;
    msg << "training diverged at iteration " << iter << ": " << what;
    if (!result.history.empty()) msg << " (last recorded L_total " << result.history.back().loss.total << ")";
    if (!cfg.snapshot_path.empty()) {
      save_network(cfg.snapshot_path, net);
      msg << "; parameters saved to " << cfg.snapshot_path;
    }
    throw DomainError(msg.str());
  }

  void record(int iter) {
    HistoryRow row;
    row.iter = iter;
    row.loss = loss_and_grad(net, plant, data, phys, cfg.lambda, nullptr);
    if (!std::isfinite(row.loss.total)) fail(iter, "non-finite loss");
    if (validation != nullptr) {
      const PinnModel model(net, validation->dt);
      const ValidationReport rep = validate_steps(model);
      row.val_mse = rep.step_mse.mean();
      row.val_mae = rep.step_mae.mean();
      if (row.val_mse < best) {
        best = row.val_mse;
        best_params = net.params();
        result.best_iter = iter;
      }
    }
    result.history.push_back(row);
    if (progress != nullptr) {
      *progress << "iter " << iter << "  L_data " << row.loss.data << "  L_phys " << row.loss.phys << "  L_total "
                << row.loss.total;
      if (validation != nullptr) *progress << "  val_mse " << row.val_mse;
      *progress << '\n';
    }
  }

  /// Single-step errors only; rollouts are left to the final report.
  ValidationReport validate_steps(const TransitionModel& model) const {
    ValidationReport rep;
    const int n = model.state_dim();
    rep.step_mae.setZero(n);
    rep.step_mse.setZero(n);
    std::size_t count = 0;
    for (std::size_t r = 0; r < validation->states.size(); ++r) {
      for (std::size_t k = 0; k < validation->inputs[r].size(); ++k) {
        const Vec d = model.step(validation->states[r][k], validation->inputs[r][k]) - validation->states[r][k + 1];
        rep.step_mae += d.cwiseAbs();
        rep.step_mse += d.cwiseAbs2();
        ++count;
      }
    }
    rep.step_mae /= double(count);
    rep.step_mse /= double(count);
    return rep;
  }

  void run_adam(int total, int& iter) {
    AdamState state;
    state.reset(net.params().size());
    BatchCursor dcur(data.inputs.cols(), cfg.batch_data, derive_seed(cfg.seed, 11));
    BatchCursor pcur(phys.inputs.cols(), cfg.batch_phys, derive_seed(cfg.seed, 12));
    Vec grad, params = net.params();
    for (int i = 0; i < total; ++i, ++iter) {
      if (cfg.regen_interval > 0 && i > 0 && i % cfg.regen_interval == 0) regenerate(i / cfg.regen_interval);
      if (iter % cfg.validation_interval == 0) record(iter);
      LossReport r;
      if (dcur.full() && pcur.full()) {
        r = loss_and_grad(net, plant, data, phys, cfg.lambda, &grad);
      } else {
        PackedData bd;
        if (dcur.full()) {
          bd = data;
        } else {
          const Mat pick = dcur.take(data_stacked);
          bd.inputs = pick.topRows(data.inputs.rows());
          bd.targets = pick.bottomRows(data.targets.rows());
        }
        const PackedPhys bp{pcur.full() ? phys.inputs : pcur.take(phys.inputs)};
        r = loss_and_grad(net, plant, bd, bp, cfg.lambda, &grad);
      }
      if (!std::isfinite(r.total) || !grad.allFinite()) fail(iter, "non-finite loss or gradient");
      const AdamConfig ac{cosine_lr(i, total, cfg.lr_start, cfg.lr_end), cfg.beta1, cfg.beta2, cfg.adam_eps};
      adam_step(state, grad, params, ac);
      net.set_params(params);
    }
  }

  void run_lbfgs(int total, int& iter) {
    if (total == 0) return;
    LbfgsOptions opt;
    opt.memory = cfg.lbfgs_memory;
    opt.max_iters = total;
    Network probe = net;
    const Objective fun = [&](const Vec& p, Vec& g) {
      if (!p.allFinite()) return std::numeric_limits<double>::infinity();
      probe.set_params(p);
      const LossReport r = loss_and_grad(probe, plant, data, phys, cfg.lambda, &g);
      return std::isfinite(r.total) && g.allFinite() ? r.total : std::numeric_limits<double>::infinity();
    };
    const int start = iter;
    const IterationCallback cb = [&](int it, const Vec& p, double) {
      iter = start + it;
      net.set_params(p);
      if (iter % cfg.validation_interval == 0) record(iter);
      return true;
    };
    const LbfgsResult r = lbfgs_minimize(fun, net.params(), opt, cb);
    net.set_params(r.x);
    iter = start + r.iterations;
  }
};

}  // namespace

TrainResult train(const Network& init, const Plant& plant, const DatasetConfig& data_config, const TrainConfig& config,
                  const ValidationSet* validation, std::ostream* progress) {
  config.validate();
  tune_allocator();
  Trainer t{plant, data_config, config, validation, progress, init, {}, {}, {}, {},
            std::numeric_limits<double>::infinity(), {}};
  const int adam_iters = config.optimizer == "lbfgs" ? 0 : config.iterations;
  const int lbfgs_iters = config.optimizer == "lbfgs"             ? config.iterations
                          : config.optimizer == "adam-then-lbfgs" ? config.lbfgs_iterations
                                                                  : 0;
  if (adam_iters + lbfgs_iters == 0) {
    t.result.net = init;
    return t.result;
  }
  t.regenerate(0);
  int iter = 0;
  t.run_adam(adam_iters, iter);
  t.run_lbfgs(lbfgs_iters, iter);
  t.record(iter);

  t.result.net = t.net;
  if (validation != nullptr && t.best_params.size() > 0) {
    t.result.net.set_params(t.best_params);
    t.result.best_val_mse = t.best;
  } else {
    t.result.best_iter = iter;
  }
  return t.result;
}

void write_history_csv(std::ostream& os, const std::vector<HistoryRow>& history) {
  os << "iter,L_data,L_phys,L_total,val_mse,val_mae\n" << std::setprecision(10);
  for (const auto& h : history) {
    os << h.iter << ',' << h.loss.data << ',' << h.loss.phys << ',' << h.loss.total << ',';
    if (std::isfinite(h.val_mse)) os << h.val_mse;
    os << ',';
    if (std::isfinite(h.val_mae)) os << h.val_mae;
    os << '\n';
  }
}

}  // namespace pinnpid
