#include "pinnpid/pinn.hpp"
#include "pinnpid/transition.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace pinnpid;

namespace {

SamplingDomain msd_domain() {
  SamplingDomain d;
  d.state = Box((Vec(2) << -2.0, -1.5).finished(), (Vec(2) << 2.0, 1.5).finished());
  d.input = Box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  return d;
}

Network small_net(std::uint64_t seed) {
  const SamplingDomain d = msd_domain();
  return Network::glorot(NetworkSpec{{4, 6, 6, 2}}, InputScaling::for_domain(d.horizon(), d.state, d.input), seed);
}

ExactLinearModel exact_msd(double dt) {
  Mat a(2, 2), b(2, 1);
  a << 0.0, 1.0, -1.0, -0.5;
  b << 0.0, 1.0;
  return ExactLinearModel(a, b, dt, dt + 0.05);
}

}  // namespace

TEST_CASE("composite loss equals the hand-assembled mean squared terms") {
  const MsdPlant plant;
  const Network net = small_net(3);
  DatasetConfig cfg;
  cfg.n_data = 12;
  cfg.n_phys = 9;
  cfg.domain = msd_domain();
  const auto data = build_data_set(plant, cfg);
  const auto phys = build_phys_set(cfg);
  double ld = 0.0, lp = 0.0;
  for (const auto& s : data) ld += (net.forward(s.t, s.x0, s.u) - s.xf).squaredNorm();
  for (const auto& s : phys) lp += physics_residual(net, plant, s).squaredNorm();
  ld /= 12.0;
  lp /= 9.0;
  const LossReport r = loss(net, plant, data, phys, 0.3);
  CHECK(r.data == doctest::Approx(ld).epsilon(1e-12));
  CHECK(r.phys == doctest::Approx(lp).epsilon(1e-12));
  CHECK(r.total == doctest::Approx(ld + 0.3 * lp).epsilon(1e-12));
}

TEST_CASE("loss gradient matches central differences") {
  const ManipulatorPlant plant;
  SamplingDomain d;
  d.state = Box(Vec::Constant(4, -1.0), Vec::Constant(4, 1.0));
  d.input = Box(Vec::Constant(2, -0.5), Vec::Constant(2, 0.5));
  DatasetConfig cfg;
  cfg.n_data = 8;
  cfg.n_phys = 8;
  cfg.domain = d;
  const PackedData data = pack_data(build_data_set(plant, cfg));
  const PackedPhys phys = pack_phys(build_phys_set(cfg));
  Network net = Network::glorot(NetworkSpec{{7, 5, 4}}, InputScaling::for_domain(d.horizon(), d.state, d.input), 8);
  Vec grad;
  loss_and_grad(net, plant, data, phys, 0.7, &grad);
  const Vec p = net.params();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double h = 1e-6;
    Vec pp = p, pm = p;
    pp[i] += h;
    pm[i] -= h;
    net.set_params(pp);
    const double fp = loss_and_grad(net, plant, data, phys, 0.7, nullptr).total;
    net.set_params(pm);
    const double fm = loss_and_grad(net, plant, data, phys, 0.7, nullptr).total;
    worst = std::max(worst, std::abs((fp - fm) / (2 * h) - grad[i]));
  }
  CHECK(worst < 1e-6 * std::max(1.0, grad.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("cosine schedule endpoints and midpoint") {
  CHECK(cosine_lr(0, 101, 1e-2, 1e-4) == doctest::Approx(1e-2));
  CHECK(cosine_lr(100, 101, 1e-2, 1e-4) == doctest::Approx(1e-4));
  CHECK(cosine_lr(50, 101, 1e-2, 1e-4) == doctest::Approx(0.5 * (1e-2 + 1e-4)));
}

TEST_CASE("exact linear model validates with zero error") {
  const MsdPlant plant;
  const SamplingDomain d = msd_domain();
  ValidationConfig vc;
  vc.trajectories = 4;
  vc.duration = 2.0;
  const ValidationSet set = make_validation_set(plant, d, vc);
  REQUIRE(set.inputs.size() == 4u);
  for (const auto& traj : set.states)
    for (const auto& x : traj) CHECK(d.state.contains(x));
  const ValidationReport r = validate(exact_msd(d.dt), set);
  CHECK(r.step_mae.maxCoeff() < 1e-9);
  CHECK(r.rollout_mae.maxCoeff() < 1e-9);
  CHECK(single_step_mse(exact_msd(d.dt), set) < 1e-18);
}

TEST_CASE("exact linear model pullback matches differences") {
  const ExactLinearModel model = exact_msd(0.2);
  const Vec times = (Vec(3) << 0.05, 0.1, 0.2).finished();
  const Vec x = (Vec(2) << 0.3, -0.2).finished(), u = Vec::Constant(1, 0.4);
  ModelTape tape;
  const Mat out = model.predict(times, x, u, &tape);
  Mat cot(2, 3);
  cot << 1, -2, 0.5, 0.3, 1, -1;
  const InputPullback pb = model.pullback(tape, cot);
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fd = ((model.predict(times, xp, u, nullptr) - model.predict(times, xm, u, nullptr)).cwiseProduct(cot)).sum() / (2 * h);
    CHECK(pb.dx[i] == doctest::Approx(fd).epsilon(1e-7));
  }
  Vec up = u, um = u;
  up[0] += h;
  um[0] -= h;
  const double fdu = ((model.predict(times, x, up, nullptr) - model.predict(times, x, um, nullptr)).cwiseProduct(cot)).sum() / (2 * h);
  CHECK(pb.du[0] == doctest::Approx(fdu).epsilon(1e-7));
  // dt step equals the last column
  CHECK((model.step(x, u) - out.col(2)).norm() < 1e-15);
}

TEST_CASE("a short Adam run lowers the loss and keeps the best checkpoint") {
  const MsdPlant plant;
  DatasetConfig cfg;
  cfg.n_data = 200;
  cfg.n_phys = 400;
  cfg.domain = msd_domain();
  TrainConfig tc;
  tc.iterations = 300;
  tc.validation_interval = 50;
  tc.lr_start = 1e-2;
  tc.lr_end = 1e-3;
  ValidationConfig vc;
  vc.trajectories = 3;
  vc.duration = 1.0;
  const ValidationSet val = make_validation_set(plant, cfg.domain, vc);
  const Network init = small_net(5);
  const double before = loss(init, plant, build_data_set(plant, cfg), build_phys_set(cfg), 1.0).total;
  const TrainResult r = train(init, plant, cfg, tc, &val);
  const double after = loss(r.net, plant, build_data_set(plant, cfg), build_phys_set(cfg), 1.0).total;
  CHECK(after < 0.5 * before);
  CHECK(!r.history.empty());
  CHECK(r.best_val_mse == doctest::Approx(single_step_mse(PinnModel(r.net, 0.2), val)));
  std::ostringstream os;
  write_history_csv(os, r.history);
  CHECK(os.str().rfind("iter,", 0) == 0);
}

TEST_CASE("training configuration is checked") {
  TrainConfig tc;
  tc.optimizer = "sgd";
  CHECK_THROWS_AS(tc.validate(), DomainError);
  tc.optimizer = "adam";
  tc.lambda = 0.0;
  CHECK_THROWS_AS(tc.validate(), DomainError);
  tc.lambda = 1.0;
  tc.iterations = 300;
  tc.regen_interval = 200;
  CHECK_THROWS_AS(tc.validate(), DomainError);
}
