#include "pinnpid/datagen.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace pinnpid;

namespace {

SamplingDomain msd_domain() {
  SamplingDomain d;
  d.state = Box((Vec(2) << -2.0, -1.5).finished(), (Vec(2) << 2.0, 1.5).finished());
  d.input = Box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  return d;
}

}  // namespace

TEST_CASE("Latin hypercube puts exactly one point in each stratum (property)") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const int n = 3 + static_cast<int>(seed * 7 % 40);
    const Box box((Vec(3) << -1.0, 0.0, 10.0).finished(), (Vec(3) << 1.0, 0.5, 12.0).finished());
    const Mat pts = lhs_sample(box, n, seed);
    REQUIRE(pts.cols() == n);
    for (int k = 0; k < 3; ++k) {
      std::set<int> strata;
      for (int j = 0; j < n; ++j) {
        const double frac = (pts(k, j) - box.lower[k]) / (box.upper[k] - box.lower[k]);
        CHECK(frac >= 0.0);
        CHECK(frac < 1.0);
        strata.insert(static_cast<int>(std::floor(frac * n)));
      }
      CHECK(static_cast<int>(strata.size()) == n);
    }
  }
}

TEST_CASE("Latin hypercube is reproducible from the seed") {
  const Box box(Vec::Zero(2), Vec::Ones(2));
  CHECK(lhs_sample(box, 17, 4) == lhs_sample(box, 17, 4));
  CHECK(lhs_sample(box, 17, 4) != lhs_sample(box, 17, 5));
  CHECK_THROWS_AS(lhs_sample(box, 0, 1), DomainError);
}

TEST_CASE("reference integration step never exceeds 1e-3 of the horizon") {
  for (double t : {1e-6, 0.01, 0.1, 0.2, 0.25}) {
    const int steps = reference_steps(t, 0.25);
    CHECK(steps >= 1);
    CHECK(t / steps <= 0.25e-3 * (1.0 + 1e-12));
  }
  CHECK(reference_steps(0.25, 0.25) == 1000);
}

TEST_CASE("data targets are fine RK4 solutions inside the domain") {
  const MsdPlant plant;
  DatasetConfig cfg;
  cfg.n_data = 50;
  cfg.n_phys = 20;
  cfg.domain = msd_domain();
  const auto data = build_data_set(plant, cfg);
  REQUIRE(data.size() == 50u);
  for (const auto& s : data) {
    CHECK(s.t > 0.0);
    CHECK(s.t <= cfg.domain.horizon());
    CHECK(cfg.domain.state.contains(s.x0));
    CHECK(cfg.domain.input.contains(s.u));
    // Independent reference: 4000 RK4 steps.
    const Vec ref = rk4_integrate(plant, s.x0, s.u, s.t, 4000);
    CHECK((ref - s.xf).norm() < 1e-12);
  }
}

TEST_CASE("collocation points cover [0, dt + epsilon]") {
  DatasetConfig cfg;
  cfg.n_phys = 400;
  cfg.domain = msd_domain();
  const auto phys = build_phys_set(cfg);
  REQUIRE(phys.size() == 400u);
  double tmin = 1.0, tmax = 0.0;
  for (const auto& s : phys) {
    tmin = std::min(tmin, s.t);
    tmax = std::max(tmax, s.t);
    CHECK(cfg.domain.state.contains(s.x));
  }
  CHECK(tmin >= 0.0);
  CHECK(tmin < 0.01);
  CHECK(tmax <= cfg.domain.horizon());
  CHECK(tmax > cfg.domain.horizon() - 0.01);
}

TEST_CASE("datasets are deterministic per seed and written as CSV") {
  const MsdPlant plant;
  DatasetConfig cfg;
  cfg.n_data = 10;
  cfg.domain = msd_domain();
  std::ostringstream a, b;
  write_data_csv(a, build_data_set(plant, cfg));
  write_data_csv(b, build_data_set(plant, cfg));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("t,", 0) == 0);
  const std::string meta = dataset_metadata_json(cfg, "msd", DataSetStats{});
  CHECK(meta.find("\"seed\"") != std::string::npos);
}

TEST_CASE("domain dimensions must match the plant") {
  const ManipulatorPlant arm;
  DatasetConfig cfg;
  cfg.domain = msd_domain();
  CHECK_THROWS_AS(build_data_set(arm, cfg), DomainError);
}
