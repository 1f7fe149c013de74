#include "pinnpid/datagen.hpp"
#include "pinnpid/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace pinnpid {

namespace {

std::vector<int> permutation(int n, Rng& rng) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(p[i], p[rng.below(std::uint64_t(i) + 1)]);
  return p;
}

/// LHS over the unit cube: strata[d][j] is the stratum of point j in dimension d.
struct UnitDesign {
  std::vector<std::vector<int>> strata;
  Mat points;  // dim x n, in [0, 1)
};

UnitDesign unit_lhs(int dim, int n, Rng& rng) {
  UnitDesign d;
  d.strata.resize(dim);
  d.points.resize(dim, n);
  for (int k = 0; k < dim; ++k) {
    d.strata[k] = permutation(n, rng);
    for (int j = 0; j < n; ++j) d.points(k, j) = (d.strata[k][j] + rng.uniform01()) / n;
  }
  return d;
}

Vec to_box(const Box& box, const Eigen::Ref<const Vec>& unit) {
  return box.lower + (box.upper - box.lower).cwiseProduct(unit);
}

}  // namespace

Mat lhs_sample(const Box& box, int n, std::uint64_t seed) {
  if (n < 1) throw DomainError("lhs_sample: n must be >= 1");
  box.validate("lhs_sample box", true);
  Rng rng(seed);
  const UnitDesign d = unit_lhs(static_cast<int>(box.dim()), n, rng);
  Mat out(box.dim(), n);
  for (int j = 0; j < n; ++j) out.col(j) = to_box(box, d.points.col(j));
  return out;
}

void SamplingDomain::validate() const {
  if (!(dt > 0.0)) throw DomainError("sampling dt must be positive");
  if (!(epsilon > 0.0)) throw DomainError("sampling epsilon must be positive");
  state.validate("state box", true);
  input.validate("input box", true);
}

void DatasetConfig::validate() const {
  if (n_data < 1 || n_phys < 1) throw DomainError("dataset sizes must be >= 1");
  domain.validate();
}

int reference_steps(double t, double horizon) {
  const double h_max = 1e-3 * horizon;
  return std::max(1, static_cast<int>(std::ceil(t / h_max - 1e-9)));
}

std::vector<DataSample> build_data_set(const Plant& plant, const DatasetConfig& config, DataSetStats* stats) {
  config.validate();
  const auto& dom = config.domain;
  const int n = plant.state_dim(), m = plant.input_dim();
  if (dom.state.dim() != n || dom.input.dim() != m) throw DomainError("dataset domain does not match plant dimensions");
  const double H = dom.horizon();

  Rng rng(derive_seed(config.seed, 1));
  Rng redraw(derive_seed(config.seed, 2));
  const int dim = 1 + n + m;
  UnitDesign design = unit_lhs(dim, config.n_data, rng);

  std::vector<DataSample> out(config.n_data);
  DataSetStats local;
  for (int j = 0; j < config.n_data; ++j) {
    for (int attempt = 0;; ++attempt) {
      const Vec p = design.points.col(j);
      DataSample s;
      s.t = H * (1.0 - p[0]);  // maps [0, 1) onto (0, H]
      s.x0 = to_box(dom.state, p.segment(1, n));
      s.u = to_box(dom.input, p.segment(1 + n, m));
      try {
        s.xf = rk4_integrate(plant, s.x0, s.u, s.t, reference_steps(s.t, H));
        out[j] = std::move(s);
        break;
      } catch (const DomainError&) {
        if (attempt >= 100) throw;
        ++local.resampled;
        // new offsets inside the same strata
        for (int k = 0; k < dim; ++k)
          design.points(k, j) = (design.strata[k][j] + redraw.uniform01()) / config.n_data;
      }
    }
  }
  if (stats) *stats = local;
  return out;
}

std::vector<PhysSample> build_phys_set(const DatasetConfig& config) {
  config.validate();
  const auto& dom = config.domain;
  const int n = static_cast<int>(dom.state.dim()), m = static_cast<int>(dom.input.dim());
  Rng rng(derive_seed(config.seed, 3));
  const UnitDesign design = unit_lhs(1 + n + m, config.n_phys, rng);
  std::vector<PhysSample> out(config.n_phys);
  for (int j = 0; j < config.n_phys; ++j) {
    const Vec p = design.points.col(j);
    out[j].t = dom.horizon() * p[0];
    out[j].x = to_box(dom.state, p.segment(1, n));
    out[j].u = to_box(dom.input, p.segment(1 + n, m));
  }
  return out;
}

void write_data_csv(std::ostream& os, const std::vector<DataSample>& data) {
  if (data.empty()) return;
  const Eigen::Index n = data.front().x0.size(), m = data.front().u.size();
  os << 't';
  for (Eigen::Index i = 0; i < n; ++i) os << ",x0_" << i + 1;
  for (Eigen::Index i = 0; i < n; ++i) os << ",xf_" << i + 1;
  for (Eigen::Index i = 0; i < m; ++i) os << ",u" << i + 1;
  os << '\n' << std::setprecision(17);
  for (const auto& s : data) {
    os << s.t;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << s.x0[i];
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << s.xf[i];
    for (Eigen::Index i = 0; i < m; ++i) os << ',' << s.u[i];
    os << '\n';
  }
}

void write_phys_csv(std::ostream& os, const std::vector<PhysSample>& phys) {
  if (phys.empty()) return;
  const Eigen::Index n = phys.front().x.size(), m = phys.front().u.size();
  os << 't';
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i + 1;
  for (Eigen::Index i = 0; i < m; ++i) os << ",u" << i + 1;
  os << '\n' << std::setprecision(17);
  for (const auto& s : phys) {
    os << s.t;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << s.x[i];
    for (Eigen::Index i = 0; i < m; ++i) os << ',' << s.u[i];
    os << '\n';
  }
}

std::string dataset_metadata_json(const DatasetConfig& config, const std::string& plant_name, const DataSetStats& stats) {
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::ordered_json j;
  j["plant"] = plant_name;
  j["generator"] = "mt19937_64";
  j["design"] = "latin-hypercube (t, x, u jointly)";
  j["seed"] = config.seed;
  j["n_data"] = config.n_data;
  j["n_phys"] = config.n_phys;
  j["dt"] = config.domain.dt;
  j["epsilon"] = config.domain.epsilon;
  j["state_lower"] = vec(config.domain.state.lower);
  j["state_upper"] = vec(config.domain.state.upper);
  j["input_lower"] = vec(config.domain.input.lower);
  j["input_upper"] = vec(config.domain.input.upper);
  j["resampled_rollouts"] = stats.resampled;
  return j.dump(2);
}

}  // namespace pinnpid
