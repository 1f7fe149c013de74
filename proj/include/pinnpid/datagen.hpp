#pragma once

#include "pinnpid/common.hpp"
#include "pinnpid/dynamics.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pinnpid {

/// Latin hypercube design: column j is one point of the box. Each dimension is
/// cut into n equal strata holding exactly one point; strata are permuted
/// independently per dimension and the offset inside a stratum is uniform.
Mat lhs_sample(const Box& box, int n, std::uint64_t seed);

/// Short-horizon sampling domain: t in [0, dt + epsilon], x in `state`, u in `input`.
struct SamplingDomain {
  double dt = 0.2;
  double epsilon = 0.05;
  Box state;
  Box input;

  [[nodiscard]] double horizon() const { return dt + epsilon; }
  void validate() const;
};

struct DatasetConfig {
  int n_data = 2000;
  int n_phys = 10000;
  SamplingDomain domain;
  std::uint64_t seed = 1;

  void validate() const;
};

struct DataSample {
  double t = 0.0;  ///< in (0, dt + epsilon]
  Vec x0;
  Vec xf;
  Vec u;
};

struct PhysSample {
  double t = 0.0;  ///< in [0, dt + epsilon]
  Vec x;
  Vec u;
};

struct DataSetStats {
  int resampled = 0;  ///< rollouts that blew up and were redrawn
};

/// RK4 step count used to produce x_f for an elapsed time t; the step never
/// exceeds 1e-3 * horizon.
int reference_steps(double t, double horizon);

std::vector<DataSample> build_data_set(const Plant& plant, const DatasetConfig& config, DataSetStats* stats = nullptr);
std::vector<PhysSample> build_phys_set(const DatasetConfig& config);

void write_data_csv(std::ostream& os, const std::vector<DataSample>& data);
void write_phys_csv(std::ostream& os, const std::vector<PhysSample>& phys);
/// Metadata sidecar (config echo, seed, generator name) as JSON text.
std::string dataset_metadata_json(const DatasetConfig& config, const std::string& plant_name, const DataSetStats& stats);

}  // namespace pinnpid
