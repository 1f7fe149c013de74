#pragma once

#include "pinnpid/common.hpp"

#include <cmath>

namespace pinnpid {

struct AdamConfig {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;
};

/// First/second moment estimates and the step counter.
struct AdamState {
  Vec m;
  Vec v;
  int iter = 0;

  void reset(Eigen::Index size) {
    m.setZero(size);
    v.setZero(size);
    iter = 0;
  }
};

/// One bias-corrected Adam update of `params` in place. The counter is
/// incremented before the bias correction. Throws on a non-finite gradient.
inline void adam_step(AdamState& s, const Vec& grad, Vec& params, const AdamConfig& c) {
  if (grad.size() != params.size()) throw DomainError("adam_step: gradient/parameter size mismatch");
  if (!grad.allFinite()) throw DomainError("adam_step: non-finite gradient");
  if (s.m.size() != params.size()) s.reset(params.size());
  ++s.iter;
  s.m = c.beta1 * s.m + (1.0 - c.beta1) * grad;
  s.v = c.beta2 * s.v + (1.0 - c.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(c.beta1, s.iter);
  const double bc2 = 1.0 - std::pow(c.beta2, s.iter);
  params.array() -= c.lr * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + c.eps);
}

}  // namespace pinnpid
