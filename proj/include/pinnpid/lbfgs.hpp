#pragma once

#include "pinnpid/common.hpp"

#include <functional>
#include <string>

namespace pinnpid {

struct LbfgsOptions {
  int memory = 10;
  int max_iters = 100;
  double grad_tol = 1e-12;  ///< stop when max |g| falls below this
  double c1 = 1e-4;         ///< sufficient decrease
  double c2 = 0.9;          ///< curvature (strong Wolfe)
  int max_line_search = 25;
};

struct LbfgsResult {
  Vec x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  std::string status;
};

/// Objective returning f(x) and writing the gradient into its second argument.
using Objective = std::function<double(const Vec&, Vec&)>;
/// Called after every accepted iteration; returning false stops the run.
using IterationCallback = std::function<bool(int iter, const Vec& x, double f)>;

/// Limited-memory BFGS with the two-loop recursion and a strong-Wolfe line
/// search (bracketing plus cubic-interpolation zoom).
LbfgsResult lbfgs_minimize(const Objective& fun, Vec x0, const LbfgsOptions& options,
                           const IterationCallback& callback = {});

}  // namespace pinnpid
