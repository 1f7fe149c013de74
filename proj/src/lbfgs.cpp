#include "pinnpid/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace pinnpid {

namespace {

struct LinePoint {
  double a;
  double f;
  double d;  // directional derivative
};

/// Minimiser of the cubic through two points with slopes, safeguarded into [lo, hi].
double cubic_min(const LinePoint& p, const LinePoint& q, double lo, double hi) {
  const double d1 = p.d + q.d - 3.0 * (p.f - q.f) / (p.a - q.a);
  const double disc = d1 * d1 - p.d * q.d;
  double a = 0.5 * (lo + hi);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), q.a - p.a);
    const double cand = q.a - (q.a - p.a) * (q.d + d2 - d1) / (q.d - p.d + 2.0 * d2);
    if (std::isfinite(cand)) a = cand;
  }
  const double margin = 0.1 * (hi - lo);
  return std::clamp(a, lo + margin, hi - margin);
}

class LineSearch {
 public:
  LineSearch(const Objective& fun, const Vec& x, const Vec& dir, double f0, double d0, const LbfgsOptions& o)
      : fun_(fun), x_(x), dir_(dir), f0_(f0), d0_(d0), o_(o) {}

  /// Returns true with (a, f, g) set on a strong-Wolfe point.
  bool run(double a_init, double& a_out, double& f_out, Vec& g_out, int& evals) {
    LinePoint prev{0.0, f0_, d0_};
    double a = a_init;
    for (int i = 0; i < o_.max_line_search; ++i) {
      const LinePoint cur = eval(a, evals);
      if (!std::isfinite(cur.f) || cur.f > f0_ + o_.c1 * a * d0_ || (i > 0 && cur.f >= prev.f))
        return zoom(prev, cur, a_out, f_out, g_out, evals);
      if (std::abs(cur.d) <= -o_.c2 * d0_) return accept(cur, a_out, f_out, g_out);
      if (cur.d >= 0.0) return zoom(cur, prev, a_out, f_out, g_out, evals);
      prev = cur;
      a *= 2.0;
    }
    return false;
  }

 private:
  LinePoint eval(double a, int& evals) {
    ++evals;
    xt_ = x_ + a * dir_;
    const double f = fun_(xt_, gt_);
    const double d = std::isfinite(f) ? gt_.dot(dir_) : 0.0;
    return {a, f, d};
  }

  bool accept(const LinePoint& p, double& a_out, double& f_out, Vec& g_out) {
    a_out = p.a;
    f_out = p.f;
    g_out = gt_;
    return true;
  }

  bool zoom(LinePoint lo, LinePoint hi, double& a_out, double& f_out, Vec& g_out, int& evals) {
    for (int i = 0; i < o_.max_line_search; ++i) {
      const double left = std::min(lo.a, hi.a), right = std::max(lo.a, hi.a);
      if (right - left < 1e-16 * std::max(1.0, right)) break;
      const double a = std::isfinite(hi.f) ? cubic_min(lo, hi, left, right) : 0.5 * (lo.a + hi.a);
      const LinePoint cur = eval(a, evals);
      if (!std::isfinite(cur.f) || cur.f > f0_ + o_.c1 * a * d0_ || cur.f >= lo.f) {
        hi = cur;
      } else {
        if (std::abs(cur.d) <= -o_.c2 * d0_) return accept(cur, a_out, f_out, g_out);
        if (cur.d * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = cur;
      }
    }
    // fall back to the best sufficient-decrease point found
    if (lo.a > 0.0 && lo.f < f0_) {
      eval(lo.a, evals);
      return accept(lo, a_out, f_out, g_out);
    }
    return false;
  }

  const Objective& fun_;
  const Vec& x_;
  const Vec& dir_;
  double f0_, d0_;
  const LbfgsOptions& o_;
  Vec xt_, gt_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& fun, Vec x0, const LbfgsOptions& options,
                           const IterationCallback& callback) {
  if (options.memory < 1) throw DomainError("L-BFGS memory must be >= 1");
  LbfgsResult r;
  r.x = std::move(x0);
  Vec g;
  r.f = fun(r.x, g);
  r.evaluations = 1;
  if (!std::isfinite(r.f) || !g.allFinite()) throw DomainError("L-BFGS: non-finite objective at the start point");

  std::deque<Vec> s_hist, y_hist;
  std::deque<double> rho_hist;
  r.status = "max_iters";
  for (int it = 0; it < options.max_iters; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < options.grad_tol) {
      r.status = "grad_tol";
      break;
    }
    // two-loop recursion
    Vec q = g;
    const std::size_t k = s_hist.size();
    std::vector<double> alpha(k);
    for (std::size_t i = k; i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (k > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t i = 0; i < k; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Vec dir = -q;
    double d0 = g.dot(dir);
    if (!(d0 < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g;
      d0 = -g.squaredNorm();
    }
    const double a_init = k == 0 ? std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>()) : 1.0;

    double a = 0.0, f_new = 0.0;
    Vec g_new;
    LineSearch ls(fun, r.x, dir, r.f, d0, options);
    if (!ls.run(a_init, a, f_new, g_new, r.evaluations)) {
      r.status = "line_search_failed";
      break;
    }
    const Vec s = a * dir;
    const Vec y = g_new - g;
    r.x += s;
    r.f = f_new;
    g = std::move(g_new);
    r.iterations = it + 1;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (callback && !callback(r.iterations, r.x, r.f)) {
      r.status = "stopped";
      break;
    }
  }
  return r;
}

}  // namespace pinnpid
