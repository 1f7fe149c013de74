#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace pinnpid {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Numerical or modelling failure (bad dimensions, blow-up, infeasible start).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or schema-violating experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box [lower, upper] in R^d.
struct Box {
  Vec lower;
  Vec upper;

  Box() = default;
  Box(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {}

  [[nodiscard]] Eigen::Index dim() const { return lower.size(); }
  [[nodiscard]] bool contains(const Vec& v) const {
    return v.size() == dim() && (v.array() >= lower.array()).all() && (v.array() <= upper.array()).all();
  }
  [[nodiscard]] Vec clamp(const Vec& v) const { return v.cwiseMax(lower).cwiseMin(upper); }
  [[nodiscard]] Vec center() const { return 0.5 * (lower + upper); }

  /// Throws DomainError unless lower <= upper (or < when strict) componentwise.
  void validate(const std::string& what, bool strict) const;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace pinnpid
