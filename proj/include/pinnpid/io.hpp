#pragma once

/**
 * @file io.hpp
 * @brief Run artifacts: trajectory CSV (write and read back), per-run
 * summary and stability reports as JSON.
 */

#include "pinnpid/analysis.hpp"
#include "pinnpid/mpc.hpp"
#include "pinnpid/pinn.hpp"

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pinnpid {

/// Shortest text that reads back to the same double ("nan", "inf" for non-finite).
std::string format_double(double v);

/// Header: t, xm_i (measured), x_i (true), xref_i, u_j, gain labels, cost,
/// opt_cost, opt_iters and, for logs with stability columns, g, margin,
/// crossover. One row per control step.
void write_log_csv(std::ostream& os, const TrajectoryLog& log);
/// Inverse of write_log_csv; dt is taken from the first two rows.
TrajectoryLog read_log_csv(std::istream& is);

/// Settling of one position coordinate over one reference segment.
struct SegmentMetrics {
  double start = 0.0;
  double end = 0.0;
  double step = 0.0;                   ///< reference change at `start` (initial error for the first segment)
  std::optional<double> settling;      ///< 2% band, measured from `start`
  double overshoot = 0.0;              ///< largest excursion past the reference, >= 0
};

struct RunSummary {
  int steps = 0;
  bool diverged = false;
  double diverged_at = 0.0;
  std::vector<std::vector<SegmentMetrics>> segments;  ///< per position coordinate
  Vec terminal_error;  ///< x_ref - x_true at the last logged step (position coordinates)
  Vec iae;             ///< integrated absolute error per position coordinate
  Vec max_abs_input;
  double margin_min = std::numeric_limits<double>::quiet_NaN();
  double g_min = std::numeric_limits<double>::quiet_NaN();
};

/// `positions` leading coordinates are evaluated; the band is a fraction of
/// each segment's step size.
RunSummary summarize(const TrajectoryLog& log, int positions, double band_fraction = 0.02);
std::string summary_json(const RunSummary& s);

std::string stability_json(const StabilityReport& r, const FrozenLoop& loop);
std::string validation_json(const ValidationReport& r);

/// Writes text to a file, creating parent directories; throws DomainError on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace pinnpid
