#pragma once

/**
 * @file plots.hpp
 * @brief Static SVG figures of a run: states against the reference, errors
 * on a log scale, inputs, gains, stability margin, Nyquist curve.
 */

#include "pinnpid/analysis.hpp"
#include "pinnpid/mpc.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pinnpid {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  double log_floor = 1e-12;  ///< values below are drawn on the axis floor
  int width = 720;
  int height = 360;
};

/// Values as drawn on a log axis: |v| clamped below at the floor.
double log_axis_value(double v, double floor);

std::string line_chart_svg(const std::vector<Series>& series, const ChartOptions& options);

/// L(j omega) over the grid with the unit circle, the -1 point and a marker
/// at `marker_omega`.
std::string nyquist_svg(const FrozenLoop& loop, const FrequencyGrid& grid, double marker_omega = 1.0);

struct PlotResult {
  std::vector<std::string> written;
  std::vector<std::string> notes;  ///< plots skipped and why
};

/// Writes states.svg, errors.svg, inputs.svg, gains.svg and, for logs with
/// stability columns, margin.svg and nyquist.svg (final gains) into `dir`.
/// `kinds` restricts the set; empty means all.
PlotResult emit_plots(const TrajectoryLog& log, const std::string& dir, const std::vector<std::string>& kinds = {},
                      const std::optional<MsdParams>& msd = std::nullopt, const FrequencyGrid& grid = {});

}  // namespace pinnpid
