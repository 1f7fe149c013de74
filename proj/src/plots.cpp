#include "pinnpid/plots.hpp"

#include "pinnpid/gainopt.hpp"
#include "pinnpid/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>

namespace pinnpid {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

/// Roughly `target` ticks on 1-2-5 steps covering [lo, hi].
std::vector<double> linear_ticks(double lo, double hi, int target = 6) {
  const double span = hi - lo;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 5.0, 10.0}) {
    step = f * mag;
    if (span / step <= target) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(t);
  return out;
}

struct Frame {
  double x0, x1, y0, y1;  // data range
  double left = 70, right = 150, top = 30, bottom = 45;
  int width = 720, height = 360;

  [[nodiscard]] double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  [[nodiscard]] double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

void pad_range(double& lo, double& hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = -1.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    const double d = std::max(std::abs(hi) * 0.1, 1e-3);
    lo -= d;
    hi += d;
  } else {
    const double d = 0.05 * (hi - lo);
    lo -= d;
    hi += d;
  }
}

void header(std::ostringstream& os, int w, int h, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    os << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << escape(title) << "</text>\n";
}

void axes(std::ostringstream& os, const Frame& f, const std::vector<double>& xt, const std::vector<double>& yt,
          bool log_y, const std::string& xl, const std::string& yl) {
  os << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (double t : xt) os << "<line x1=\"" << num(f.px(t)) << "\" y1=\"" << num(f.py(f.y0)) << "\" x2=\"" << num(f.px(t))
                         << "\" y2=\"" << num(f.py(f.y1)) << "\"/>\n";
  for (double t : yt) os << "<line x1=\"" << num(f.px(f.x0)) << "\" y1=\"" << num(f.py(t)) << "\" x2=\"" << num(f.px(f.x1))
                         << "\" y2=\"" << num(f.py(t)) << "\"/>\n";
  os << "</g>\n";
  os << "<rect x=\"" << num(f.px(f.x0)) << "\" y=\"" << num(f.py(f.y1)) << "\" width=\"" << num(f.px(f.x1) - f.px(f.x0))
     << "\" height=\"" << num(f.py(f.y0) - f.py(f.y1)) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : xt)
    os << "<text x=\"" << num(f.px(t)) << "\" y=\"" << num(f.py(f.y0) + 15) << "\" text-anchor=\"middle\">"
       << tick_label(t) << "</text>\n";
  for (double t : yt) {
    const std::string label = log_y ? "1e" + tick_label(t) : tick_label(t);
    os << "<text x=\"" << num(f.px(f.x0) - 5) << "\" y=\"" << num(f.py(t) + 4) << "\" text-anchor=\"end\">" << label
       << "</text>\n";
  }
  if (!xl.empty())
    os << "<text x=\"" << num(0.5 * (f.px(f.x0) + f.px(f.x1))) << "\" y=\"" << f.height - 8
       << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n";
  if (!yl.empty()) {
    const double cy = 0.5 * (f.py(f.y0) + f.py(f.y1));
    os << "<text x=\"14\" y=\"" << num(cy) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << num(cy) << ")\">"
       << escape(yl) << "</text>\n";
  }
}

void polyline(std::ostringstream& os, const Frame& f, const std::vector<double>& x, const std::vector<double>& y,
              const char* color, bool dashed) {
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.4\"";
  if (dashed) os << " stroke-dasharray=\"6 3\"";
  os << " clip-path=\"url(#plot)\" points=\"";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(y[i]) || !std::isfinite(x[i])) continue;
    os << num(f.px(x[i])) << ',' << num(f.py(y[i])) << ' ';
  }
  os << "\"/>\n";
}

void clip(std::ostringstream& os, const Frame& f) {
  os << "<defs><clipPath id=\"plot\"><rect x=\"" << num(f.px(f.x0)) << "\" y=\"" << num(f.py(f.y1)) << "\" width=\""
     << num(f.px(f.x1) - f.px(f.x0)) << "\" height=\"" << num(f.py(f.y0) - f.py(f.y1)) << "\"/></clipPath></defs>\n";
}

void legend(std::ostringstream& os, const Frame& f, const std::vector<std::pair<std::string, bool>>& entries) {
  double y = f.top + 10;
  const double x = f.width - f.right + 12;
  for (std::size_t i = 0; i < entries.size(); ++i, y += 16) {
    os << "<line x1=\"" << num(x) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x + 22) << "\" y2=\"" << num(y)
       << "\" stroke=\"" << kPalette[i % 8] << "\" stroke-width=\"2\"";
    if (entries[i].second) os << " stroke-dasharray=\"6 3\"";
    os << "/>\n<text x=\"" << num(x + 27) << "\" y=\"" << num(y + 4) << "\">" << escape(entries[i].first) << "</text>\n";
  }
}

std::vector<std::string> position_labels(int n) {
  std::vector<std::string> out;
  if (n == 2) return {"z", "z'"};
  if (n == 4) return {"alpha", "beta", "alpha'", "beta'"};
  for (int i = 1; i <= n; ++i) out.push_back("x" + std::to_string(i));
  return out;
}

bool wanted(const std::vector<std::string>& kinds, const std::string& k) {
  return kinds.empty() || std::find(kinds.begin(), kinds.end(), k) != kinds.end();
}

}  // namespace

double log_axis_value(double v, double floor) { return std::max(std::abs(v), floor); }

std::string line_chart_svg(const std::vector<Series>& series, const ChartOptions& o) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  std::vector<std::vector<double>> ys;
  for (const auto& s : series) {
    std::vector<double> y = s.y;
    if (o.log_y)
      for (double& v : y) v = std::log10(log_axis_value(v, o.log_floor));
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, y[i]);
      y1 = std::max(y1, y[i]);
    }
    ys.push_back(std::move(y));
  }
  if (!(x1 > x0)) {
    x0 = std::isfinite(x0) ? x0 - 1.0 : 0.0;
    x1 = x0 + 2.0;
  }
  if (o.log_y) {
    y0 = std::floor(std::isfinite(y0) ? y0 : -1.0);
    y1 = std::ceil(std::isfinite(y1) ? y1 : 0.0);
    if (y1 <= y0) y1 = y0 + 1.0;
  } else {
    pad_range(y0, y1);
  }
  Frame f{x0, x1, y0, y1};
  f.width = o.width;
  f.height = o.height;

  std::vector<double> yt;
  if (o.log_y) {
    const int span = static_cast<int>(y1 - y0);
    const int stride = std::max(1, span / 8);
    for (int d = static_cast<int>(y0); d <= static_cast<int>(y1); d += stride) yt.push_back(d);
  } else {
    yt = linear_ticks(y0, y1);
  }

  std::ostringstream os;
  header(os, o.width, o.height, o.title);
  clip(os, f);
  axes(os, f, linear_ticks(x0, x1), yt, o.log_y, o.x_label, o.y_label);
  std::vector<std::pair<std::string, bool>> entries;
  for (std::size_t i = 0; i < series.size(); ++i) {
    polyline(os, f, series[i].x, ys[i], kPalette[i % 8], series[i].dashed);
    entries.emplace_back(series[i].label, series[i].dashed);
  }
  legend(os, f, entries);
  os << "</svg>\n";
  return os.str();
}

std::string nyquist_svg(const FrozenLoop& loop, const FrequencyGrid& grid, double marker_omega) {
  const auto w = grid.omegas();
  std::vector<double> re, im;
  for (double om : w) {
    const auto l = open_loop_response(loop, om);
    re.push_back(l.real());
    im.push_back(l.imag());
  }
  // view: unit circle and -1, widened to the part of the curve within |L| <= 6
  double x0 = -2.0, x1 = 1.5, y0 = -1.5, y1 = 1.5;
  for (std::size_t i = 0; i < re.size(); ++i) {
    if (std::hypot(re[i], im[i]) > 6.0) continue;
    x0 = std::min(x0, re[i]);
    x1 = std::max(x1, re[i]);
    y0 = std::min(y0, im[i]);
    y1 = std::max(y1, im[i]);
  }
  pad_range(x0, x1);
  pad_range(y0, y1);
  // equal aspect
  const int size = 520;
  Frame f{x0, x1, y0, y1};
  f.width = size + 100;
  f.height = size;
  const double sx = (x1 - x0) / (f.width - f.left - f.right), sy = (y1 - y0) / (f.height - f.top - f.bottom);
  if (sx > sy) {
    const double c = 0.5 * (y0 + y1), h = 0.5 * sx * (f.height - f.top - f.bottom);
    f.y0 = c - h;
    f.y1 = c + h;
  } else {
    const double c = 0.5 * (x0 + x1), h = 0.5 * sy * (f.width - f.left - f.right);
    f.x0 = c - h;
    f.x1 = c + h;
  }

  std::ostringstream os;
  char title[160];
  std::snprintf(title, sizeof title, "Nyquist, Kp=%g Ki=%g Kd=%g", loop.kp, loop.ki, loop.kd);
  header(os, f.width, f.height, title);
  clip(os, f);
  axes(os, f, linear_ticks(f.x0, f.x1), linear_ticks(f.y0, f.y1), false, "Re L(jw)", "Im L(jw)");
  const double r = (f.px(1.0) - f.px(0.0));
  os << "<circle cx=\"" << num(f.px(0.0)) << "\" cy=\"" << num(f.py(0.0)) << "\" r=\"" << num(std::abs(r))
     << "\" fill=\"none\" stroke=\"#999999\" stroke-dasharray=\"4 3\" clip-path=\"url(#plot)\"/>\n";
  polyline(os, f, re, im, kPalette[0], false);
  std::vector<double> im_neg(im.size());
  std::transform(im.begin(), im.end(), im_neg.begin(), [](double v) { return -v; });
  polyline(os, f, re, im_neg, kPalette[0], true);
  os << "<g stroke=\"" << kPalette[1] << "\" stroke-width=\"2\"><line x1=\"" << num(f.px(-1.0) - 6) << "\" y1=\""
     << num(f.py(0.0) - 6) << "\" x2=\"" << num(f.px(-1.0) + 6) << "\" y2=\"" << num(f.py(0.0) + 6) << "\"/><line x1=\""
     << num(f.px(-1.0) - 6) << "\" y1=\"" << num(f.py(0.0) + 6) << "\" x2=\"" << num(f.px(-1.0) + 6) << "\" y2=\""
     << num(f.py(0.0) - 6) << "\"/></g>\n";
  os << "<text x=\"" << num(f.px(-1.0) + 8) << "\" y=\"" << num(f.py(0.0) - 8) << "\">-1</text>\n";
  if (marker_omega > 0.0) {
    const auto l = open_loop_response(loop, marker_omega);
    os << "<circle cx=\"" << num(f.px(l.real())) << "\" cy=\"" << num(f.py(l.imag())) << "\" r=\"4\" fill=\""
       << kPalette[2] << "\" clip-path=\"url(#plot)\"/>\n";
    os << "<text x=\"" << num(f.px(l.real()) + 7) << "\" y=\"" << num(f.py(l.imag()) + 4) << "\">w=" << tick_label(marker_omega)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

PlotResult emit_plots(const TrajectoryLog& log, const std::string& dir, const std::vector<std::string>& kinds,
                      const std::optional<MsdParams>& msd, const FrequencyGrid& grid) {
  PlotResult res;
  if (log.rows.empty()) {
    res.notes.push_back("log is empty; no plots written");
    return res;
  }
  std::filesystem::create_directories(dir);
  const int n = log.state_dim, m = log.input_dim;
  const int positions = std::max(1, m);
  const auto names = position_labels(n);
  std::vector<double> t;
  for (const auto& r : log.rows) t.push_back(r.t);
  auto column = [&](auto getter) {
    std::vector<double> out;
    for (const auto& r : log.rows) out.push_back(getter(r));
    return out;
  };
  auto save = [&](const std::string& file, const std::string& svg) {
    const std::string path = (std::filesystem::path(dir) / file).string();
    write_text_file(path, svg);
    res.written.push_back(path);
  };

  if (wanted(kinds, "states")) {
    std::vector<Series> s;
    for (int c = 0; c < positions; ++c) {
      s.push_back({names[c], t, column([c](const LogRow& r) { return r.x_true[c]; }), false});
      s.push_back({names[c] + " ref", t, column([c](const LogRow& r) { return r.x_ref[c]; }), true});
    }
    save("states.svg", line_chart_svg(s, {"States and reference", "t [s]", "position", false}));
  }
  if (wanted(kinds, "errors")) {
    std::vector<Series> s;
    for (int c = 0; c < positions; ++c)
      s.push_back({"|e " + names[c] + "|", t, column([c](const LogRow& r) { return r.x_ref[c] - r.x_true[c]; }), false});
    save("errors.svg", line_chart_svg(s, {"Tracking error", "t [s]", "|x_ref - x|", true}));
  }
  if (wanted(kinds, "inputs")) {
    std::vector<Series> s;
    for (int j = 0; j < m; ++j)
      s.push_back({"u" + std::to_string(j + 1), t, column([j](const LogRow& r) { return r.u[j]; }), false});
    save("inputs.svg", line_chart_svg(s, {"Applied input", "t [s]", "u", false}));
  }
  if (wanted(kinds, "gains")) {
    if (log.gain_labels.empty() || log.rows.front().gains.size() == 0) {
      res.notes.push_back("gains plot omitted: the log has no gain series");
    } else {
      std::vector<Series> s;
      for (std::size_t i = 0; i < log.gain_labels.size(); ++i)
        s.push_back({log.gain_labels[i], t,
                     column([i](const LogRow& r) { return r.gains[static_cast<Eigen::Index>(i)]; }), false});
      save("gains.svg", line_chart_svg(s, {"PID gains", "t [s]", "gain", false}));
    }
  }
  if (wanted(kinds, "margin")) {
    if (!log.has_stability) {
      res.notes.push_back("margin plot omitted: no stability columns in the log");
    } else {
      std::vector<Series> s{{"margin", t, column([](const LogRow& r) { return r.margin; }), false}};
      save("margin.svg", line_chart_svg(s, {"Stability margin", "t [s]", "distance to -1", false}));
    }
  }
  if (wanted(kinds, "nyquist")) {
    if (!msd || log.rows.back().gains.size() != 3) {
      res.notes.push_back("nyquist plot omitted: needs the mass-spring-damper with three gains");
    } else {
      const FrozenLoop loop = frozen_loop(*msd, log.rows.back().gains);
      save("nyquist.svg", nyquist_svg(loop, grid));
    }
  }
  return res;
}

}  // namespace pinnpid
