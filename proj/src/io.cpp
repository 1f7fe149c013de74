#include "pinnpid/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace pinnpid {

using ordered = nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace {

bool starts_with(const std::string& s, const char* p) { return s.rfind(p, 0) == 0; }

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw DomainError("trajectory CSV: bad number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

ordered json_number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

ordered vec_json(const Vec& v) {
  ordered a = ordered::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(json_number(v[i]));
  return a;
}

}  // namespace

void write_log_csv(std::ostream& os, const TrajectoryLog& log) {
  const int n = log.state_dim, m = log.input_dim;
  os << 't';
  for (int i = 1; i <= n; ++i) os << ",xm" << i;
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 1; i <= n; ++i) os << ",xref" << i;
  for (int j = 1; j <= m; ++j) os << ",u" << j;
  for (const auto& l : log.gain_labels) os << ',' << l;
  os << ",cost,opt_cost,opt_iters";
  if (log.has_stability) os << ",g,margin,crossover";
  os << '\n';
  auto put = [&](const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << format_double(v[i]);
  };
  for (const auto& r : log.rows) {
    os << format_double(r.t);
    put(r.x_meas);
    put(r.x_true);
    put(r.x_ref);
    put(r.u);
    put(r.gains);
    os << ',' << format_double(r.cost) << ',' << format_double(r.opt_cost) << ',' << r.opt_iters;
    if (log.has_stability)
      os << ',' << format_double(r.g) << ',' << format_double(r.margin) << ',' << format_double(r.crossover);
    os << '\n';
  }
}

TrajectoryLog read_log_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DomainError("trajectory CSV is empty");
  const auto head = split(line);
  TrajectoryLog log;
  int n = 0, m = 0;
  for (const auto& h : head) {
    if (starts_with(h, "xm")) ++n;
    if (h.size() > 1 && h[0] == 'u' && std::isdigit(static_cast<unsigned char>(h[1]))) ++m;
  }
  const auto cost_it = std::find(head.begin(), head.end(), "cost");
  if (head.empty() || head[0] != "t" || n == 0 || cost_it == head.end())
    throw DomainError("trajectory CSV: unrecognised header");
  const int gain_begin = 1 + 3 * n + m;
  const int gain_end = static_cast<int>(cost_it - head.begin());
  if (gain_end < gain_begin) throw DomainError("trajectory CSV: unrecognised header");
  log.state_dim = n;
  log.input_dim = m;
  log.gain_labels.assign(head.begin() + gain_begin, head.begin() + gain_end);
  log.has_stability = std::find(head.begin(), head.end(), "margin") != head.end();
  const std::size_t width = head.size();
  const int ng = gain_end - gain_begin;

  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != width) throw DomainError("trajectory CSV: row width does not match the header");
    std::vector<double> v(width);
    for (std::size_t i = 0; i < width; ++i) v[i] = parse_double(cells[i]);
    LogRow r;
    int c = 0;
    r.t = v[c++];
    auto take = [&](int k) {
      Vec out(k);
      for (int i = 0; i < k; ++i) out[i] = v[c++];
      return out;
    };
    r.x_meas = take(n);
    r.x_true = take(n);
    r.x_ref = take(n);
    r.u = take(m);
    r.gains = take(ng);
    r.cost = v[c++];
    r.opt_cost = v[c++];
    r.opt_iters = static_cast<int>(v[c++]);
    if (log.has_stability) {
      r.g = v[c++];
      r.margin = v[c++];
      r.crossover = v[c++];
    }
    log.rows.push_back(std::move(r));
  }
  if (log.rows.size() >= 2) log.dt = log.rows[1].t - log.rows[0].t;
  if (!log.rows.empty()) log.final_state = log.rows.back().x_true;
  return log;
}

RunSummary summarize(const TrajectoryLog& log, int positions, double band_fraction) {
  if (positions < 1 || positions > log.state_dim) throw DomainError("summarize: position count out of range");
  RunSummary s;
  s.steps = static_cast<int>(log.rows.size());
  s.diverged = log.diverged;
  s.diverged_at = log.diverged ? log.diverged_at : 0.0;
  s.segments.resize(positions);
  s.iae = Vec::Zero(positions);
  s.terminal_error = Vec::Zero(positions);
  s.max_abs_input = Vec::Zero(log.input_dim);
  if (log.rows.empty()) return s;

  // segment boundaries: rows where any reference coordinate changes
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 1; i < log.rows.size(); ++i)
    if (log.rows[i].x_ref != log.rows[i - 1].x_ref) starts.push_back(i);

  std::vector<double> times;
  for (const auto& r : log.rows) times.push_back(r.t);
  const double t_last = log.rows.back().t + log.dt;

  for (int c = 0; c < positions; ++c) {
    std::vector<double> err;
    for (const auto& r : log.rows) err.push_back(r.x_ref[c] - r.x_true[c]);
    for (std::size_t k = 0; k < starts.size(); ++k) {
      const std::size_t a = starts[k];
      const std::size_t b = k + 1 < starts.size() ? starts[k + 1] : log.rows.size();
      SegmentMetrics seg;
      seg.start = log.rows[a].t;
      seg.end = b < log.rows.size() ? log.rows[b].t : t_last;
      seg.step = a == 0 ? err[0] : log.rows[a].x_ref[c] - log.rows[a - 1].x_ref[c];
      if (seg.step != 0.0) {
        seg.settling = settling_time(times, err, seg.step, band_fraction, seg.start, seg.end);
        const double sign = seg.step > 0.0 ? 1.0 : -1.0;
        for (std::size_t i = a; i < b; ++i) seg.overshoot = std::max(seg.overshoot, -sign * err[i]);
      }
      s.segments[c].push_back(seg);
    }
    s.iae[c] = integrated_abs_error(log, c);
    s.terminal_error[c] = err.back();
  }
  for (const auto& r : log.rows) {
    s.max_abs_input = s.max_abs_input.cwiseMax(r.u.cwiseAbs());
    if (log.has_stability) {
      if (!(s.margin_min <= r.margin)) s.margin_min = r.margin;
      if (!(s.g_min <= r.g)) s.g_min = r.g;
    }
  }
  return s;
}

std::string summary_json(const RunSummary& s) {
  ordered j;
  j["steps"] = s.steps;
  j["diverged"] = s.diverged;
  j["diverged_at"] = s.diverged ? ordered(s.diverged_at) : ordered(nullptr);
  ordered coords = ordered::array();
  for (std::size_t c = 0; c < s.segments.size(); ++c) {
    ordered segs = ordered::array();
    for (const auto& seg : s.segments[c]) {
      ordered o;
      o["start"] = seg.start;
      o["end"] = seg.end;
      o["step"] = seg.step;
      o["settling_time"] = seg.settling ? ordered(*seg.settling) : ordered(nullptr);
      o["overshoot"] = seg.overshoot;
      segs.push_back(o);
    }
    ordered co;
    co["coordinate"] = c + 1;
    co["segments"] = segs;
    double worst = 0.0;
    for (const auto& seg : s.segments[c]) worst = std::max(worst, seg.overshoot);
    co["max_overshoot"] = worst;
    co["terminal_error"] = json_number(s.terminal_error[static_cast<Eigen::Index>(c)]);
    co["iae"] = json_number(s.iae[static_cast<Eigen::Index>(c)]);
    coords.push_back(co);
  }
  j["coordinates"] = coords;
  j["max_abs_input"] = vec_json(s.max_abs_input);
  j["margin_min"] = json_number(s.margin_min);
  j["g_min"] = json_number(s.g_min);
  return j.dump(2) + "\n";
}

std::string stability_json(const StabilityReport& r, const FrozenLoop& loop) {
  ordered j;
  j["gains"] = {{"kp", loop.kp}, {"ki", loop.ki}, {"kd", loop.kd}};
  j["plant"] = {{"mass", loop.plant.mass}, {"damping", loop.plant.damping}, {"stiffness", loop.plant.stiffness}};
  j["g"] = r.g;
  j["stable"] = r.stable;
  j["margin"] = r.margin;
  j["margin_omega"] = r.margin_omega;
  j["crossover"] = r.crossover ? ordered(*r.crossover) : ordered(nullptr);
  return j.dump(2) + "\n";
}

std::string validation_json(const ValidationReport& r) {
  ordered j;
  j["step_mae"] = vec_json(r.step_mae);
  j["step_mse"] = vec_json(r.step_mse);
  j["rollout_mae"] = vec_json(r.rollout_mae);
  j["rollout_mse"] = vec_json(r.rollout_mse);
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DomainError("write failed for '" + path + "'");
}

}  // namespace pinnpid
