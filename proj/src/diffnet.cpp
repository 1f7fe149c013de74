#include "pinnpid/diffnet.hpp"
#include "pinnpid/random.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace pinnpid {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMat>;
using Weights = Eigen::Map<RowMat>;

}  // namespace

Eigen::Index NetworkSpec::parameter_count() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) n += Eigen::Index(widths[l]) * widths[l + 1] + widths[l + 1];
  return n;
}

Eigen::Index NetworkSpec::layer_offset(int layer) const {
  Eigen::Index n = 0;
  for (int l = 0; l < layer; ++l) n += Eigen::Index(widths[l]) * widths[l + 1] + widths[l + 1];
  return n;
}

void NetworkSpec::validate() const {
  if (widths.size() < 3) throw DomainError("network needs at least one hidden layer");
  for (int w : widths)
    if (w < 1) throw DomainError("network widths must be >= 1");
}

InputScaling InputScaling::for_domain(double horizon, const Box& state, const Box& input) {
  const Eigen::Index n = state.dim(), m = input.dim();
  InputScaling s;
  s.lower.resize(1 + n + m);
  s.upper.resize(1 + n + m);
  s.lower << 0.0, state.lower, input.lower;
  s.upper << horizon, state.upper, input.upper;
  return s;
}

void InputScaling::validate(int dim) const {
  if (lower.size() != dim || upper.size() != dim) throw DomainError("input scaling dimension mismatch");
  Box(lower, upper).validate("input scaling", true);
}

void tanh_inplace(Mat& z) {
  const Eigen::ArrayXXd e = (-2.0 * z.array().abs()).exp();
  const Eigen::ArrayXXd t = (1.0 - e) / (1.0 + e);
  z = (z.array() < 0.0).select(-t, t).matrix();
}

Network::Network(NetworkSpec spec, Vec params, InputScaling scaling)
    : spec_(std::move(spec)), scaling_(std::move(scaling)) {
  spec_.validate();
  scaling_.validate(spec_.input_dim());
  if (spec_.input_dim() <= 1 + spec_.output_dim())
    throw DomainError("input width must be 1 + state + control with at least one control");
  slope_ = scaling_.slope();
  offset_ = scaling_.offset();
  set_params(params);
}

Network Network::glorot(NetworkSpec spec, InputScaling scaling, std::uint64_t seed) {
  spec.validate();
  Vec p = Vec::Zero(spec.parameter_count());
  Rng rng(seed);
  for (int l = 0; l < spec.layer_count(); ++l) {
    const int in = spec.widths[l], out = spec.widths[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    const Eigen::Index off = spec.layer_offset(l);
    for (Eigen::Index i = 0; i < Eigen::Index(in) * out; ++i) p[off + i] = rng.uniform(-limit, limit);
  }
  return Network(std::move(spec), std::move(p), std::move(scaling));
}

void Network::set_params(const Vec& params) {
  if (params.size() != spec_.parameter_count())
    throw DomainError("parameter vector length " + std::to_string(params.size()) + " does not match spec (" +
                      std::to_string(spec_.parameter_count()) + ")");
  if (!params.allFinite()) throw DomainError("non-finite network parameter");
  params_ = params;
}

Vec Network::pack(double t, const Vec& x, const Vec& u) const {
  if (x.size() != state_dim() || u.size() != control_dim()) throw DomainError("network input dimension mismatch");
  if (!std::isfinite(t) || !x.allFinite() || !u.allFinite()) throw DomainError("non-finite network input");
  Vec in(spec_.input_dim());
  in << t, x, u;
  return in;
}

void Network::check_inputs(const Mat& raw_inputs) const {
  if (raw_inputs.rows() != spec_.input_dim()) throw DomainError("network input dimension mismatch");
  if (raw_inputs.cols() == 0) throw DomainError("empty batch");
}

void Network::forward_batch(const Mat& raw_inputs, ForwardPass& pass, bool with_rate) const {
  check_inputs(raw_inputs);
  const int L = spec_.layer_count();
  const Eigen::Index B = raw_inputs.cols();
  pass.act.resize(L + 1);
  pass.has_rate = with_rate;
  if (with_rate) {
    pass.pre_rate.resize(L + 1);
    pass.rate.resize(L);
  }

  pass.act[0] = (slope_.asDiagonal() * raw_inputs).colwise() + offset_;
  for (int l = 1; l <= L; ++l) {
    const int in = spec_.widths[l - 1], out = spec_.widths[l];
    const Eigen::Index off = spec_.layer_offset(l - 1);
    ConstWeights W(params_.data() + off, out, in);
    const auto b = params_.segment(off + Eigen::Index(in) * out, out);

    Mat& z = pass.act[l];
    z.noalias() = W * pass.act[l - 1];
    z.colwise() += b;
    if (l < L) tanh_inplace(z);

    if (with_rate) {
      Mat& p = pass.pre_rate[l];
      if (l == 1) {
        // d(scaled input)/dt is slope_t * e_0 for every column
        p = (W.col(0) * slope_[0]).replicate(1, B);
      } else {
        p.noalias() = W * pass.rate[l - 1];
      }
      if (l < L) pass.rate[l] = (1.0 - z.array().square()).matrix().cwiseProduct(p);
    }
  }
}

void Network::backward_batch(const ForwardPass& pass, const Mat& out_cot, const Mat* rate_cot, Vec* param_grad,
                             Mat* input_cot) const {
  const int L = spec_.layer_count();
  const Eigen::Index B = pass.batch();
  if (out_cot.rows() != state_dim() || out_cot.cols() != B) throw DomainError("cotangent dimension mismatch");
  const bool use_rate = rate_cot != nullptr;
  if (use_rate) {
    if (!pass.has_rate) throw DomainError("rate cotangent requires a forward pass with rates");
    if (rate_cot->rows() != state_dim() || rate_cot->cols() != B) throw DomainError("rate cotangent dimension mismatch");
  }
  if (param_grad != nullptr && param_grad->size() != params_.size()) param_grad->setZero(params_.size());

  Mat gA = out_cot;
  Mat gT;
  if (use_rate) gT = *rate_cot;
  Mat gZ, gP;

  for (int l = L; l >= 1; --l) {
    const int in = spec_.widths[l - 1], out = spec_.widths[l];
    const Eigen::Index off = spec_.layer_offset(l - 1);
    ConstWeights W(params_.data() + off, out, in);

    if (l == L) {
      gZ.swap(gA);
      if (use_rate) gP.swap(gT);
    } else {
      const auto A = pass.act[l].array();
      const Eigen::ArrayXXd S = 1.0 - A.square();
      if (use_rate) {
        gP = (S * gT.array()).matrix();
        gA.array() -= 2.0 * A * pass.pre_rate[l].array() * gT.array();
      }
      gZ = (S * gA.array()).matrix();
    }

    if (param_grad != nullptr) {
      Weights gW(param_grad->data() + off, out, in);
      gW.noalias() += gZ * pass.act[l - 1].transpose();
      param_grad->segment(off + Eigen::Index(in) * out, out) += gZ.rowwise().sum();
      if (use_rate) {
        if (l == 1)
          gW.col(0) += slope_[0] * gP.rowwise().sum();
        else
          gW.noalias() += gP * pass.rate[l - 1].transpose();
      }
    }

    if (l > 1) {
      gA.noalias() = W.transpose() * gZ;
      if (use_rate) gT.noalias() = W.transpose() * gP;
    } else if (input_cot != nullptr) {
      *input_cot = slope_.asDiagonal() * (W.transpose() * gZ);
    }
  }
}

Vec Network::forward(double t, const Vec& x, const Vec& u) const {
  ForwardPass pass;
  forward_batch(pack(t, x, u), pass, false);
  return pass.output().col(0);
}

Vec Network::time_derivative(double t, const Vec& x, const Vec& u) const {
  ForwardPass pass;
  forward_batch(pack(t, x, u), pass, true);
  return pass.output_rate().col(0);
}

Vec Network::grad_params(const std::vector<Sample>& batch, const Mat& cotangents) const {
  if (batch.empty()) throw DomainError("grad_params needs a nonempty batch");
  if (cotangents.cols() != Eigen::Index(batch.size())) throw DomainError("one cotangent column per sample required");
  Mat inputs(spec_.input_dim(), batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) inputs.col(i) = pack(batch[i].t, batch[i].x, batch[i].u);
  ForwardPass pass;
  forward_batch(inputs, pass, false);
  Vec g = Vec::Zero(params_.size());
  backward_batch(pass, cotangents, nullptr, &g, nullptr);
  return g;
}

InputPullback Network::grad_inputs(double t, const Vec& x, const Vec& u, const Vec& cotangent) const {
  ForwardPass pass;
  forward_batch(pack(t, x, u), pass, false);
  Mat cot = cotangent;
  Mat in_cot;
  backward_batch(pass, cot, nullptr, nullptr, &in_cot);
  const int n = state_dim(), m = control_dim();
  return {in_cot.col(0).segment(1, n), in_cot.col(0).segment(1 + n, m)};
}

// -- serialisation -------------------------------------------------------------

void write_network(std::ostream& os, const Network& net) {
  os << "PINNMODEL 1\n";
  const auto& w = net.spec().widths;
  for (std::size_t i = 0; i < w.size(); ++i) os << (i ? " " : "") << w[i];
  os << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  const auto& s = net.scaling();
  const Eigen::Index n = net.state_dim(), m = net.control_dim();
  // blocks: t_lo t_hi | x_lo | x_hi | u_lo | u_hi
  os << s.lower[0] << ' ' << s.upper[0];
  for (Eigen::Index i = 0; i < n; ++i) os << ' ' << s.lower[1 + i];
  for (Eigen::Index i = 0; i < n; ++i) os << ' ' << s.upper[1 + i];
  for (Eigen::Index i = 0; i < m; ++i) os << ' ' << s.lower[1 + n + i];
  for (Eigen::Index i = 0; i < m; ++i) os << ' ' << s.upper[1 + n + i];
  os << '\n';
  for (Eigen::Index i = 0; i < net.params().size(); ++i) os << net.params()[i] << '\n';
}

Network read_network(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "PINNMODEL 1") throw DomainError("model file: missing 'PINNMODEL 1' header");
  if (!std::getline(is, line)) throw DomainError("model file: missing layer widths");
  NetworkSpec spec;
  {
    std::istringstream ws(line);
    int w;
    while (ws >> w) spec.widths.push_back(w);
  }
  spec.validate();
  if (!std::getline(is, line)) throw DomainError("model file: missing scaling bounds");
  const int n = spec.output_dim(), m = spec.input_dim() - 1 - n;
  if (m < 1) throw DomainError("model file: input width inconsistent with output width");
  std::vector<double> b;
  {
    std::istringstream bs(line);
    double v;
    while (bs >> v) b.push_back(v);
  }
  if (b.size() != std::size_t(2 + 2 * n + 2 * m)) throw DomainError("model file: wrong number of scaling bounds");
  InputScaling s;
  s.lower.resize(1 + n + m);
  s.upper.resize(1 + n + m);
  s.lower[0] = b[0];
  s.upper[0] = b[1];
  for (int i = 0; i < n; ++i) {
    s.lower[1 + i] = b[2 + i];
    s.upper[1 + i] = b[2 + n + i];
  }
  for (int i = 0; i < m; ++i) {
    s.lower[1 + n + i] = b[2 + 2 * n + i];
    s.upper[1 + n + i] = b[2 + 2 * n + m + i];
  }
  Vec p(spec.parameter_count());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(is >> p[i])) throw DomainError("model file: truncated parameter list");
  }
  return Network(std::move(spec), std::move(p), std::move(s));
}

void save_network(const std::string& path, const Network& net) {
  std::ofstream os(path);
  if (!os) throw DomainError("cannot write model file " + path);
  write_network(os, net);
}

Network load_network(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DomainError("cannot open model file " + path);
  return read_network(is);
}

}  // namespace pinnpid
