#include "cmpu/model.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace cmpu {

std::string to_string(Architecture arch) {
  return arch == Architecture::kLinear ? "linear" : "mlp";
}

Architecture parse_architecture(const std::string& name) {
  if (name == "linear") return Architecture::kLinear;
  if (name == "mlp") return Architecture::kMlp;
  throw ValidationError("unknown architecture '" + name + "'");
}

namespace {

std::size_t param_count(Architecture arch, std::size_t d, std::size_t k, std::size_t h) {
  if (arch == Architecture::kLinear) return k * d + k;
  return h * d + h + k * h + k;
}

}  // namespace

SoftmaxModel::SoftmaxModel(Architecture arch, std::size_t dim, int num_positive,
                           std::size_t hidden)
    : arch_(arch), dim_(dim), num_positive_(num_positive), hidden_(hidden) {
  if (dim == 0) throw ValidationError("model: zero input dimension");
  if (num_positive < 1) throw ValidationError("model: need at least one positive class");
  if (arch == Architecture::kMlp && hidden == 0) {
    throw ValidationError("model: mlp needs a nonzero hidden width");
  }
  if (arch == Architecture::kLinear) hidden_ = 0;
  params_.assign(param_count(arch_, dim_, num_outputs(), hidden_), 0.0);
}

SoftmaxModel SoftmaxModel::random(Architecture arch, std::size_t dim, int num_positive,
                                  std::size_t hidden, std::uint64_t seed) {
  SoftmaxModel m(arch, dim, num_positive, hidden);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (double& p : m.params_) p = u(rng);
  return m;
}

std::span<double> SoftmaxModel::output_weights() {
  const std::size_t k = num_outputs();
  const std::size_t in = arch_ == Architecture::kLinear ? dim_ : hidden_;
  const std::size_t offset = arch_ == Architecture::kLinear ? 0 : hidden_ * dim_ + hidden_;
  return std::span<double>(params_).subspan(offset, k * in);
}

std::span<double> SoftmaxModel::output_bias() {
  const std::size_t k = num_outputs();
  return std::span<double>(params_).subspan(params_.size() - k, k);
}

bool SoftmaxModel::same_shape(const SoftmaxModel& other) const {
  return arch_ == other.arch_ && dim_ == other.dim_ && num_positive_ == other.num_positive_ &&
         hidden_ == other.hidden_;
}

void GradientBuffer::clear() { std::fill(values_.begin(), values_.end(), 0.0); }

void GradientBuffer::add_scaled(const GradientBuffer& other, double scale) {
  if (other.size() != size()) throw ValidationError("gradient buffers differ in shape");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += scale * other.values_[i];
}

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("sgd: learning_rate must be > 0");
  if (batch_size < 1) throw ValidationError("sgd: batch_size must be >= 1");
  if (epochs < 0) throw ValidationError("sgd: epochs must be >= 0");
  if (!(l2 >= 0.0)) throw ValidationError("sgd: l2 must be >= 0");
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  const double top = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (double& v : p) {
    v = std::exp(v - top);
    z += v;
  }
  for (double& v : p) v /= z;
  return p;
}

namespace {

// out[r] = b[r] + sum_c W[r][c] * x[c]
void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x,
            std::vector<double>& out) {
  const std::size_t rows = b.size();
  const std::size_t cols = x.size();
  out.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w.data() + r * cols;
    double acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    out[r] = acc;
  }
}

void check_input(const SoftmaxModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) {
    throw ValidationError("forward: input dimension " + std::to_string(x.size()) +
                          " != model dimension " + std::to_string(model.dim()));
  }
}

}  // namespace

void forward(const SoftmaxModel& model, std::span<const double> x, ForwardCache& cache) {
  check_input(model, x);
  const auto params = model.params();
  const std::size_t d = model.dim();
  const std::size_t k = model.num_outputs();
  std::vector<double> logits;
  if (model.arch() == Architecture::kLinear) {
    cache.hidden.clear();
    affine(params.subspan(0, k * d), params.subspan(k * d, k), x, logits);
  } else {
    const std::size_t h = model.hidden();
    affine(params.subspan(0, h * d), params.subspan(h * d, h), x, cache.hidden);
    for (double& v : cache.hidden) v = std::tanh(v);
    const std::size_t off = h * d + h;
    affine(params.subspan(off, k * h), params.subspan(off + k * h, k), cache.hidden, logits);
  }
  cache.probs = softmax(logits);
}

std::vector<double> forward(const SoftmaxModel& model, std::span<const double> x) {
  ForwardCache cache;
  forward(model, x, cache);
  return std::move(cache.probs);
}

void backward(const SoftmaxModel& model, std::span<const double> x, const ForwardCache& cache,
              std::span<const double> dlogits, GradientBuffer& grad) {
  auto params = model.params();
  auto g = grad.values();
  const std::size_t d = model.dim();
  const std::size_t k = model.num_outputs();
  if (model.arch() == Architecture::kLinear) {
    for (std::size_t r = 0; r < k; ++r) {
      const double dz = dlogits[r];
      if (dz == 0.0) continue;
      double* gr = g.data() + r * d;
      for (std::size_t c = 0; c < d; ++c) gr[c] += dz * x[c];
      g[k * d + r] += dz;
    }
    return;
  }
  const std::size_t h = model.hidden();
  const std::size_t off = h * d + h;
  std::vector<double> dhidden(h, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    const double dz = dlogits[r];
    const double* w2 = params.data() + off + r * h;
    double* g2 = g.data() + off + r * h;
    for (std::size_t c = 0; c < h; ++c) {
      g2[c] += dz * cache.hidden[c];
      dhidden[c] += dz * w2[c];
    }
    g[off + k * h + r] += dz;
  }
  for (std::size_t r = 0; r < h; ++r) {
    const double a = cache.hidden[r];
    const double dpre = dhidden[r] * (1.0 - a * a);
    if (dpre == 0.0) continue;
    double* g1 = g.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) g1[c] += dpre * x[c];
    g[h * d + r] += dpre;
  }
}

double mae_loss(std::span<const double> p, int label) {
  const double k = static_cast<double>(p.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double y = static_cast<int>(i) == label ? 1.0 : 0.0;
    s += std::abs(y - p[i]);
  }
  // On the simplex s <= 2; rounding in p must not push the loss past 2/K.
  return std::min(s, 2.0) / k;
}

double mae_loss(std::span<const double> p, const OneHotLabel& y) {
  if (p.size() != y.size()) throw ValidationError("mae_loss: length mismatch");
  return mae_loss(p, y.label());
}

void loss_grad_wrt_logits(std::span<const double> p, int label, double scale,
                          std::span<double> out) {
  // dl/dp_i = sign(p_i - y_i) / K, then through the softmax Jacobian
  // dp_i/dz_k = p_i (delta_ik - p_k).
  const std::size_t k = p.size();
  const double inv_k = 1.0 / static_cast<double>(k);
  std::array<double, 64> small{};
  std::vector<double> large;
  double* a = small.data();
  if (k > small.size()) {
    large.resize(k);
    a = large.data();
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double diff = p[i] - (static_cast<int>(i) == label ? 1.0 : 0.0);
    a[i] = diff > 0.0 ? inv_k : (diff < 0.0 ? -inv_k : 0.0);
    mean += p[i] * a[i];
  }
  for (std::size_t i = 0; i < k; ++i) out[i] += scale * p[i] * (a[i] - mean);
}

std::vector<double> loss_grad_wrt_logits(std::span<const double> p, const OneHotLabel& y) {
  if (p.size() != y.size()) throw ValidationError("loss_grad_wrt_logits: length mismatch");
  std::vector<double> out(p.size(), 0.0);
  loss_grad_wrt_logits(p, y.label(), 1.0, out);
  return out;
}

void sgd_step(SoftmaxModel& model, const GradientBuffer& grads, const SgdConfig& cfg) {
  if (!grads.compatible(model)) throw ValidationError("sgd_step: gradient shape mismatch");
  const auto g = grads.values();
  for (double v : g) {
    if (!std::isfinite(v)) throw RuntimeError("numerical divergence");
  }
  auto theta = model.params();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    theta[i] -= cfg.learning_rate * (g[i] + cfg.l2 * theta[i]);
  }
}

int argmax(std::span<const double> p) {
  int best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw RuntimeError("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("cannot parse number '" + text + "'");
  }
  return v;
}

// Text layout, one field per line:
//   cmpu-model 1
//   arch <linear|mlp>
//   dim <d>
//   classes <C>
//   hidden <h>
//   params <n>
//   <n lines, one parameter each, shortest round-trip decimal>
void save_model(const SoftmaxModel& model, std::ostream& out) {
  out << "cmpu-model 1\n"
      << "arch " << to_string(model.arch()) << '\n'
      << "dim " << model.dim() << '\n'
      << "classes " << model.num_positive() << '\n'
      << "hidden " << model.hidden() << '\n'
      << "params " << model.num_params() << '\n';
  for (double p : model.params()) out << format_double(p) << '\n';
}

SoftmaxModel load_model(std::istream& in) {
  auto field = [&in](const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("model file truncated before '" + key + "'");
    std::istringstream ls(line);
    std::string k, v;
    ls >> k >> v;
    if (k != key) throw ValidationError("model file: expected '" + key + "', got '" + k + "'");
    return v;
  };
  if (field("cmpu-model") != "1") throw ValidationError("model file: unsupported version");
  const Architecture arch = parse_architecture(field("arch"));
  const std::size_t d = std::stoul(field("dim"));
  const int c = std::stoi(field("classes"));
  const std::size_t h = std::stoul(field("hidden"));
  const std::size_t n = std::stoul(field("params"));
  SoftmaxModel model(arch, d, c, h);
  if (n != model.num_params()) throw ValidationError("model file: parameter count mismatch");
  std::string line;
  for (double& p : model.params()) {
    if (!std::getline(in, line)) throw ValidationError("model file: missing parameters");
    p = parse_double(line);
  }
  return model;
}

void save_model(const SoftmaxModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write " + path);
  save_model(model, out);
}

SoftmaxModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("cannot read " + path);
  return load_model(in);
}

}  // namespace cmpu
