#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cmpu/core.hpp"

namespace cmpu {

enum class Architecture { kLinear, kMlp };

std::string to_string(Architecture arch);
Architecture parse_architecture(const std::string& name);

/// Softmax scorer over C+1 classes. Parameters live in one flat vector:
///   linear: W (K x d), b (K)
///   mlp:    W1 (h x d), b1 (h), W2 (K x h), b2 (K), tanh hidden layer
/// with K = C+1, all matrices row-major.
class SoftmaxModel {
 public:
  /// Zero-initialized model.
  SoftmaxModel(Architecture arch, std::size_t dim, int num_positive, std::size_t hidden = 0);

  /// Parameters drawn uniformly from [-0.1, 0.1].
  static SoftmaxModel random(Architecture arch, std::size_t dim, int num_positive,
                             std::size_t hidden, std::uint64_t seed);

  Architecture arch() const { return arch_; }
  std::size_t dim() const { return dim_; }
  int num_positive() const { return num_positive_; }
  std::size_t num_outputs() const { return static_cast<std::size_t>(num_positive_) + 1; }
  std::size_t hidden() const { return hidden_; }
  std::size_t num_params() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  /// Output-layer views; for the linear model these are W and b.
  std::span<double> output_weights();
  std::span<double> output_bias();

  bool same_shape(const SoftmaxModel& other) const;

  friend bool operator==(const SoftmaxModel&, const SoftmaxModel&) = default;

 private:
  Architecture arch_;
  std::size_t dim_;
  int num_positive_;
  std::size_t hidden_;
  std::vector<double> params_;
};

/// Accumulator with the parameter layout of a model.
class GradientBuffer {
 public:
  explicit GradientBuffer(const SoftmaxModel& model) : values_(model.num_params(), 0.0) {}

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  void clear();
  void add_scaled(const GradientBuffer& other, double scale);
  bool compatible(const SoftmaxModel& model) const { return values_.size() == model.num_params(); }

 private:
  std::vector<double> values_;
};

struct SgdConfig {
  double learning_rate = 0.5;
  std::size_t batch_size = 256;
  int epochs = 10;
  double l2 = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Intermediate values kept for the backward pass.
struct ForwardCache {
  std::vector<double> hidden;  // tanh activations, empty for the linear model
  std::vector<double> probs;
};

std::vector<double> forward(const SoftmaxModel& model, std::span<const double> x);
void forward(const SoftmaxModel& model, std::span<const double> x, ForwardCache& cache);

/// Adds d(loss)/d(params) into grad given d(loss)/d(logits) at input x.
void backward(const SoftmaxModel& model, std::span<const double> x, const ForwardCache& cache,
              std::span<const double> dlogits, GradientBuffer& grad);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// (1/(C+1)) * sum_i |y_i - p_i|, bounded in [0, 2/(C+1)] on the simplex.
double mae_loss(std::span<const double> p, const OneHotLabel& y);
double mae_loss(std::span<const double> p, int label);

/// Gradient of mae_loss(softmax(z), y) with respect to z. The |.| kink uses subgradient 0.
std::vector<double> loss_grad_wrt_logits(std::span<const double> p, const OneHotLabel& y);
void loss_grad_wrt_logits(std::span<const double> p, int label, double scale,
                          std::span<double> out);

/// theta <- theta - lr * (grad + l2 * theta). Throws RuntimeError on non-finite gradients.
void sgd_step(SoftmaxModel& model, const GradientBuffer& grads, const SgdConfig& cfg);

/// Index of the largest probability; ties go to the lowest index.
int argmax(std::span<const double> p);

void save_model(const SoftmaxModel& model, std::ostream& out);
SoftmaxModel load_model(std::istream& in);
void save_model(const SoftmaxModel& model, const std::string& path);
SoftmaxModel load_model(const std::string& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(const std::string& text);

}  // namespace cmpu
