#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmpu {

/// Raised when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation fails at run time (divergence, I/O).
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Labels {0, 1, ..., C}; 0 is the negative class.
class LabelSpace {
 public:
  explicit LabelSpace(int num_positive_classes);

  int num_positive() const { return num_positive_; }
  int size() const { return num_positive_ + 1; }
  bool contains(int label) const { return label >= 0 && label <= num_positive_; }
  void check(int label) const;

 private:
  int num_positive_;
};

/// Priors pi_1..pi_C of the positive classes. pi_0 is implied.
class ClassPriors {
 public:
  explicit ClassPriors(std::vector<double> pi);

  int num_classes() const { return static_cast<int>(pi_.size()); }
  /// Prior of positive class i, 1-based.
  double operator[](int i) const { return pi_[static_cast<std::size_t>(i - 1)]; }
  const std::vector<double>& values() const { return pi_; }
  double positive_sum() const;
  double negative() const { return 1.0 - positive_sum(); }

 private:
  std::vector<double> pi_;
};

ClassPriors make_priors(std::vector<double> pi);

/// Row-major set of equal-length feature vectors.
class Samples {
 public:
  Samples() = default;
  explicit Samples(std::size_t dim) : dim_(dim) {}
  Samples(std::size_t dim, std::vector<double> data);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const { return data_.empty(); }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  void push_back(std::span<const double> x);
  void reserve(std::size_t n) { data_.reserve(n * dim_); }
  const std::vector<double>& data() const { return data_; }

  /// Copy of the rows whose indices are listed.
  Samples gather(std::span<const std::size_t> indices) const;

  friend bool operator==(const Samples&, const Samples&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// Labeled positives per class plus an unlabeled pool drawn from the marginal.
struct PuDataset {
  std::vector<Samples> positives;  // positives[i-1] holds class i
  Samples unlabeled;

  int num_classes() const { return static_cast<int>(positives.size()); }
  std::size_t dim() const { return unlabeled.dim(); }
  std::size_t total() const;

  friend bool operator==(const PuDataset&, const PuDataset&) = default;
};

/// Throws ValidationError on ragged dimensions or empty class lists.
PuDataset make_pu_dataset(std::vector<Samples> positives, Samples unlabeled);
void validate(const PuDataset& dataset);

/// Builds a dataset from nested vectors; rejects ragged input.
PuDataset make_pu_dataset(const std::vector<std::vector<std::vector<double>>>& positives,
                          const std::vector<std::vector<double>>& unlabeled);

/// Dense one-hot vector of length C+1.
class OneHotLabel {
 public:
  OneHotLabel(int label, const LabelSpace& space);

  int label() const { return label_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

 private:
  int label_;
  std::vector<double> values_;
};

/// splitmix64 finalizer; used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace cmpu
