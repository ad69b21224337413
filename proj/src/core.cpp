#include "cmpu/core.hpp"
#include "cmpu/parallel.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>

namespace cmpu {

LabelSpace::LabelSpace(int num_positive_classes) : num_positive_(num_positive_classes) {
  if (num_positive_classes < 1) {
    throw ValidationError("label space needs at least one positive class");
  }
}

void LabelSpace::check(int label) const {
  if (!contains(label)) {
    throw ValidationError("label " + std::to_string(label) + " outside {0.." +
                          std::to_string(num_positive_) + "}");
  }
}

ClassPriors::ClassPriors(std::vector<double> pi) : pi_(std::move(pi)) {
  if (pi_.empty()) throw ValidationError("priors: need at least one positive class");
  for (double p : pi_) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError("prior must be positive");
  }
  if (!(positive_sum() < 1.0)) throw ValidationError("priors sum >= 1");
}

double ClassPriors::positive_sum() const {
  return std::accumulate(pi_.begin(), pi_.end(), 0.0);
}

ClassPriors make_priors(std::vector<double> pi) { return ClassPriors(std::move(pi)); }

Samples::Samples(std::size_t dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {
  if (dim_ == 0 && !data_.empty()) throw ValidationError("samples: zero dimension with data");
  if (dim_ != 0 && data_.size() % dim_ != 0) {
    throw ValidationError("samples: data length is not a multiple of the dimension");
  }
}

void Samples::push_back(std::span<const double> x) {
  if (x.size() != dim_) {
    throw ValidationError("samples: vector of dimension " + std::to_string(x.size()) +
                          " pushed into set of dimension " + std::to_string(dim_));
  }
  data_.insert(data_.end(), x.begin(), x.end());
}

Samples Samples::gather(std::span<const std::size_t> indices) const {
  Samples out(dim_);
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(row(i));
  return out;
}

std::size_t PuDataset::total() const {
  std::size_t n = unlabeled.size();
  for (const auto& p : positives) n += p.size();
  return n;
}

void validate(const PuDataset& dataset) {
  if (dataset.positives.empty()) throw ValidationError("dataset: no positive classes");
  const std::size_t d = dataset.unlabeled.dim();
  if (d == 0) throw ValidationError("dataset: zero feature dimension");
  if (dataset.unlabeled.size() == 0) throw ValidationError("dataset: n_U = 0");
  for (std::size_t i = 0; i < dataset.positives.size(); ++i) {
    const auto& p = dataset.positives[i];
    if (p.size() == 0) {
      throw ValidationError("dataset: n_{P_" + std::to_string(i + 1) + "} = 0");
    }
    if (p.dim() != d) throw ValidationError("dataset: ragged feature dimensions");
  }
}

PuDataset make_pu_dataset(std::vector<Samples> positives, Samples unlabeled) {
  PuDataset ds{std::move(positives), std::move(unlabeled)};
  validate(ds);
  return ds;
}

PuDataset make_pu_dataset(const std::vector<std::vector<std::vector<double>>>& positives,
                          const std::vector<std::vector<double>>& unlabeled) {
  if (unlabeled.empty()) throw ValidationError("dataset: n_U = 0");
  const std::size_t d = unlabeled.front().size();
  auto pack = [d](const std::vector<std::vector<double>>& rows) {
    Samples s(d);
    for (const auto& r : rows) {
      if (r.size() != d) throw ValidationError("dataset: ragged feature dimensions");
      s.push_back(r);
    }
    return s;
  };
  std::vector<Samples> pos;
  pos.reserve(positives.size());
  for (const auto& p : positives) pos.push_back(pack(p));
  return make_pu_dataset(std::move(pos), pack(unlabeled));
}

OneHotLabel::OneHotLabel(int label, const LabelSpace& space)
    : label_(label), values_(static_cast<std::size_t>(space.size()), 0.0) {
  space.check(label);
  values_[static_cast<std::size_t>(label)] = 1.0;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t worker_count() {
  if (const char* env = std::getenv("CMPU_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
    throw ValidationError("CMPU_WORKERS must be a positive integer");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace cmpu
