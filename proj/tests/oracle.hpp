#pragma once

// Reference computations written directly from the formulas, sharing no code
// with the library beyond the parameter layout of SoftmaxModel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cmpu/core.hpp"
#include "cmpu/model.hpp"

namespace oracle {

inline std::vector<double> probs(const cmpu::SoftmaxModel& m, std::span<const double> x) {
  const auto th = m.params();
  const std::size_t d = m.dim(), k = m.num_outputs();
  std::vector<double> input(x.begin(), x.end());
  std::size_t off = 0;
  std::size_t in_dim = d;
  if (m.arch() == cmpu::Architecture::kMlp) {
    const std::size_t h = m.hidden();
    std::vector<double> hid(h);
    for (std::size_t r = 0; r < h; ++r) {
      long double s = th[h * d + r];
      for (std::size_t c = 0; c < d; ++c) s += static_cast<long double>(th[r * d + c]) * x[c];
      hid[r] = std::tanh(static_cast<double>(s));
    }
    off = h * d + h;
    input = hid;
    in_dim = h;
  }
  std::vector<long double> z(k);
  for (std::size_t r = 0; r < k; ++r) {
    long double s = th[off + k * in_dim + r];
    for (std::size_t c = 0; c < in_dim; ++c) s += static_cast<long double>(th[off + r * in_dim + c]) * input[c];
    z[r] = s;
  }
  const long double mx = *std::max_element(z.begin(), z.end());
  long double sum = 0;
  for (auto& v : z) sum += (v = std::exp(v - mx));
  std::vector<double> p(k);
  for (std::size_t r = 0; r < k; ++r) p[r] = static_cast<double>(z[r] / sum);
  return p;
}

inline double mae(const std::vector<double>& p, int label) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs((static_cast<int>(i) == label ? 1.0 : 0.0) - p[i]);
  return s / static_cast<double>(p.size());
}

inline double avg_loss(const cmpu::SoftmaxModel& m, const cmpu::Samples& xs, int label) {
  double s = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) s += mae(probs(m, xs.row(j)), label);
  return s / static_cast<double>(xs.size());
}

struct Terms {
  double wp = 0.0;  // sum pi_i R_Pi^+
  double wn = 0.0;  // sum pi_i R_Pi^-
  double ru = 0.0;  // R_U^-
};

inline Terms terms(const cmpu::SoftmaxModel& m, const cmpu::PuDataset& ds, const cmpu::ClassPriors& pri) {
  Terms t;
  for (int i = 1; i <= ds.num_classes(); ++i) {
    const auto& xs = ds.positives[static_cast<std::size_t>(i - 1)];
    t.wp += pri[i] * avg_loss(m, xs, i);
    t.wn += pri[i] * avg_loss(m, xs, 0);
  }
  t.ru = avg_loss(m, ds.unlabeled, 0);
  return t;
}

/// kind: 0 mpn (U as negatives), 1 naive, 2 non-negative, 3 constrained.
inline double risk(int kind, const Terms& t, double pi0, double lambda) {
  switch (kind) {
    case 0: return t.wp + pi0 * t.ru;
    case 1: return t.wp + t.ru - t.wn;
    case 2: return t.wp + std::max(0.0, t.ru - t.wn);
    default: return t.wp + std::max(lambda * t.wp, t.ru - t.wn);
  }
}

}  // namespace oracle
