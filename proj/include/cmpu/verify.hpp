#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cmpu/core.hpp"
#include "cmpu/model.hpp"
#include "cmpu/risk.hpp"
#include "cmpu/synthgen.hpp"

namespace cmpu {

/// Linear scorer f_k(x) = sharpness * (m_k . x - |m_k|^2 / 2) over the mixture means.
SoftmaxModel nearest_mean_model(const MixtureSpec& spec, double sharpness = 1.0);

struct OracleRisk {
  RiskComponents components;  // rp_plus, rp_minus on class samples; ru_minus unused
  double rn_minus = 0.0;
  double risk = 0.0;          // supervised risk with the mixture priors
  double stderr_risk = 0.0;   // sampling error of `risk`
  std::size_t samples_per_class = 0;
};

/// Plug-in estimate of R(f) from n fresh samples per class, streamed.
OracleRisk oracle_risk(const SoftmaxModel& model, const MixtureSpec& spec, std::size_t n,
                       std::uint64_t seed);

struct UnbiasednessConfig {
  std::size_t trials = 10000;
  std::vector<std::size_t> n_p{100, 100};
  std::size_t n_u = 100;
  std::size_t oracle_samples = 4000000;
  std::uint64_t seed = 11;
  std::size_t workers = 1;
  /// Priors plugged into the estimator; the mixture priors when unset.
  std::optional<ClassPriors> estimator_priors;

  void validate(const MixtureSpec& spec) const;
};

struct UnbiasednessResult {
  std::size_t trials = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double oracle = 0.0;
  double oracle_std_error = 0.0;
  double z = 0.0;
  bool passed = false;  // |z| < 3
};

/// Mean of the naive MPU estimate over independent PU draws against the oracle risk.
UnbiasednessResult check_unbiasedness(const MixtureSpec& spec, const SoftmaxModel& model,
                                      const UnbiasednessConfig& cfg);

struct RateConfig {
  std::vector<std::size_t> sizes{100, 400, 1600, 6400};
  std::size_t trials = 200;
  /// n_{P_i} = ceil(positive_fraction * n); n_U = n.
  double positive_fraction = 0.5;
  CmpuConfig cmpu;
  std::size_t oracle_samples = 4000000;
  std::size_t bootstrap = 1000;
  std::uint64_t seed = 13;
  std::size_t workers = 1;
  double slope_low = -0.65;
  double slope_high = -0.35;

  void validate() const;
};

struct RateCheckResult {
  std::vector<std::size_t> sample_sizes;
  std::vector<double> rms_errors;
  double loglog_slope = 0.0;
  std::pair<double, double> slope_ci{0.0, 0.0};  // 95% percentile bootstrap
  double oracle = 0.0;
  bool passed = false;  // slope within [slope_low, slope_high]
};

/// RMS of |R_cmpu_hat - R| at each size and the least-squares slope of log rms on log n.
RateCheckResult check_consistency_rate(const MixtureSpec& spec, const SoftmaxModel& model,
                                       const RateConfig& cfg);

/// Least-squares slope of y on x.
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ProbeTrace {
  EstimatorKind kind = EstimatorKind::kMpuNaive;
  std::vector<TraceRow> trace;
  /// Smallest R_U^- - sum_i pi_i R_Pi^- seen at any batch.
  double min_unlabeled_term = 0.0;
  /// Batches where a CMPU total fell below (1 + lambda) * sum_i pi_i R_Pi^+.
  std::size_t bound_violations = 0;
};

struct OverfitProbeResult {
  std::vector<ProbeTrace> runs;
  bool naive_went_negative = false;
  bool cmpu_bound_held = false;
  bool passed = false;
};

/// Trains a fresh MLP per kind on the same data and records every batch.
OverfitProbeResult overfit_probe(const PuDataset& dataset, const ClassPriors& priors,
                                 const std::vector<EstimatorKind>& kinds, const SgdConfig& sgd,
                                 const CmpuConfig& cfg, std::size_t hidden, std::uint64_t seed);

nlohmann::ordered_json to_json(const UnbiasednessResult& r);
nlohmann::ordered_json to_json(const RateCheckResult& r);
nlohmann::ordered_json to_json(const OverfitProbeResult& r);

}  // namespace cmpu
