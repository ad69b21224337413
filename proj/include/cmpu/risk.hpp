#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cmpu/core.hpp"
#include "cmpu/model.hpp"

namespace cmpu {

enum class EstimatorKind { kMpn, kMpuNaive, kMpuNn, kCmpu };

/// CLI names: mpn, mpu, mpu-nn, cmpu.
std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator(const std::string& name);

/// Which argument of the max won. kUpper is the unlabeled branch.
enum class Branch { kUpper, kLower, kNone };
std::string to_string(Branch branch);

/// Empirical risk terms of one batch.
struct RiskComponents {
  std::vector<double> rp_plus;   // mean loss of X_{P_i} against class i
  std::vector<double> rp_minus;  // mean loss of X_{P_i} against class 0
  double ru_minus = 0.0;         // mean loss of X_U against class 0

  /// sum_i pi_i * rp_plus[i]
  double weighted_positive(const ClassPriors& priors) const;
  /// sum_i pi_i * rp_minus[i]
  double weighted_positive_as_negative(const ClassPriors& priors) const;
  /// ru_minus - sum_i pi_i * rp_minus[i]; the term the non-negative estimators constrain.
  double unlabeled_term(const ClassPriors& priors) const;
};

struct CmpuConfig {
  double lambda = 0.2;
  /// Replace the lower-branch step with descent on minus the unlabeled term,
  /// as in the two-phase non-negative PU update.
  bool flip_lower_branch = false;

  void validate() const;
};

struct RiskReport {
  EstimatorKind kind = EstimatorKind::kMpuNaive;
  RiskComponents components;
  Branch branch = Branch::kNone;
  std::optional<double> tau;
  double total = 0.0;
  /// Loss on supervised negatives; only set for MPN.
  std::optional<double> rn_minus;
};

RiskComponents risk_components(const SoftmaxModel& model, const PuDataset& batch);

/// Mean loss of the given samples against one label.
double mean_loss(const SoftmaxModel& model, const Samples& samples, int label);

double mpn_risk(const RiskComponents& components, const ClassPriors& priors,
                double supervised_negatives_risk);
RiskReport mpn_report(const RiskComponents& components, const ClassPriors& priors,
                      double supervised_negatives_risk);
RiskReport mpu_naive_risk(const RiskComponents& components, const ClassPriors& priors);
RiskReport mpu_nn_risk(const RiskComponents& components, const ClassPriors& priors);
RiskReport cmpu_risk(const RiskComponents& components, const ClassPriors& priors,
                     const CmpuConfig& cfg);

/// Dispatches on kind. MPN requires the supervised negative risk.
RiskReport evaluate_risk(EstimatorKind kind, const RiskComponents& components,
                         const ClassPriors& priors, const CmpuConfig& cfg,
                         std::optional<double> supervised_negatives_risk = std::nullopt);

struct RiskGradient {
  GradientBuffer grad;
  RiskReport report;
};

/// Subgradient of the chosen estimator on this batch; the max is differentiated
/// through its winning branch. For MPN, `negatives` supplies X_N; when null the
/// unlabeled pool is used as negatives (the distant-supervision baseline).
RiskGradient risk_gradient(const SoftmaxModel& model, const PuDataset& batch,
                           const ClassPriors& priors, EstimatorKind kind, const CmpuConfig& cfg,
                           const Samples* negatives = nullptr);

/// One row per minibatch.
struct TraceRow {
  int epoch = 0;
  std::size_t batch = 0;
  RiskReport report;
  double sum_pi_rp_plus = 0.0;
  double sum_pi_rp_minus = 0.0;
};

using TraceSink = std::function<void(const TraceRow&)>;

struct TrainResult {
  SoftmaxModel model;
  std::vector<TraceRow> trace;
};

/// Minibatch SGD. Every batch holds at least one sample from each positive class
/// and from the unlabeled pool (and the negatives, for MPN with explicit negatives).
TrainResult train(SoftmaxModel model, const PuDataset& dataset, const ClassPriors& priors,
                  EstimatorKind kind, const CmpuConfig& cfg, const SgdConfig& sgd,
                  const TraceSink& sink = {}, const Samples* negatives = nullptr);

/// Header: epoch,batch,kind,total,ru_minus,sum_pi_rp_plus,sum_pi_rp_minus,branch,tau
void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out);

}  // namespace cmpu
