#include "cmpu/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace cmpu {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kMpn: return "mpn";
    case EstimatorKind::kMpuNaive: return "mpu";
    case EstimatorKind::kMpuNn: return "mpu-nn";
    case EstimatorKind::kCmpu: return "cmpu";
  }
  return "?";
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "mpn") return EstimatorKind::kMpn;
  if (name == "mpu") return EstimatorKind::kMpuNaive;
  if (name == "mpu-nn") return EstimatorKind::kMpuNn;
  if (name == "cmpu") return EstimatorKind::kCmpu;
  throw ValidationError("unknown estimator '" + name + "' (expected mpn|mpu|mpu-nn|cmpu)");
}

std::string to_string(Branch branch) {
  switch (branch) {
    case Branch::kUpper: return "upper";
    case Branch::kLower: return "lower";
    case Branch::kNone: return "na";
  }
  return "?";
}

double RiskComponents::weighted_positive(const ClassPriors& priors) const {
  double s = 0.0;
  for (int i = 1; i <= priors.num_classes(); ++i) s += priors[i] * rp_plus[static_cast<std::size_t>(i - 1)];
  return s;
}

double RiskComponents::weighted_positive_as_negative(const ClassPriors& priors) const {
  double s = 0.0;
  for (int i = 1; i <= priors.num_classes(); ++i) s += priors[i] * rp_minus[static_cast<std::size_t>(i - 1)];
  return s;
}

double RiskComponents::unlabeled_term(const ClassPriors& priors) const {
  return ru_minus - weighted_positive_as_negative(priors);
}

void CmpuConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be > 0");
}

namespace {

void check_shape(const RiskComponents& c, const ClassPriors& priors) {
  const auto n = static_cast<std::size_t>(priors.num_classes());
  if (c.rp_plus.size() != n || c.rp_minus.size() != n) {
    throw ValidationError("risk components and priors disagree on the number of classes");
  }
}

}  // namespace

double mean_loss(const SoftmaxModel& model, const Samples& samples, int label) {
  if (samples.size() == 0) throw ValidationError("mean_loss: empty sample set");
  ForwardCache cache;
  double s = 0.0;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    forward(model, samples.row(j), cache);
    s += mae_loss(cache.probs, label);
  }
  return s / static_cast<double>(samples.size());
}

RiskComponents risk_components(const SoftmaxModel& model, const PuDataset& batch) {
  validate(batch);
  if (batch.num_classes() != model.num_positive()) {
    throw ValidationError("risk_components: model and batch disagree on C");
  }
  RiskComponents c;
  ForwardCache cache;
  for (int i = 1; i <= batch.num_classes(); ++i) {
    const Samples& xs = batch.positives[static_cast<std::size_t>(i - 1)];
    double plus = 0.0, minus = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      forward(model, xs.row(j), cache);
      plus += mae_loss(cache.probs, i);
      minus += mae_loss(cache.probs, 0);
    }
    c.rp_plus.push_back(plus / static_cast<double>(xs.size()));
    c.rp_minus.push_back(minus / static_cast<double>(xs.size()));
  }
  c.ru_minus = mean_loss(model, batch.unlabeled, 0);
  return c;
}

double mpn_risk(const RiskComponents& components, const ClassPriors& priors,
                double supervised_negatives_risk) {
  check_shape(components, priors);
  return components.weighted_positive(priors) + priors.negative() * supervised_negatives_risk;
}

RiskReport mpn_report(const RiskComponents& components, const ClassPriors& priors,
                      double supervised_negatives_risk) {
  RiskReport r;
  r.kind = EstimatorKind::kMpn;
  r.components = components;
  r.total = mpn_risk(components, priors, supervised_negatives_risk);
  r.rn_minus = supervised_negatives_risk;
  return r;
}

RiskReport mpu_naive_risk(const RiskComponents& components, const ClassPriors& priors) {
  check_shape(components, priors);
  RiskReport r;
  r.kind = EstimatorKind::kMpuNaive;
  r.components = components;
  r.total = components.weighted_positive(priors) + components.unlabeled_term(priors);
  return r;
}

RiskReport mpu_nn_risk(const RiskComponents& components, const ClassPriors& priors) {
  check_shape(components, priors);
  RiskReport r;
  r.kind = EstimatorKind::kMpuNn;
  r.components = components;
  const double term = components.unlabeled_term(priors);
  r.branch = term >= 0.0 ? Branch::kUpper : Branch::kLower;
  r.total = components.weighted_positive(priors) + std::max(0.0, term);
  return r;
}

RiskReport cmpu_risk(const RiskComponents& components, const ClassPriors& priors,
                     const CmpuConfig& cfg) {
  cfg.validate();
  check_shape(components, priors);
  RiskReport r;
  r.kind = EstimatorKind::kCmpu;
  r.components = components;
  const double weighted = components.weighted_positive(priors);
  const double term = components.unlabeled_term(priors);
  const double floor = cfg.lambda * weighted;
  if (weighted > 0.0) {
    r.tau = term / weighted;
    r.branch = *r.tau < cfg.lambda ? Branch::kLower : Branch::kUpper;
  } else {
    r.branch = term >= floor ? Branch::kUpper : Branch::kLower;
  }
  // The branch follows tau; the total is the max itself, so rounding in the
  // division can never move it off either argument.
  r.total = weighted + std::max(floor, term);
  return r;
}

RiskReport evaluate_risk(EstimatorKind kind, const RiskComponents& components,
                         const ClassPriors& priors, const CmpuConfig& cfg,
                         std::optional<double> supervised_negatives_risk) {
  switch (kind) {
    case EstimatorKind::kMpn:
      if (!supervised_negatives_risk) {
        throw ValidationError("mpn risk needs a supervised negative risk");
      }
      return mpn_report(components, priors, *supervised_negatives_risk);
    case EstimatorKind::kMpuNaive: return mpu_naive_risk(components, priors);
    case EstimatorKind::kMpuNn: return mpu_nn_risk(components, priors);
    case EstimatorKind::kCmpu: return cmpu_risk(components, priors, cfg);
  }
  throw ValidationError("unknown estimator");
}

namespace {

// total = plus * sum pi_i R_Pi^+ + unl * R_U^- + minus * sum pi_i R_Pi^- + neg * R_N^-
struct Coefficients {
  double plus = 0.0;
  double unl = 0.0;
  double minus = 0.0;
  double neg = 0.0;
};

Coefficients coefficients_for(const RiskReport& report, const ClassPriors& priors,
                              const CmpuConfig& cfg) {
  const Coefficients naive{1.0, 1.0, -1.0, 0.0};
  const Coefficients flipped{0.0, -1.0, 1.0, 0.0};
  switch (report.kind) {
    case EstimatorKind::kMpn: return {1.0, 0.0, 0.0, priors.negative()};
    case EstimatorKind::kMpuNaive: return naive;
    case EstimatorKind::kMpuNn:
      if (report.branch == Branch::kUpper) return naive;
      return cfg.flip_lower_branch ? flipped : Coefficients{1.0, 0.0, 0.0, 0.0};
    case EstimatorKind::kCmpu:
      if (report.branch == Branch::kUpper) return naive;
      return cfg.flip_lower_branch ? flipped : Coefficients{1.0 + cfg.lambda, 0.0, 0.0, 0.0};
  }
  return naive;
}

struct CachedSet {
  std::vector<ForwardCache> caches;
  double mean_loss_neg = 0.0;  // against class 0
  double mean_loss_own = 0.0;  // against the set's own class (positives only)
};

CachedSet run_forward(const SoftmaxModel& model, const Samples& xs, int own_label) {
  CachedSet out;
  out.caches.resize(xs.size());
  double neg = 0.0, own = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    forward(model, xs.row(j), out.caches[j]);
    neg += mae_loss(out.caches[j].probs, 0);
    if (own_label > 0) own += mae_loss(out.caches[j].probs, own_label);
  }
  const auto n = static_cast<double>(xs.size());
  out.mean_loss_neg = neg / n;
  out.mean_loss_own = own / n;
  return out;
}

}  // namespace

RiskGradient risk_gradient(const SoftmaxModel& model, const PuDataset& batch,
                           const ClassPriors& priors, EstimatorKind kind, const CmpuConfig& cfg,
                           const Samples* negatives) {
  validate(batch);
  if (batch.num_classes() != model.num_positive() || priors.num_classes() != model.num_positive()) {
    throw ValidationError("risk_gradient: model, batch and priors disagree on C");
  }
  const bool mpn = kind == EstimatorKind::kMpn;
  const Samples& neg_set = (mpn && negatives != nullptr) ? *negatives : batch.unlabeled;
  if (mpn && neg_set.size() == 0) throw ValidationError("risk_gradient: mpn needs negatives");

  std::vector<CachedSet> pos;
  RiskComponents comps;
  for (int i = 1; i <= batch.num_classes(); ++i) {
    pos.push_back(run_forward(model, batch.positives[static_cast<std::size_t>(i - 1)], i));
    comps.rp_plus.push_back(pos.back().mean_loss_own);
    comps.rp_minus.push_back(pos.back().mean_loss_neg);
  }
  CachedSet unl = run_forward(model, batch.unlabeled, 0);
  comps.ru_minus = unl.mean_loss_neg;
  std::optional<CachedSet> neg_cache;
  std::optional<double> rn;
  if (mpn) {
    if (&neg_set == &batch.unlabeled) {
      rn = unl.mean_loss_neg;
    } else {
      neg_cache = run_forward(model, neg_set, 0);
      rn = neg_cache->mean_loss_neg;
    }
  }

  RiskGradient out{GradientBuffer(model), evaluate_risk(kind, comps, priors, cfg, rn)};
  const Coefficients k = coefficients_for(out.report, priors, cfg);
  std::vector<double> dlogits(model.num_outputs());

  for (int i = 1; i <= batch.num_classes(); ++i) {
    const Samples& xs = batch.positives[static_cast<std::size_t>(i - 1)];
    const double w = priors[i] / static_cast<double>(xs.size());
    if (k.plus == 0.0 && k.minus == 0.0) continue;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const auto& cache = pos[static_cast<std::size_t>(i - 1)].caches[j];
      std::fill(dlogits.begin(), dlogits.end(), 0.0);
      if (k.plus != 0.0) loss_grad_wrt_logits(cache.probs, i, k.plus * w, dlogits);
      if (k.minus != 0.0) loss_grad_wrt_logits(cache.probs, 0, k.minus * w, dlogits);
      backward(model, xs.row(j), cache, dlogits, out.grad);
    }
  }

  // With the unlabeled pool standing in for negatives, both terms share one pass.
  double unl_weight = k.unl;
  if (mpn && !neg_cache) unl_weight += k.neg;
  if (unl_weight != 0.0) {
    const double w = unl_weight / static_cast<double>(batch.unlabeled.size());
    for (std::size_t j = 0; j < batch.unlabeled.size(); ++j) {
      std::fill(dlogits.begin(), dlogits.end(), 0.0);
      loss_grad_wrt_logits(unl.caches[j].probs, 0, w, dlogits);
      backward(model, batch.unlabeled.row(j), unl.caches[j], dlogits, out.grad);
    }
  }
  if (neg_cache && k.neg != 0.0) {
    const double w = k.neg / static_cast<double>(neg_set.size());
    for (std::size_t j = 0; j < neg_set.size(); ++j) {
      std::fill(dlogits.begin(), dlogits.end(), 0.0);
      loss_grad_wrt_logits(neg_cache->caches[j].probs, 0, w, dlogits);
      backward(model, neg_set.row(j), neg_cache->caches[j], dlogits, out.grad);
    }
  }
  return out;
}

namespace {

// Splits a shuffled pool into nb slices; a pool smaller than nb repeats elements
// so that no slice is empty.
void slice_indices(const std::vector<std::size_t>& perm, std::size_t nb, std::size_t b,
                   std::vector<std::size_t>& out) {
  out.clear();
  const std::size_t n = perm.size();
  const std::size_t lo = b * n / nb;
  const std::size_t hi = (b + 1) * n / nb;
  for (std::size_t k = lo; k < hi; ++k) out.push_back(perm[k]);
  if (out.empty()) out.push_back(perm[b % n]);
}

std::vector<std::size_t> iota_vec(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

TrainResult train(SoftmaxModel model, const PuDataset& dataset, const ClassPriors& priors,
                  EstimatorKind kind, const CmpuConfig& cfg, const SgdConfig& sgd,
                  const TraceSink& sink, const Samples* negatives) {
  validate(dataset);
  sgd.validate();
  cfg.validate();
  if (dataset.dim() != model.dim()) throw ValidationError("train: dataset and model dimensions differ");
  if (dataset.num_classes() != model.num_positive() || priors.num_classes() != model.num_positive()) {
    throw ValidationError("train: model, dataset and priors disagree on C");
  }
  const bool explicit_neg = kind == EstimatorKind::kMpn && negatives != nullptr;
  if (explicit_neg && (negatives->size() == 0 || negatives->dim() != model.dim())) {
    throw ValidationError("train: invalid negative set");
  }

  TrainResult result{std::move(model), {}};
  std::mt19937_64 rng(sgd.seed);
  const std::size_t classes = dataset.positives.size();
  std::vector<std::vector<std::size_t>> pos_perm(classes);
  for (std::size_t i = 0; i < classes; ++i) pos_perm[i] = iota_vec(dataset.positives[i].size());
  std::vector<std::size_t> unl_perm = iota_vec(dataset.unlabeled.size());
  std::vector<std::size_t> neg_perm = explicit_neg ? iota_vec(negatives->size()) : std::vector<std::size_t>{};

  std::size_t total = dataset.total() + neg_perm.size();
  const std::size_t nb = std::max<std::size_t>(1, (total + sgd.batch_size - 1) / sgd.batch_size);

  std::vector<std::size_t> idx;
  for (int epoch = 0; epoch < sgd.epochs; ++epoch) {
    for (auto& p : pos_perm) std::shuffle(p.begin(), p.end(), rng);
    std::shuffle(unl_perm.begin(), unl_perm.end(), rng);
    if (explicit_neg) std::shuffle(neg_perm.begin(), neg_perm.end(), rng);

    for (std::size_t b = 0; b < nb; ++b) {
      PuDataset batch;
      for (std::size_t i = 0; i < classes; ++i) {
        slice_indices(pos_perm[i], nb, b, idx);
        batch.positives.push_back(dataset.positives[i].gather(idx));
      }
      slice_indices(unl_perm, nb, b, idx);
      batch.unlabeled = dataset.unlabeled.gather(idx);
      Samples neg_batch;
      if (explicit_neg) {
        slice_indices(neg_perm, nb, b, idx);
        neg_batch = negatives->gather(idx);
      }

      RiskGradient rg = risk_gradient(result.model, batch, priors, kind, cfg,
                                      explicit_neg ? &neg_batch : nullptr);
      if (!std::isfinite(rg.report.total)) {
        throw RuntimeError("train: non-finite risk at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b));
      }
      TraceRow row{epoch, b, rg.report, rg.report.components.weighted_positive(priors),
                   rg.report.components.weighted_positive_as_negative(priors)};
      sgd_step(result.model, rg.grad, sgd);
      if (sink) sink(row);
      result.trace.push_back(std::move(row));
    }
  }
  return result;
}

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out) {
  out << "epoch,batch,kind,total,ru_minus,sum_pi_rp_plus,sum_pi_rp_minus,branch,tau\n";
  for (const auto& row : trace) {
    out << row.epoch << ',' << row.batch << ',' << to_string(row.report.kind) << ','
        << format_double(row.report.total) << ',' << format_double(row.report.components.ru_minus)
        << ',' << format_double(row.sum_pi_rp_plus) << ',' << format_double(row.sum_pi_rp_minus)
        << ',' << to_string(row.report.branch) << ','
        << (row.report.tau ? format_double(*row.report.tau) : std::string()) << '\n';
  }
}

}  // namespace cmpu
