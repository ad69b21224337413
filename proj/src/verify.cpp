#include "cmpu/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cmpu/parallel.hpp"

namespace cmpu {

SoftmaxModel nearest_mean_model(const MixtureSpec& spec, double sharpness) {
  spec.validate();
  SoftmaxModel m(Architecture::kLinear, spec.dim, spec.num_classes, 0);
  auto w = m.output_weights();
  auto b = m.output_bias();
  for (std::size_t k = 0; k < spec.means.size(); ++k) {
    double sq = 0.0;
    for (std::size_t j = 0; j < spec.dim; ++j) {
      w[k * spec.dim + j] = sharpness * spec.means[k][j];
      sq += spec.means[k][j] * spec.means[k][j];
    }
    b[k] = -0.5 * sharpness * sq;
  }
  return m;
}

OracleRisk oracle_risk(const SoftmaxModel& model, const MixtureSpec& spec, std::size_t n,
                       std::uint64_t seed) {
  spec.validate();
  if (n < 2) throw ValidationError("oracle: need at least two samples per class");
  if (model.dim() != spec.dim || model.num_positive() != spec.num_classes) {
    throw ValidationError("oracle: model does not match the mixture");
  }
  OracleRisk out;
  out.samples_per_class = n;
  const double dn = static_cast<double>(n);
  std::vector<double> x(spec.dim);
  ForwardCache cache;
  double variance = 0.0;
  for (int y = 0; y <= spec.num_classes; ++y) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(y)));
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto& mean = spec.means[static_cast<std::size_t>(y)];
    double s_own = 0.0, s_own2 = 0.0, s_neg = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < spec.dim; ++k) x[k] = mean[k] + spec.scale * normal(rng);
      forward(model, x, cache);
      const double own = mae_loss(cache.probs, y);
      s_own += own;
      s_own2 += own * own;
      if (y > 0) s_neg += mae_loss(cache.probs, 0);
    }
    const double m = s_own / dn;
    const double var = std::max(0.0, (s_own2 / dn - m * m) * dn / (dn - 1.0));
    const double weight = y == 0 ? spec.priors.negative() : spec.priors[y];
    variance += weight * weight * var / dn;
    if (y == 0) {
      out.rn_minus = m;
    } else {
      out.components.rp_plus.push_back(m);
      out.components.rp_minus.push_back(s_neg / dn);
    }
  }
  out.risk = mpn_risk(out.components, spec.priors, out.rn_minus);
  out.stderr_risk = std::sqrt(variance);
  return out;
}

void UnbiasednessConfig::validate(const MixtureSpec& spec) const {
  if (trials < 1000) throw ValidationError("unbiasedness: need K >= 1000 resamples");
  if (n_p.size() != static_cast<std::size_t>(spec.num_classes)) {
    throw ValidationError("unbiasedness: need one positive count per class");
  }
  if (oracle_samples < 1000000) throw ValidationError("unbiasedness: oracle needs >= 1e6 samples");
  if (estimator_priors && estimator_priors->num_classes() != spec.num_classes) {
    throw ValidationError("unbiasedness: estimator priors have the wrong length");
  }
}

UnbiasednessResult check_unbiasedness(const MixtureSpec& spec, const SoftmaxModel& model,
                                      const UnbiasednessConfig& cfg) {
  cfg.validate(spec);
  const ClassPriors priors = cfg.estimator_priors.value_or(spec.priors);
  std::vector<double> values(cfg.trials);
  parallel_for(cfg.trials, cfg.workers, [&](std::size_t k) {
    MixtureSpec s = spec;
    s.seed = mix_seed(cfg.seed, k);
    const PuSample draw = sample_pu_dataset(s, cfg.n_p, cfg.n_u);
    values[k] = mpu_naive_risk(risk_components(model, draw.dataset), priors).total;
  });
  UnbiasednessResult r;
  r.trials = cfg.trials;
  const double n = static_cast<double>(cfg.trials);
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std_error = std::sqrt(ss / (n - 1.0) / n);
  const OracleRisk oracle = oracle_risk(model, spec, cfg.oracle_samples, mix_seed(cfg.seed, ~0ULL));
  r.oracle = oracle.risk;
  r.oracle_std_error = oracle.stderr_risk;
  r.z = r.std_error > 0.0 ? (r.mean - r.oracle) / r.std_error : 0.0;
  r.passed = std::abs(r.z) < 3.0;
  return r;
}

void RateConfig::validate() const {
  if (sizes.size() < 4) throw ValidationError("rate check: need at least four sizes");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw ValidationError("rate check: sizes must increase");
  }
  if (sizes.front() < 1) throw ValidationError("rate check: sizes must be positive");
  if (trials < 200) throw ValidationError("rate check: need at least 200 trials per size");
  if (!(positive_fraction > 0.0)) throw ValidationError("rate check: positive_fraction must be > 0");
  if (oracle_samples < 1000000) throw ValidationError("rate check: oracle needs >= 1e6 samples");
  cmpu.validate();
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw ValidationError("slope: x values are all equal");
  return sxy / sxx;
}

namespace {

double rms(const std::vector<double>& errors) {
  double s = 0.0;
  for (double e : errors) s += e * e;
  return std::sqrt(s / static_cast<double>(errors.size()));
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

RateCheckResult check_consistency_rate(const MixtureSpec& spec, const SoftmaxModel& model,
                                       const RateConfig& cfg) {
  spec.validate();
  cfg.validate();
  const OracleRisk oracle = oracle_risk(model, spec, cfg.oracle_samples, mix_seed(cfg.seed, ~0ULL));
  const std::size_t n_sizes = cfg.sizes.size();
  std::vector<std::vector<double>> errors(n_sizes, std::vector<double>(cfg.trials));
  parallel_for(n_sizes * cfg.trials, cfg.workers, [&](std::size_t job) {
    const std::size_t si = job / cfg.trials;
    const std::size_t t = job % cfg.trials;
    const std::size_t n = cfg.sizes[si];
    const auto n_p = static_cast<std::size_t>(std::ceil(cfg.positive_fraction * static_cast<double>(n)));
    MixtureSpec s = spec;
    s.seed = mix_seed(mix_seed(cfg.seed, si), t);
    const PuSample draw = sample_pu_dataset(s, std::vector<std::size_t>(static_cast<std::size_t>(spec.num_classes), n_p), n);
    errors[si][t] = cmpu_risk(risk_components(model, draw.dataset), spec.priors, cfg.cmpu).total - oracle.risk;
  });

  RateCheckResult r;
  r.oracle = oracle.risk;
  r.sample_sizes = cfg.sizes;
  std::vector<double> log_n;
  std::vector<double> log_rms;
  for (std::size_t si = 0; si < n_sizes; ++si) {
    r.rms_errors.push_back(rms(errors[si]));
    log_n.push_back(std::log(static_cast<double>(cfg.sizes[si])));
    log_rms.push_back(std::log(r.rms_errors.back()));
  }
  r.loglog_slope = least_squares_slope(log_n, log_rms);

  std::mt19937_64 rng(mix_seed(cfg.seed, 0xb007ULL));
  std::uniform_int_distribution<std::size_t> pick(0, cfg.trials - 1);
  std::vector<double> slopes;
  std::vector<double> resample(cfg.trials);
  for (std::size_t b = 0; b < cfg.bootstrap; ++b) {
    std::vector<double> y;
    for (std::size_t si = 0; si < n_sizes; ++si) {
      for (auto& e : resample) e = errors[si][pick(rng)];
      y.push_back(std::log(rms(resample)));
    }
    slopes.push_back(least_squares_slope(log_n, y));
  }
  if (!slopes.empty()) r.slope_ci = {percentile(slopes, 0.025), percentile(slopes, 0.975)};
  r.passed = r.loglog_slope >= cfg.slope_low && r.loglog_slope <= cfg.slope_high;
  return r;
}

OverfitProbeResult overfit_probe(const PuDataset& dataset, const ClassPriors& priors,
                                 const std::vector<EstimatorKind>& kinds, const SgdConfig& sgd,
                                 const CmpuConfig& cfg, std::size_t hidden, std::uint64_t seed) {
  validate(dataset);
  if (kinds.empty()) throw ValidationError("overfit probe: no estimators requested");
  if (hidden == 0) throw ValidationError("overfit probe: the MLP needs hidden units");
  OverfitProbeResult out;
  bool saw_naive = false, saw_cmpu = false;
  out.naive_went_negative = false;
  out.cmpu_bound_held = true;
  for (EstimatorKind kind : kinds) {
    const SoftmaxModel init = SoftmaxModel::random(Architecture::kMlp, dataset.dim(),
                                                   dataset.num_classes(), hidden, seed);
    TrainResult res = train(init, dataset, priors, kind, cfg, sgd);
    ProbeTrace p;
    p.kind = kind;
    p.min_unlabeled_term = std::numeric_limits<double>::infinity();
    for (const TraceRow& row : res.trace) {
      p.min_unlabeled_term = std::min(p.min_unlabeled_term, row.report.components.unlabeled_term(priors));
      if (kind == EstimatorKind::kCmpu) {
        const double w = row.sum_pi_rp_plus;
        if (row.report.total < w + cfg.lambda * w) ++p.bound_violations;
      }
    }
    if (kind == EstimatorKind::kMpuNaive) {
      saw_naive = true;
      out.naive_went_negative = out.naive_went_negative || p.min_unlabeled_term < 0.0;
    }
    if (kind == EstimatorKind::kCmpu) {
      saw_cmpu = true;
      out.cmpu_bound_held = out.cmpu_bound_held && p.bound_violations == 0;
    }
    p.trace = std::move(res.trace);
    out.runs.push_back(std::move(p));
  }
  out.passed = (!saw_naive || out.naive_went_negative) && (!saw_cmpu || out.cmpu_bound_held);
  return out;
}

nlohmann::ordered_json to_json(const UnbiasednessResult& r) {
  return {{"check", "unbiasedness"}, {"trials", r.trials},
          {"mean", r.mean},          {"std_error", r.std_error},
          {"oracle", r.oracle},      {"oracle_std_error", r.oracle_std_error},
          {"z", r.z},                {"passed", r.passed}};
}

nlohmann::ordered_json to_json(const RateCheckResult& r) {
  return {{"check", "consistency_rate"},
          {"sample_sizes", r.sample_sizes},
          {"rms_errors", r.rms_errors},
          {"loglog_slope", r.loglog_slope},
          {"slope_ci", {r.slope_ci.first, r.slope_ci.second}},
          {"oracle", r.oracle},
          {"passed", r.passed}};
}

nlohmann::ordered_json to_json(const OverfitProbeResult& r) {
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& p : r.runs) {
    runs.push_back({{"estimator", to_string(p.kind)},
                    {"batches", p.trace.size()},
                    {"min_unlabeled_term", p.min_unlabeled_term},
                    {"bound_violations", p.bound_violations}});
  }
  return {{"check", "overfit_probe"},
          {"runs", runs},
          {"naive_went_negative", r.naive_went_negative},
          {"cmpu_bound_held", r.cmpu_bound_held},
          {"passed", r.passed}};
}

}  // namespace cmpu
