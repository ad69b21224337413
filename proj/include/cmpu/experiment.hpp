#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "cmpu/corpus.hpp"
#include "cmpu/model.hpp"
#include "cmpu/ner_eval.hpp"
#include "cmpu/risk.hpp"
#include "cmpu/synthgen.hpp"
#include "cmpu/verify.hpp"

namespace cmpu {

inline constexpr const char* kLibraryVersion = "1.0.0";

enum class PriorMode {
  /// Class frequencies among the unlabeled pool, floored; taken from the
  /// generator's ground truth (the known-prior setting of PU learning).
  kPool,
  /// gamma times the distant-label frequencies.
  kEstimate,
  /// Values given in the config.
  kExplicit,
};

std::string to_string(PriorMode mode);
PriorMode parse_prior_mode(const std::string& name);

struct PriorConfig {
  PriorMode mode = PriorMode::kPool;
  double floor = 0.015;
  double gamma = 1.0;
  std::vector<double> values;
};

/// Everything a DS-NER run depends on. Seeds derive corpus, split, init and
/// shuffling streams; see derive_seed.
struct ExperimentConfig {
  CorpusSpec corpus = default_experiment_corpus();
  EstimatorKind estimator = EstimatorKind::kCmpu;
  CmpuConfig cmpu;
  SgdConfig sgd = default_experiment_sgd();
  Architecture arch = Architecture::kLinear;
  std::size_t hidden = 16;
  PriorConfig priors;
  double test_fraction = 0.2;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> lambdas{0.05, 0.1, 0.2, 0.5, 1.0, 2.0};
  std::vector<double> coverages{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<EstimatorKind> ablation_estimators{EstimatorKind::kMpn, EstimatorKind::kCmpu};

  static CorpusSpec default_experiment_corpus();
  static SgdConfig default_experiment_sgd();

  /// Checks every module precondition before any work starts.
  void validate() const;
};

enum class SeedStream : std::uint64_t { kCorpus = 1, kSplit = 2, kInit = 3, kShuffle = 4 };
std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream);

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected. Filler order is
/// part of the config, so only the ordered overload round-trips it exactly.
ExperimentConfig config_from_json(const nlohmann::ordered_json& j);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Hex FNV-1a of the canonical config JSON.
std::string config_hash(const ExperimentConfig& cfg);

/// Corpus with distant labels at the config's coverage, split into train/test.
struct PreparedData {
  TaggedCorpus train;  // distant labels filled in
  TaggedCorpus test;   // gold only used for scoring
  ClassPriors priors{std::vector<double>{0.1}};
  bool priors_floored = false;
};

PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t seed);

/// Priors the given estimator trains with. MPN, the naive supervised baseline,
/// always uses the distant-label frequencies.
ClassPriors training_priors(const ExperimentConfig& cfg, EstimatorKind kind,
                            const TaggedCorpus& train, bool* floored = nullptr);

struct RunResult {
  std::uint64_t seed = 0;
  EvalResult eval;
  std::vector<TraceRow> trace;
  SoftmaxModel model{Architecture::kLinear, 1, 1, 0};
};

/// generate -> distant-label -> corpus_to_pu -> train -> predict on held-out gold.
/// Errors carry the failing stage as a "stage: " prefix.
RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed);

/// In-memory output files: relative name -> contents.
using OutputFiles = std::map<std::string, std::string>;

/// Writes all files into dir; if any write fails, the files written so far are removed.
void write_outputs(const std::string& dir, const OutputFiles& files);

/// One run per config seed: eval.json, eval.csv, trace_seed<N>.csv, model_seed<N>.txt, manifest.json.
OutputFiles run_dsner(const ExperimentConfig& cfg, const std::string& command = "train");

struct SweepCell {
  EstimatorKind estimator = EstimatorKind::kCmpu;
  double lambda = 0.0;
  double coverage = 0.0;
  std::uint64_t seed = 0;
  EvalResult eval;

  auto key() const { return std::tuple(static_cast<int>(estimator), lambda, coverage, seed); }
};

struct SweepSummaryRow {
  EstimatorKind estimator = EstimatorKind::kCmpu;
  double lambda = 0.0;
  double coverage = 0.0;
  std::size_t runs = 0;
  double precision_mean = 0.0, precision_sd = 0.0;
  double recall_mean = 0.0, recall_sd = 0.0;
  double f1_mean = 0.0, f1_sd = 0.0;
};

/// Cells run on a CMPU_WORKERS-bounded pool; results come back sorted by cell key.
std::vector<SweepCell> run_cells(const ExperimentConfig& cfg, std::vector<SweepCell> cells,
                                 std::size_t workers);
std::vector<SweepSummaryRow> summarize(const std::vector<SweepCell>& cells);

/// sweep.csv (per cell), sweep_summary.csv (mean/sd over seeds), manifest.json.
OutputFiles run_lambda_sweep(const ExperimentConfig& cfg, std::size_t workers);
/// coverage.csv, coverage_summary.csv, manifest.json. Coverages must be nested (increasing).
OutputFiles run_coverage_ablation(const ExperimentConfig& cfg, std::size_t workers);

struct VerifySuiteConfig {
  std::vector<std::uint64_t> seeds{11};
  UnbiasednessConfig unbiasedness;
  RateConfig rate;
  /// Probe: MLP on the default corpus at this coverage.
  double probe_coverage = 0.2;
  std::size_t probe_hidden = 16;
  SgdConfig probe_sgd;
  /// Deliberate fault: multiply the estimator priors by this factor.
  double corrupt_priors = 1.0;
};

struct VerifySuiteResult {
  nlohmann::ordered_json report;
  bool passed = false;
};

VerifySuiteResult run_verify_suite(const ExperimentConfig& cfg, const VerifySuiteConfig& vcfg,
                                   std::size_t workers);

/// Data for the overfit probe: the experiment corpus at the given coverage.
struct ProbeData {
  PuDataset dataset;
  ClassPriors priors{std::vector<double>{0.1}};
};
ProbeData probe_data(const ExperimentConfig& cfg, double coverage, std::uint64_t seed);

nlohmann::ordered_json manifest(const ExperimentConfig& cfg, const std::string& command);

}  // namespace cmpu
