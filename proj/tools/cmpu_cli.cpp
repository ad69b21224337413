#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmpu/experiment.hpp"
#include "cmpu/parallel.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2, kVerification = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string estimator;
  std::optional<double> lambda;
  std::optional<double> coverage;
};

cmpu::ExperimentConfig resolve(const Common& c) {
  cmpu::ExperimentConfig cfg;
  if (!c.config.empty()) cfg = cmpu::load_config(c.config);
  if (c.seed) cfg.seeds = {*c.seed};
  if (!c.estimator.empty()) cfg.estimator = cmpu::parse_estimator(c.estimator);
  if (c.lambda) cfg.cmpu.lambda = *c.lambda;
  if (c.coverage) cfg.corpus.coverage = *c.coverage;
  cfg.validate();
  return cfg;
}

std::string conll_text(const cmpu::TaggedCorpus& corpus) {
  std::ostringstream out;
  cmpu::write_conll(corpus, out);
  return out.str();
}

std::string json_text(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

cmpu::OutputFiles cmd_gen(const cmpu::ExperimentConfig& cfg) {
  cmpu::CorpusSpec spec = cfg.corpus;
  spec.seed = cmpu::derive_seed(cfg.seeds.front(), cmpu::SeedStream::kCorpus);
  const auto corpus = cmpu::generate_corpus(spec);
  return {{"corpus.conll", conll_text(corpus)},
          {"manifest.json", json_text(cmpu::manifest(cfg, "gen"))}};
}

cmpu::OutputFiles cmd_label(const cmpu::ExperimentConfig& cfg, const std::string& input) {
  cmpu::TaggedCorpus corpus;
  if (input.empty()) {
    cmpu::CorpusSpec spec = cfg.corpus;
    spec.seed = cmpu::derive_seed(cfg.seeds.front(), cmpu::SeedStream::kCorpus);
    corpus = cmpu::generate_corpus(spec);
  } else {
    corpus = cmpu::read_conll(input, cfg.corpus.class_names);
  }
  corpus = cmpu::distant_label(std::move(corpus), cmpu::build_dictionary(cfg.corpus));
  const auto quality = cmpu::annotation_quality(corpus);
  return {{"labeled.conll", conll_text(corpus)},
          {"annotation.json", json_text(cmpu::to_json(quality))},
          {"manifest.json", json_text(cmpu::manifest(cfg, "label"))}};
}

cmpu::OutputFiles cmd_eval(const cmpu::ExperimentConfig& cfg, const std::string& model_path,
                           const std::string& input) {
  const cmpu::SoftmaxModel model = cmpu::load_model(model_path);
  cmpu::TaggedCorpus corpus = cmpu::read_conll(input, cfg.corpus.class_names);
  cmpu::featurize(corpus, cfg.corpus.features);
  if (corpus.features.dim() != model.dim()) {
    throw cmpu::ValidationError("model dimension does not match the feature config");
  }
  const auto result = cmpu::evaluate_model(model, corpus);
  return {{"eval.json", json_text(cmpu::to_json(result))},
          {"eval.csv", cmpu::eval_csv_header() + "\n" + cmpu::eval_csv_row(result) + "\n"}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-class PU learning for distantly supervised NER"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--config", common.config, "JSON config or a manifest.json to replay");
  app.add_option("--seed", common.seed, "Run a single seed instead of the config list");
  app.add_option("--out", common.out, "Output directory")->capture_default_str();
  app.add_option("--estimator", common.estimator, "mpn|mpu|mpu-nn|cmpu");
  app.add_option("--lambda", common.lambda, "CMPU constraint factor");
  app.add_option("--coverage", common.coverage, "Dictionary coverage in (0, 1]");

  auto* gen = app.add_subcommand("gen", "Generate a synthetic tagged corpus");
  auto* label = app.add_subcommand("label", "Distantly label a corpus with the dictionary");
  std::string label_input;
  label->add_option("--input", label_input, "CoNLL corpus; generated from the config when omitted");
  auto* train = app.add_subcommand("train", "Generate, label, train and score one estimator");
  auto* eval = app.add_subcommand("eval", "Score a saved model on a gold CoNLL corpus");
  std::string eval_model, eval_input;
  eval->add_option("--model", eval_model, "Model file written by train")->required();
  eval->add_option("--input", eval_input, "CoNLL corpus with gold tags")->required();
  auto* sweep = app.add_subcommand("sweep-lambda", "F1 against the constraint factor");
  std::vector<double> lambdas;
  sweep->add_option("--lambdas", lambdas, "Override the config lambda list");
  auto* ablate = app.add_subcommand("ablate-coverage", "P/R/F1 against dictionary coverage");
  std::vector<double> coverages;
  ablate->add_option("--coverages", coverages, "Override the config coverage list");
  auto* verify = app.add_subcommand("verify", "Statistical checks of the estimators");
  double corrupt = 1.0;
  verify->add_option("--corrupt-priors", corrupt, "Scale estimator priors (fault injection)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    cmpu::ExperimentConfig cfg = resolve(common);
    const std::size_t workers = cmpu::worker_count();
    cmpu::OutputFiles files;
    int status = kOk;
    if (gen->parsed()) {
      files = cmd_gen(cfg);
    } else if (label->parsed()) {
      files = cmd_label(cfg, label_input);
    } else if (train->parsed()) {
      files = cmpu::run_dsner(cfg, "train");
    } else if (eval->parsed()) {
      files = cmd_eval(cfg, eval_model, eval_input);
    } else if (sweep->parsed()) {
      if (!lambdas.empty()) cfg.lambdas = lambdas;
      files = cmpu::run_lambda_sweep(cfg, workers);
    } else if (ablate->parsed()) {
      if (!coverages.empty()) cfg.coverages = coverages;
      files = cmpu::run_coverage_ablation(cfg, workers);
    } else if (verify->parsed()) {
      cmpu::VerifySuiteConfig vcfg;
      if (common.seed) vcfg.seeds = {*common.seed};
      vcfg.corrupt_priors = corrupt;
      const auto result = cmpu::run_verify_suite(cfg, vcfg, workers);
      files = {{"verify.json", json_text(result.report)}};
      if (!result.passed) status = kVerification;
    }
    cmpu::write_outputs(common.out, files);
    for (const auto& [name, content] : files) std::cout << common.out << "/" << name << "\n";
    if (status == kVerification) std::cerr << "verification failed; see " << common.out << "/verify.json\n";
    return status;
  } catch (const cmpu::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
