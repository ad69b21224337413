#include "cmpu/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cmpu/parallel.hpp"

namespace cmpu {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string to_string(PriorMode mode) {
  switch (mode) {
    case PriorMode::kPool: return "pool";
    case PriorMode::kEstimate: return "estimate";
    case PriorMode::kExplicit: return "explicit";
  }
  return "?";
}

PriorMode parse_prior_mode(const std::string& name) {
  if (name == "pool") return PriorMode::kPool;
  if (name == "estimate") return PriorMode::kEstimate;
  if (name == "explicit") return PriorMode::kExplicit;
  throw ValidationError("unknown prior mode '" + name + "' (pool|estimate|explicit)");
}

CorpusSpec ExperimentConfig::default_experiment_corpus() {
  CorpusSpec spec = default_corpus_spec();
  spec.coverage = 0.2;
  return spec;
}

SgdConfig ExperimentConfig::default_experiment_sgd() {
  SgdConfig sgd;
  sgd.learning_rate = 3.0;
  sgd.batch_size = 256;
  sgd.epochs = 120;
  return sgd;
}

void ExperimentConfig::validate() const {
  corpus.validate();
  cmpu.validate();
  sgd.validate();
  if (arch == Architecture::kMlp && hidden == 0) throw ValidationError("mlp needs hidden > 0");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test_fraction must be in (0, 1)");
  }
  if (seeds.empty()) throw ValidationError("seed list is empty");
  if (lambdas.empty()) throw ValidationError("lambda list is empty");
  for (double l : lambdas) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ValidationError("lambda values must be > 0");
  }
  if (coverages.empty()) throw ValidationError("coverage list is empty");
  for (std::size_t i = 0; i < coverages.size(); ++i) {
    if (!(coverages[i] > 0.0 && coverages[i] <= 1.0)) throw ValidationError("coverage must be in (0, 1]");
    if (i > 0 && coverages[i] <= coverages[i - 1]) {
      throw ValidationError("coverage list must be nested (strictly increasing)");
    }
  }
  if (ablation_estimators.empty()) throw ValidationError("ablation estimator list is empty");
  if (priors.mode == PriorMode::kPool && !(priors.floor > 0.0 && priors.floor < 1.0)) {
    throw ValidationError("prior floor must be in (0, 1)");
  }
  if (priors.mode == PriorMode::kEstimate && !(priors.gamma >= 1.0)) {
    throw ValidationError("gamma must be >= 1");
  }
  if (priors.mode == PriorMode::kExplicit) {
    if (priors.values.size() != corpus.class_names.size()) {
      throw ValidationError("explicit priors need one value per class");
    }
    ClassPriors check(priors.values);
  }
}

std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) {
  return mix_seed(seed, static_cast<std::uint64_t>(stream));
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

ojson to_json(const FeatureConfig& f) {
  return {{"dim", f.dim}, {"seed", f.seed}, {"context_weight", f.context_weight}, {"scale", f.scale}};
}

ojson to_json(const CorpusSpec& c) {
  ojson fillers = ojson::object();
  for (const auto& [name, words] : c.fillers) fillers[name] = words;
  return {{"class_names", c.class_names},     {"lexicon", c.lexicon},
          {"fillers", fillers},               {"templates", c.templates},
          {"num_sentences", c.num_sentences}, {"coverage", c.coverage},
          {"features", to_json(c.features)}};
}

ojson to_json(const SgdConfig& s) {
  return {{"learning_rate", s.learning_rate},
          {"batch_size", s.batch_size},
          {"epochs", s.epochs},
          {"l2", s.l2}};
}

template <typename T>
void read_if(const ojson& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const ojson& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* s) { return k == s; }) == keys.end()) {
      throw ValidationError(where + ": unknown key '" + k + "'");
    }
  }
}

}  // namespace

ojson to_json(const ExperimentConfig& cfg) {
  ojson ablation = ojson::array();
  for (auto k : cfg.ablation_estimators) ablation.push_back(to_string(k));
  ojson priors = {{"mode", to_string(cfg.priors.mode)},
                  {"floor", cfg.priors.floor},
                  {"gamma", cfg.priors.gamma},
                  {"values", cfg.priors.values}};
  return {{"corpus", to_json(cfg.corpus)},
          {"estimator", to_string(cfg.estimator)},
          {"lambda", cfg.cmpu.lambda},
          {"flip_lower_branch", cfg.cmpu.flip_lower_branch},
          {"sgd", to_json(cfg.sgd)},
          {"architecture", to_string(cfg.arch)},
          {"hidden", cfg.hidden},
          {"priors", priors},
          {"test_fraction", cfg.test_fraction},
          {"seeds", cfg.seeds},
          {"lambdas", cfg.lambdas},
          {"coverages", cfg.coverages},
          {"ablation_estimators", ablation}};
}

ExperimentConfig config_from_json(const nlohmann::json& input) {
  return config_from_json(ojson::parse(input.dump()));
}

ExperimentConfig config_from_json(const ojson& j) {
  ExperimentConfig cfg;
  try {
    reject_unknown(j,
                   {"corpus", "estimator", "lambda", "flip_lower_branch", "sgd", "architecture",
                    "hidden", "priors", "test_fraction", "seeds", "lambdas", "coverages",
                    "ablation_estimators"},
                   "config");
    if (j.contains("corpus")) {
      const ojson& c = j.at("corpus");
      reject_unknown(c,
                     {"class_names", "lexicon", "fillers", "templates", "num_sentences", "coverage",
                      "features"},
                     "config.corpus");
      read_if(c, "class_names", cfg.corpus.class_names);
      read_if(c, "lexicon", cfg.corpus.lexicon);
      read_if(c, "templates", cfg.corpus.templates);
      read_if(c, "num_sentences", cfg.corpus.num_sentences);
      read_if(c, "coverage", cfg.corpus.coverage);
      if (c.contains("fillers")) {
        cfg.corpus.fillers.clear();
        for (const auto& [name, words] : c.at("fillers").items()) {
          cfg.corpus.fillers.emplace_back(name, words.get<std::vector<std::string>>());
        }
      }
      if (c.contains("features")) {
        const ojson& f = c.at("features");
        reject_unknown(f, {"dim", "seed", "context_weight", "scale"}, "config.corpus.features");
        read_if(f, "dim", cfg.corpus.features.dim);
        read_if(f, "seed", cfg.corpus.features.seed);
        read_if(f, "context_weight", cfg.corpus.features.context_weight);
        read_if(f, "scale", cfg.corpus.features.scale);
      }
    }
    if (j.contains("estimator")) cfg.estimator = parse_estimator(j.at("estimator").get<std::string>());
    read_if(j, "lambda", cfg.cmpu.lambda);
    read_if(j, "flip_lower_branch", cfg.cmpu.flip_lower_branch);
    if (j.contains("sgd")) {
      const ojson& s = j.at("sgd");
      reject_unknown(s, {"learning_rate", "batch_size", "epochs", "l2"}, "config.sgd");
      read_if(s, "learning_rate", cfg.sgd.learning_rate);
      read_if(s, "batch_size", cfg.sgd.batch_size);
      read_if(s, "epochs", cfg.sgd.epochs);
      read_if(s, "l2", cfg.sgd.l2);
    }
    if (j.contains("architecture")) cfg.arch = parse_architecture(j.at("architecture").get<std::string>());
    read_if(j, "hidden", cfg.hidden);
    if (j.contains("priors")) {
      const ojson& p = j.at("priors");
      reject_unknown(p, {"mode", "floor", "gamma", "values"}, "config.priors");
      if (p.contains("mode")) cfg.priors.mode = parse_prior_mode(p.at("mode").get<std::string>());
      read_if(p, "floor", cfg.priors.floor);
      read_if(p, "gamma", cfg.priors.gamma);
      read_if(p, "values", cfg.priors.values);
    }
    read_if(j, "test_fraction", cfg.test_fraction);
    read_if(j, "seeds", cfg.seeds);
    read_if(j, "lambdas", cfg.lambdas);
    read_if(j, "coverages", cfg.coverages);
    if (j.contains("ablation_estimators")) {
      cfg.ablation_estimators.clear();
      for (const auto& name : j.at("ablation_estimators")) {
        cfg.ablation_estimators.push_back(parse_estimator(name.get<std::string>()));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config " + path + ": " + e.what());
  }
  // A manifest carries the resolved config under "config".
  if (j.is_object() && j.contains("config") && j.contains("config_hash")) return config_from_json(j.at("config"));
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

ojson manifest(const ExperimentConfig& cfg, const std::string& command) {
  return {{"command", command},
          {"version", kLibraryVersion},
          {"config_hash", config_hash(cfg)},
          {"seeds", cfg.seeds},
          {"config", to_json(cfg)}};
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

namespace {

// Runs f, prefixing any error with the stage name while keeping its category.
template <typename F>
auto staged(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(stage + ": " + e.what());
  } catch (const RuntimeError& e) {
    throw RuntimeError(stage + ": " + e.what());
  } catch (const std::exception& e) {
    throw RuntimeError(stage + ": " + e.what());
  }
}

ClassPriors pool_priors(const TaggedCorpus& train, double floor, bool* floored) {
  std::vector<double> counts(train.class_names.size(), 0.0);
  double pool = 0.0;
  for (const auto& s : train.sentences) {
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      if (s.distant[t].kind != Tag::Kind::kOutside) continue;
      pool += 1.0;
      if (s.gold[t].cls > 0) counts[static_cast<std::size_t>(s.gold[t].cls - 1)] += 1.0;
    }
  }
  if (pool == 0.0) throw ValidationError("unlabeled pool is empty");
  bool any = false;
  for (double& c : counts) {
    c /= pool;
    if (c < floor) {
      c = floor;
      any = true;
    }
  }
  if (floored) *floored = any;
  return ClassPriors(counts);
}

}  // namespace

ClassPriors training_priors(const ExperimentConfig& cfg, EstimatorKind kind,
                            const TaggedCorpus& train, bool* floored) {
  if (floored) *floored = false;
  if (kind == EstimatorKind::kMpn) return estimate_priors_from_labels(train, 1.0).priors;
  switch (cfg.priors.mode) {
    case PriorMode::kPool: return pool_priors(train, cfg.priors.floor, floored);
    case PriorMode::kEstimate: return estimate_priors_from_labels(train, cfg.priors.gamma).priors;
    case PriorMode::kExplicit: return ClassPriors(cfg.priors.values);
  }
  throw ValidationError("unknown prior mode");
}

PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  CorpusSpec spec = cfg.corpus;
  spec.seed = derive_seed(seed, SeedStream::kCorpus);
  const TaggedCorpus corpus = staged("generate", [&] { return generate_corpus(spec); });
  CorpusSplit split = staged("split", [&] {
    return split_corpus(corpus, cfg.test_fraction, derive_seed(seed, SeedStream::kSplit));
  });
  if (split.test.sentences.empty()) throw ValidationError("split: test set is empty after dedupe");
  PreparedData out;
  out.train = staged("label", [&] { return distant_label(std::move(split.train), build_dictionary(spec)); });
  out.test = std::move(split.test);
  out.priors = staged("priors", [&] { return training_priors(cfg, cfg.estimator, out.train, &out.priors_floored); });
  return out;
}

RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed) {
  const PreparedData data = prepare_data(cfg, seed);
  const PuDataset ds = staged("pu", [&] { return corpus_to_pu(data.train); });
  const SoftmaxModel init = SoftmaxModel::random(cfg.arch, ds.dim(), ds.num_classes(), cfg.hidden,
                                                 derive_seed(seed, SeedStream::kInit));
  SgdConfig sgd = cfg.sgd;
  sgd.seed = derive_seed(seed, SeedStream::kShuffle);
  TrainResult trained = staged("train", [&] {
    return train(init, ds, data.priors, cfg.estimator, cfg.cmpu, sgd);
  });
  RunResult r;
  r.seed = seed;
  r.eval = staged("evaluate", [&] { return evaluate_model(trained.model, data.test); });
  r.trace = std::move(trained.trace);
  r.model = std::move(trained.model);
  return r;
}

void write_outputs(const std::string& dir, const OutputFiles& files) {
  std::vector<fs::path> written;
  auto rollback = [&] {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
  };
  try {
    fs::create_directories(dir);
    for (const auto& [name, content] : files) {
      const fs::path p = fs::path(dir) / name;
      std::ofstream out(p, std::ios::binary);
      if (!out) throw RuntimeError("cannot write " + p.string());
      written.push_back(p);
      out << content;
      out.close();
      if (!out) throw RuntimeError("write failed for " + p.string());
    }
  } catch (const RuntimeError&) {
    rollback();
    throw;
  } catch (const std::exception& e) {
    rollback();
    throw RuntimeError(std::string("output: ") + e.what());
  }
}

namespace {

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

OutputFiles run_dsner(const ExperimentConfig& cfg, const std::string& command) {
  staged("config", [&] { cfg.validate(); });
  OutputFiles files;
  ojson runs = ojson::array();
  std::ostringstream csv;
  csv << "seed,estimator," << eval_csv_header() << "\n";
  std::vector<double> p, r, f, a;
  for (std::uint64_t seed : cfg.seeds) {
    const RunResult run = run_single(cfg, seed);
    ojson e = {{"seed", seed}};
    e.update(to_json(run.eval));
    runs.push_back(e);
    csv << seed << ',' << to_string(cfg.estimator) << ',' << eval_csv_row(run.eval) << "\n";
    std::ostringstream trace;
    write_trace_csv(run.trace, trace);
    files["trace_" + seed_tag(seed) + ".csv"] = trace.str();
    std::ostringstream model;
    save_model(run.model, model);
    files["model_" + seed_tag(seed) + ".txt"] = model.str();
    p.push_back(run.eval.precision);
    r.push_back(run.eval.recall);
    f.push_back(run.eval.f1);
    a.push_back(run.eval.token_accuracy);
  }
  ojson summary = {{"precision", mean_of(p)}, {"recall", mean_of(r)}, {"f1", mean_of(f)},
                   {"token_accuracy", mean_of(a)}, {"f1_sd", sd_of(f)}};
  files["eval.json"] = dump({{"estimator", to_string(cfg.estimator)},
                             {"coverage", cfg.corpus.coverage},
                             {"lambda", cfg.cmpu.lambda},
                             {"mean", summary},
                             {"runs", runs}});
  files["eval.csv"] = csv.str();
  files["manifest.json"] = dump(manifest(cfg, command));
  return files;
}

std::vector<SweepCell> run_cells(const ExperimentConfig& cfg, std::vector<SweepCell> cells,
                                 std::size_t workers) {
  std::sort(cells.begin(), cells.end(), [](const SweepCell& a, const SweepCell& b) { return a.key() < b.key(); });
  parallel_for(cells.size(), workers, [&](std::size_t i) {
    ExperimentConfig c = cfg;
    c.estimator = cells[i].estimator;
    c.cmpu.lambda = cells[i].lambda;
    c.corpus.coverage = cells[i].coverage;
    cells[i].eval = run_single(c, cells[i].seed).eval;
  });
  return cells;
}

std::vector<SweepSummaryRow> summarize(const std::vector<SweepCell>& cells) {
  std::vector<SweepSummaryRow> rows;
  std::size_t i = 0;
  while (i < cells.size()) {
    std::size_t j = i;
    std::vector<double> p, r, f;
    while (j < cells.size() && cells[j].estimator == cells[i].estimator &&
           cells[j].lambda == cells[i].lambda && cells[j].coverage == cells[i].coverage) {
      p.push_back(cells[j].eval.precision);
      r.push_back(cells[j].eval.recall);
      f.push_back(cells[j].eval.f1);
      ++j;
    }
    SweepSummaryRow row;
    row.estimator = cells[i].estimator;
    row.lambda = cells[i].lambda;
    row.coverage = cells[i].coverage;
    row.runs = j - i;
    row.precision_mean = mean_of(p);
    row.precision_sd = sd_of(p);
    row.recall_mean = mean_of(r);
    row.recall_sd = sd_of(r);
    row.f1_mean = mean_of(f);
    row.f1_sd = sd_of(f);
    rows.push_back(row);
    i = j;
  }
  return rows;
}

namespace {

std::string cells_csv(const std::vector<SweepCell>& cells) {
  std::ostringstream out;
  out << "estimator,lambda,coverage,seed,precision,recall,f1,token_accuracy,tp,fp,fn\n";
  for (const auto& c : cells) {
    out << to_string(c.estimator) << ',' << format_double(c.lambda) << ',' << format_double(c.coverage)
        << ',' << c.seed << ',' << format_double(c.eval.precision) << ','
        << format_double(c.eval.recall) << ',' << format_double(c.eval.f1) << ','
        << format_double(c.eval.token_accuracy) << ',' << c.eval.overall.tp << ','
        << c.eval.overall.fp << ',' << c.eval.overall.fn << "\n";
  }
  return out.str();
}

std::string summary_csv(const std::vector<SweepSummaryRow>& rows) {
  std::ostringstream out;
  out << "estimator,lambda,coverage,runs,precision_mean,precision_sd,recall_mean,recall_sd,f1_mean,f1_sd\n";
  for (const auto& r : rows) {
    out << to_string(r.estimator) << ',' << format_double(r.lambda) << ',' << format_double(r.coverage)
        << ',' << r.runs << ',' << format_double(r.precision_mean) << ','
        << format_double(r.precision_sd) << ',' << format_double(r.recall_mean) << ','
        << format_double(r.recall_sd) << ',' << format_double(r.f1_mean) << ','
        << format_double(r.f1_sd) << "\n";
  }
  return out.str();
}

}  // namespace

OutputFiles run_lambda_sweep(const ExperimentConfig& cfg, std::size_t workers) {
  staged("config", [&] { cfg.validate(); });
  std::vector<SweepCell> cells;
  for (double lambda : cfg.lambdas) {
    for (std::uint64_t seed : cfg.seeds) {
      cells.push_back({EstimatorKind::kCmpu, lambda, cfg.corpus.coverage, seed, {}});
    }
  }
  cells = run_cells(cfg, std::move(cells), workers);
  return {{"sweep.csv", cells_csv(cells)},
          {"sweep_summary.csv", summary_csv(summarize(cells))},
          {"manifest.json", dump(manifest(cfg, "sweep-lambda"))}};
}

OutputFiles run_coverage_ablation(const ExperimentConfig& cfg, std::size_t workers) {
  staged("config", [&] { cfg.validate(); });
  std::vector<SweepCell> cells;
  for (EstimatorKind kind : cfg.ablation_estimators) {
    for (double coverage : cfg.coverages) {
      for (std::uint64_t seed : cfg.seeds) cells.push_back({kind, cfg.cmpu.lambda, coverage, seed, {}});
    }
  }
  cells = run_cells(cfg, std::move(cells), workers);
  return {{"coverage.csv", cells_csv(cells)},
          {"coverage_summary.csv", summary_csv(summarize(cells))},
          {"manifest.json", dump(manifest(cfg, "ablate-coverage"))}};
}

// ---------------------------------------------------------------------------
// Verification suite
// ---------------------------------------------------------------------------

ProbeData probe_data(const ExperimentConfig& cfg, double coverage, std::uint64_t seed) {
  CorpusSpec spec = cfg.corpus;
  spec.coverage = coverage;
  spec.seed = derive_seed(seed, SeedStream::kCorpus);
  const TaggedCorpus corpus = distant_label(generate_corpus(spec), build_dictionary(spec));
  ProbeData out;
  out.dataset = corpus_to_pu(corpus);
  out.priors = training_priors(cfg, EstimatorKind::kMpuNaive, corpus);
  return out;
}

VerifySuiteResult run_verify_suite(const ExperimentConfig& cfg, const VerifySuiteConfig& vcfg,
                                   std::size_t workers) {
  if (vcfg.seeds.empty()) throw ValidationError("verify: seed list is empty");
  if (!(vcfg.corrupt_priors > 0.0)) throw ValidationError("verify: prior corruption factor must be > 0");
  VerifySuiteResult out;
  out.passed = true;
  ojson checks = ojson::array();
  const MixtureSpec mixture = default_mixture_spec(1);
  const SoftmaxModel fixed = nearest_mean_model(mixture);
  for (std::uint64_t seed : vcfg.seeds) {
    UnbiasednessConfig u = vcfg.unbiasedness;
    u.seed = seed;
    u.workers = workers;
    if (vcfg.corrupt_priors != 1.0) {
      std::vector<double> pi = mixture.priors.values();
      for (double& p : pi) p *= vcfg.corrupt_priors;
      u.estimator_priors = ClassPriors(pi);
    }
    const auto ub = check_unbiasedness(mixture, fixed, u);
    ojson ju = to_json(ub);
    ju["seed"] = seed;
    checks.push_back(ju);

    RateConfig rc = vcfg.rate;
    rc.seed = seed;
    rc.workers = workers;
    const auto rate = check_consistency_rate(mixture, fixed, rc);
    ojson jr = to_json(rate);
    jr["seed"] = seed;
    checks.push_back(jr);

    const ProbeData pd = probe_data(cfg, vcfg.probe_coverage, seed);
    SgdConfig sgd = vcfg.probe_sgd;
    sgd.seed = derive_seed(seed, SeedStream::kShuffle);
    const auto probe = overfit_probe(pd.dataset, pd.priors,
                                     {EstimatorKind::kMpuNaive, EstimatorKind::kMpuNn, EstimatorKind::kCmpu},
                                     sgd, cfg.cmpu, vcfg.probe_hidden, derive_seed(seed, SeedStream::kInit));
    ojson jp = to_json(probe);
    jp["seed"] = seed;
    checks.push_back(jp);

    out.passed = out.passed && ub.passed && rate.passed && probe.passed;
  }
  out.report = {{"version", kLibraryVersion},
                {"seeds", vcfg.seeds},
                {"corrupt_priors", vcfg.corrupt_priors},
                {"checks", checks},
                {"passed", out.passed}};
  return out;
}

}  // namespace cmpu
