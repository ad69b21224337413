// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cmpu/experiment.hpp"
#include "cmpu/parallel.hpp"
#include "oracle.hpp"
#include "remark.hpp"

using namespace cmpu;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

// ---------------------------------------------------------------------------

Outcome loss_bound() {
  std::mt19937_64 rng(101);
  std::exponential_distribution<double> ex(1.0);
  std::size_t violations = 0;
  std::size_t pairs = 0;
  for (; pairs < 100000; ++pairs) {
    const int c = 1 + static_cast<int>(rng() % 5);
    const std::size_t k = static_cast<std::size_t>(c) + 1;
    std::vector<double> p(k, 0.0);
    switch (pairs % 4) {
      case 0: p[rng() % k] = 1.0; break;  // vertex
      case 1: {                           // edge
        const double a = std::uniform_real_distribution<double>(0, 1)(rng);
        p[rng() % k] += a;
        p[rng() % k] += 1.0 - a;
        break;
      }
      default: {  // interior, Dirichlet(1)
        double s = 0.0;
        for (auto& v : p) s += (v = ex(rng));
        for (auto& v : p) v /= s;
      }
    }
    const int y = static_cast<int>(rng() % k);
    const double l = mae_loss(p, OneHotLabel(y, LabelSpace(c)));
    if (!(l >= 0.0 && l <= 2.0 / static_cast<double>(k))) ++violations;
  }
  std::size_t attained = 0;
  for (int c = 1; c <= 5; ++c) {
    const std::size_t k = static_cast<std::size_t>(c) + 1;
    std::vector<double> p(k, 0.0);
    p[1] = 1.0;
    attained += mae_loss(p, OneHotLabel(0, LabelSpace(c))) == 2.0 / static_cast<double>(k);
  }
  return {violations == 0 && attained == 5,
          std::to_string(pairs) + " pairs, " + std::to_string(violations) + " outside [0, 2/(C+1)], bound attained " +
              std::to_string(attained) + "/5"};
}

// ---------------------------------------------------------------------------

PuDataset random_batch(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  auto make = [&](std::size_t n) {
    Samples s(dim);
    std::vector<double> x(dim);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : x) v = g(rng);
      s.push_back(x);
    }
    return s;
  };
  return make_pu_dataset({make(3), make(4)}, make(6));
}

Outcome gradient_check() {
  const EstimatorKind kinds[] = {EstimatorKind::kMpn, EstimatorKind::kMpuNaive, EstimatorKind::kMpuNn,
                                 EstimatorKind::kCmpu};
  const double h = 1e-6;
  const double margin = 1e-3;
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> unif(0.05, 0.3);
  double worst = 0.0;
  std::size_t checked = 0, skipped = 0, lower = 0, upper = 0;
  for (auto arch : {Architecture::kLinear, Architecture::kMlp}) {
    for (int ki = 0; ki < 4; ++ki) {
      std::size_t done = 0;
      while (done < 100) {
        const auto ds = random_batch(rng, 3);
        SoftmaxModel m = SoftmaxModel::random(arch, 3, 2, 4, rng());
        for (auto& v : m.params()) v *= 15.0;
        const auto pri = make_priors({unif(rng), unif(rng)});
        CmpuConfig cfg;
        cfg.lambda = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
        const auto t = oracle::terms(m, ds, pri);
        const double ut = t.ru - t.wn;
        if ((ki == 2 && std::abs(ut) < margin) || (ki == 3 && std::abs(ut - cfg.lambda * t.wp) < margin)) {
          ++skipped;
          continue;
        }
        if (ki == 3) (ut < cfg.lambda * t.wp ? lower : upper)++;
        const auto g = risk_gradient(m, ds, pri, kinds[ki], cfg);
        double diff2 = 0.0, ref2 = 0.0;
        for (std::size_t p = 0; p < m.num_params(); ++p) {
          SoftmaxModel up = m, dn = m;
          up.params()[p] += h;
          dn.params()[p] -= h;
          const double fd = (oracle::risk(ki, oracle::terms(up, ds, pri), pri.negative(), cfg.lambda) -
                             oracle::risk(ki, oracle::terms(dn, ds, pri), pri.negative(), cfg.lambda)) /
                            (2 * h);
          diff2 += (g.grad.values()[p] - fd) * (g.grad.values()[p] - fd);
          ref2 += fd * fd;
        }
        const double rel = std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-12);
        worst = std::max(worst, rel);
        ++done;
        ++checked;
      }
    }
  }
  return {worst < 1e-5, std::to_string(checked) + " instances (4 estimators x 2 architectures x 100), " +
                            std::to_string(skipped) + " near-kink draws skipped, cmpu branches lower/upper " +
                            std::to_string(lower) + "/" + std::to_string(upper) + ", max rel err " + fmt(worst, 3)};
}

// ---------------------------------------------------------------------------

Outcome estimator_algebra() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::size_t bad_bound = 0, bad_order = 0, bad_branch = 0, lower = 0, zero_w = 0;
  const std::size_t n = 10000;
  for (std::size_t t = 0; t < n; ++t) {
    const int c = 1 + static_cast<int>(rng() % 4);
    const double top = 2.0 / (c + 1);
    std::vector<double> pi(static_cast<std::size_t>(c));
    double budget = 0.98;
    for (auto& p : pi) budget -= (p = 0.005 + u01(rng) * budget / c);
    RiskComponents rc;
    for (int i = 0; i < c; ++i) {
      rc.rp_plus.push_back(u01(rng) * top);
      rc.rp_minus.push_back(u01(rng) * top);
    }
    rc.ru_minus = u01(rng) * top;
    if (t % 50 == 0) std::fill(rc.rp_plus.begin(), rc.rp_plus.end(), 0.0);
    const ClassPriors pri(pi);
    CmpuConfig cfg;
    cfg.lambda = (t % 7 == 0) ? 1e-9 : u01(rng) * 3.0 + 1e-6;

    double w = 0.0, wn = 0.0;
    for (int i = 0; i < c; ++i) {
      w += pi[static_cast<std::size_t>(i)] * rc.rp_plus[static_cast<std::size_t>(i)];
      wn += pi[static_cast<std::size_t>(i)] * rc.rp_minus[static_cast<std::size_t>(i)];
    }
    const double ut = rc.ru_minus - wn;

    const auto naive = mpu_naive_risk(rc, pri);
    const auto nn = mpu_nn_risk(rc, pri);
    const auto cm = cmpu_risk(rc, pri, cfg);
    if (!(cm.total >= w + cfg.lambda * w)) ++bad_bound;
    if (!(cm.total >= nn.total && nn.total >= naive.total)) ++bad_order;
    bool branch_ok;
    if (w > 0.0) {
      const double tau = ut / w;
      branch_ok = cm.tau && *cm.tau == tau && ((cm.branch == Branch::kLower) == (tau < cfg.lambda));
    } else {
      ++zero_w;
      // No ratio: the branch is whichever argument of the max is larger.
      branch_ok = !cm.tau && ((cm.branch == Branch::kLower) == (ut < 0.0));
    }
    if (!branch_ok) ++bad_branch;
    lower += cm.branch == Branch::kLower;
  }
  return {bad_bound == 0 && bad_order == 0 && bad_branch == 0,
          std::to_string(n) + " sets (" + std::to_string(lower) + " lower, " + std::to_string(zero_w) +
              " with zero weighted P-risk); violations: bound " + std::to_string(bad_bound) + ", ordering " +
              std::to_string(bad_order) + ", branch " + std::to_string(bad_branch)};
}

// ---------------------------------------------------------------------------

Outcome unbiasedness(std::size_t workers) {
  const MixtureSpec spec = default_mixture_spec(1);
  UnbiasednessConfig cfg;
  cfg.trials = 10000;
  cfg.oracle_samples = 4000000;
  cfg.workers = workers;
  const auto r = check_unbiasedness(spec, nearest_mean_model(spec), cfg);
  return {r.passed && std::abs(r.z) < 3.0 && r.trials == 10000,
          "K=" + std::to_string(r.trials) + ", mean " + fmt(r.mean, 6) + ", oracle " + fmt(r.oracle, 6) +
              ", z=" + fmt(r.z, 3)};
}

Outcome consistency_rate(std::size_t workers) {
  const MixtureSpec spec = default_mixture_spec(1);
  RateConfig cfg;
  cfg.workers = workers;
  const auto r = check_consistency_rate(spec, nearest_mean_model(spec), cfg);
  // Recompute the slope from the reported points.
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < r.sample_sizes.size(); ++i) {
    lx.push_back(std::log(static_cast<double>(r.sample_sizes[i])));
    ly.push_back(std::log(r.rms_errors[i]));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  std::string rms;
  for (double e : r.rms_errors) rms += (rms.empty() ? "" : " ") + fmt(e, 3);
  return {slope >= -0.65 && slope <= -0.35 && std::abs(slope - r.loglog_slope) < 1e-9 && cfg.trials == 200,
          "rms [" + rms + "], slope " + fmt(slope, 3) + " (95% CI " + fmt(r.slope_ci.first, 3) + ".." +
              fmt(r.slope_ci.second, 3) + ")"};
}

// ---------------------------------------------------------------------------

Outcome overfit(const ExperimentConfig& cfg) {
  const VerifySuiteConfig v;
  const std::uint64_t seed = v.seeds.front();
  const ProbeData pd = probe_data(cfg, v.probe_coverage, seed);
  SgdConfig sgd = v.probe_sgd;
  sgd.seed = derive_seed(seed, SeedStream::kShuffle);
  const auto r = overfit_probe(pd.dataset, pd.priors, {EstimatorKind::kMpuNaive, EstimatorKind::kCmpu}, sgd,
                               cfg.cmpu, v.probe_hidden, derive_seed(seed, SeedStream::kInit));
  // Re-derive both facts from the raw traces.
  double naive_min = 1e300;
  std::size_t rows = 0, violations = 0;
  for (const auto& run : r.runs) {
    for (const auto& row : run.trace) {
      const double ut = row.report.components.ru_minus - row.sum_pi_rp_minus;
      if (run.kind == EstimatorKind::kMpuNaive) naive_min = std::min(naive_min, ut);
      if (run.kind == EstimatorKind::kCmpu) {
        ++rows;
        if (!(row.report.total >= row.sum_pi_rp_plus + cfg.cmpu.lambda * row.sum_pi_rp_plus)) ++violations;
      }
    }
  }
  return {naive_min < 0.0 && violations == 0 && rows > 0 && r.passed,
          "mlp h=" + std::to_string(v.probe_hidden) + " at coverage " + fmt(v.probe_coverage) +
              ": naive min unlabeled term " + fmt(naive_min) + ", cmpu bound violations " +
              std::to_string(violations) + "/" + std::to_string(rows) + " batches"};
}

// ---------------------------------------------------------------------------

struct Means {
  double p = 0.0, r = 0.0, f1 = 0.0;
};

std::map<std::tuple<int, double, double>, Means> cell_means(const std::vector<SweepCell>& cells) {
  std::map<std::tuple<int, double, double>, Means> out;
  std::map<std::tuple<int, double, double>, int> n;
  for (const auto& c : cells) {
    const auto key = std::tuple(static_cast<int>(c.estimator), c.lambda, c.coverage);
    out[key].p += c.eval.precision;
    out[key].r += c.eval.recall;
    out[key].f1 += c.eval.f1;
    ++n[key];
  }
  for (auto& [k, m] : out) {
    m.p /= n[k];
    m.r /= n[k];
    m.f1 /= n[k];
  }
  return out;
}

Outcome dsner_trend(const ExperimentConfig& cfg, std::size_t workers) {
  std::vector<SweepCell> cells;
  for (auto kind : {EstimatorKind::kMpn, EstimatorKind::kCmpu}) {
    for (double rho : {0.2, 1.0}) {
      for (std::uint64_t s = 1; s <= 5; ++s) cells.push_back({kind, cfg.cmpu.lambda, rho, s, {}});
    }
  }
  const auto m = cell_means(run_cells(cfg, cells, workers));
  const double l = cfg.cmpu.lambda;
  const Means b02 = m.at({0, l, 0.2}), c02 = m.at({3, l, 0.2});
  const Means b10 = m.at({0, l, 1.0}), c10 = m.at({3, l, 1.0});
  const double df1 = 100 * (c02.f1 - b02.f1), drec = 100 * (c02.r - b02.r);
  const double gap = 100 * std::abs(c10.f1 - b10.f1);
  return {df1 >= 10.0 && drec >= 10.0 && gap < 3.0,
          "rho=0.2: F1 cmpu " + fmt(c02.f1, 3) + " vs baseline " + fmt(b02.f1, 3) + " (+" + fmt(df1, 3) +
              " pts), recall +" + fmt(drec, 3) + " pts; rho=1.0: F1 " + fmt(c10.f1, 3) + " vs " +
              fmt(b10.f1, 3) + " (gap " + fmt(gap, 3) + " pts); " + std::to_string(cfg.corpus.num_sentences) +
              " sentences, C=" + std::to_string(cfg.corpus.class_names.size()) + ", 5 seeds"};
}

Outcome lambda_sweep(const ExperimentConfig& cfg, std::size_t workers) {
  std::vector<SweepCell> cells;
  for (double l : {0.1, 0.2, 2.0}) {
    for (std::uint64_t s = 1; s <= 5; ++s) cells.push_back({EstimatorKind::kCmpu, l, cfg.corpus.coverage, s, {}});
  }
  const auto m = cell_means(run_cells(cfg, cells, workers));
  const double rho = cfg.corpus.coverage;
  const double f01 = m.at({3, 0.1, rho}).f1, f02 = m.at({3, 0.2, rho}).f1, f20 = m.at({3, 2.0, rho}).f1;
  return {f20 <= std::max(f01, f02), "rho=" + fmt(rho) + ", mean F1 lambda 0.1: " + fmt(f01, 4) +
                                         ", 0.2: " + fmt(f02, 4) + ", 2.0: " + fmt(f20, 4)};
}

// ---------------------------------------------------------------------------

Outcome golden() {
  const auto corpus = distant_label(fixture::remark_corpus(), fixture::remark_small_dictionary());
  const std::vector<Tag> expect{Tag::begin(1), Tag::inside(1), Tag::outside(), Tag::outside(),
                                Tag::outside(), Tag::outside(), Tag::outside(), Tag::outside(),
                                Tag::begin(2),  Tag::outside(), Tag::outside()};
  const auto q = annotation_quality(corpus);
  const bool ok = corpus.sentences[0].distant == expect && q.precision == 1.0 && q.recall == 2.0 / 3.0 &&
                  q.f1 == 0.8 && q.token_accuracy == 8.0 / 11.0;
  return {ok, "P=" + fmt(q.precision, 17) + " R=" + fmt(q.recall, 17) + " F1=" + fmt(q.f1, 17) +
                  " acc=" + fmt(q.token_accuracy, 17)};
}

// ---------------------------------------------------------------------------

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t compare_dirs(const fs::path& a, const fs::path& b, std::size_t& files) {
  std::size_t mismatches = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    const fs::path other = b / e.path().filename();
    if (!fs::exists(other) || read_file(e.path()) != read_file(other)) ++mismatches;
  }
  for (const auto& e : fs::directory_iterator(b)) mismatches += !fs::exists(a / e.path().filename());
  return mismatches;
}

Outcome reproducibility(std::size_t workers) {
  const fs::path root = fs::temp_directory_path() / "cmpu_acceptance_replay";
  fs::remove_all(root);
  ExperimentConfig cfg;
  cfg.corpus.num_sentences = 800;
  cfg.sgd.epochs = 15;
  cfg.seeds = {1, 2};
  cfg.lambdas = {0.1, 0.2};
  cfg.coverages = {0.4, 1.0};

  using Runner = std::function<OutputFiles(const ExperimentConfig&, std::size_t)>;
  const std::vector<std::pair<std::string, Runner>> commands = {
      {"train", [](const ExperimentConfig& c, std::size_t) { return run_dsner(c, "train"); }},
      {"sweep-lambda", run_lambda_sweep},
      {"ablate-coverage", run_coverage_ablation},
  };
  std::size_t files = 0, mismatches = 0;
  for (const auto& [name, run] : commands) {
    const fs::path first = root / name / "first";
    const fs::path replay = root / name / "replay";
    write_outputs(first.string(), run(cfg, workers));
    const ExperimentConfig again = load_config((first / "manifest.json").string());
    // Replay on one worker so scheduling differences would show up too.
    write_outputs(replay.string(), run(again, 1));
    mismatches += compare_dirs(first, replay, files);
  }

  // Through the command-line tool: replay the library's train manifest.
  const fs::path cli = root / "train" / "cli";
  const std::string cmd = std::string(CMPU_CLI_PATH) + " train --config " + (root / "train" / "first" / "manifest.json").string() +
                          " --out " + cli.string() + " > /dev/null";
  const int status = std::system(cmd.c_str());
  std::size_t cli_files = 0;
  const std::size_t cli_mismatch = status == 0 ? compare_dirs(root / "train" / "first", cli, cli_files) : 1;
  fs::remove_all(root);
  return {mismatches == 0 && cli_mismatch == 0 && status == 0,
          std::to_string(files) + " files across train/sweep-lambda/ablate-coverage replays, " +
              std::to_string(mismatches) + " differ; CLI replay " + std::to_string(cli_files) + " files, " +
              std::to_string(cli_mismatch) + " differ"};
}

}  // namespace

int main() {
  const std::size_t workers = worker_count();
  const ExperimentConfig cfg;
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "loss bound", loss_bound},
      {2, "gradient correctness", gradient_check},
      {3, "estimator algebra", estimator_algebra},
      {4, "unbiasedness", [&] { return unbiasedness(workers); }},
      {5, "consistency rate", [&] { return consistency_rate(workers); }},
      {6, "overfit probe", [&] { return overfit(cfg); }},
      {7, "ds-ner trend", [&] { return dsner_trend(cfg, workers); }},
      {8, "lambda sweep", [&] { return lambda_sweep(cfg, workers); }},
      {9, "evaluation golden", golden},
      {10, "reproducibility", [&] { return reproducibility(workers); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
