#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CMPU_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("command-line exit codes") {
  const fs::path dir = fs::temp_directory_path() / "cmpu_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string out = (dir / "gen").string();
  CHECK(run_cli("--out " + out + " gen") == 0);
  CHECK(fs::exists(fs::path(out) / "corpus.conll"));
  CHECK(fs::exists(fs::path(out) / "manifest.json"));

  CHECK(run_cli("--coverage 1.5 gen") == 1);
  CHECK(run_cli("--bogus gen") == 1);
  CHECK(run_cli("") == 1);
  CHECK(run_cli("--estimator upu train") == 1);
  CHECK(run_cli("--config " + (dir / "missing.json").string() + " gen") == 1);

  // A regular file where the output directory should be.
  std::ofstream(dir / "blocker") << "x";
  CHECK(run_cli("--out " + (dir / "blocker").string() + " gen") == 2);

  std::ofstream(dir / "tiny.json") << R"({"sgd": {"epochs": 1}, "corpus": {"num_sentences": 200}})";
  CHECK(run_cli("--config " + (dir / "tiny.json").string() + " --seed 4 --out " + (dir / "t").string() + " train") == 0);
  CHECK(run_cli("--out " + (dir / "e").string() + " eval --model " + (dir / "t" / "model_seed4.txt").string() +
                " --input " + out + "/corpus.conll") == 0);
  CHECK(fs::exists(dir / "e" / "eval.json"));

  // Deliberate prior corruption must fail the unbiasedness check.
  CHECK(run_cli("--out " + (dir / "v").string() + " verify --corrupt-priors 1.2") == 3);
  fs::remove_all(dir);
}
