#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cmpu/model.hpp"
#include "oracle.hpp"

using namespace cmpu;

TEST_CASE("softmax") {
  const std::vector<double> z0{0, 0, 0};
  for (double p : softmax(z0)) CHECK(p == doctest::Approx(1.0 / 3.0));

  // Hand oracle: e^10 / (e^10 + 2).
  const std::vector<double> z{10, 0, 0};
  const auto p = softmax(z);
  const double e10 = std::exp(10.0);
  CHECK(p[0] == doctest::Approx(e10 / (e10 + 2.0)).epsilon(1e-14));
  CHECK(p[0] > 0.9999);
  CHECK(p[1] == p[2]);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 30.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> logits(5);
    for (auto& v : logits) v = g(rng);
    double s = 0.0;
    for (double v : softmax(logits)) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("mae loss values") {
  const LabelSpace space(2);
  const std::vector<double> exact{0, 1, 0};
  CHECK(mae_loss(exact, OneHotLabel(1, space)) == 0.0);
  const std::vector<double> uniform{1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(mae_loss(uniform, OneHotLabel(0, space)) == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
  const std::vector<double> wrong{0, 1, 0};
  CHECK(mae_loss(wrong, OneHotLabel(0, space)) == 2.0 / 3.0);
  const std::vector<double> short_p{0.5, 0.5};
  CHECK_THROWS_AS(mae_loss(short_p, OneHotLabel(0, space)), ValidationError);
}

TEST_CASE("loss gradient matches finite differences and has the expected signs") {
  const LabelSpace space(2);
  const std::vector<double> z{0, 0, 0};
  const auto g = loss_grad_wrt_logits(softmax(z), OneHotLabel(0, space));
  CHECK(g[0] < 0.0);
  CHECK(g[1] > 0.0);
  CHECK(g[2] > 0.0);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> logits(3);
    for (auto& v : logits) v = n(rng);
    const int y = static_cast<int>(rng() % 3);
    const auto grad = loss_grad_wrt_logits(softmax(logits), OneHotLabel(y, space));
    for (std::size_t k = 0; k < 3; ++k) {
      const double h = 1e-6;
      auto up = logits, dn = logits;
      up[k] += h;
      dn[k] -= h;
      const double fd = (oracle::mae(softmax(up), y) - oracle::mae(softmax(dn), y)) / (2 * h);
      CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
    }
  }
}

TEST_CASE("forward agrees with the reference for both architectures") {
  for (auto arch : {Architecture::kLinear, Architecture::kMlp}) {
    const auto m = SoftmaxModel::random(arch, 4, 2, 3, 17);
    const std::vector<double> x{0.3, -1.2, 2.0, 0.1};
    const auto p = forward(m, x);
    const auto q = oracle::probs(m, x);
    for (std::size_t k = 0; k < p.size(); ++k) CHECK(p[k] == doctest::Approx(q[k]).epsilon(1e-13));
  }
  const SoftmaxModel zero(Architecture::kLinear, 2, 2);
  const std::vector<double> x{5.0, -3.0};
  for (double p : forward(zero, x)) CHECK(p == doctest::Approx(1.0 / 3.0));
  const std::vector<double> bad{1.0};
  CHECK_THROWS_AS(forward(zero, bad), ValidationError);
}

TEST_CASE("sgd step") {
  SoftmaxModel m(Architecture::kLinear, 1, 1);
  m.params()[0] = 1.0;
  GradientBuffer g(m);
  const SoftmaxModel before = m;
  SgdConfig cfg;
  cfg.learning_rate = 0.1;
  sgd_step(m, g, cfg);
  CHECK(m == before);
  g.values()[0] = 0.5;
  sgd_step(m, g, cfg);
  CHECK(m.params()[0] == doctest::Approx(0.95).epsilon(1e-15));
  g.values()[0] = std::nan("");
  CHECK_THROWS_WITH_AS(sgd_step(m, g, cfg), "numerical divergence", RuntimeError);
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("argmax ties go low") {
  const std::vector<double> p{0.4, 0.4, 0.2};
  CHECK(argmax(p) == 0);
  const std::vector<double> q{0.1, 0.45, 0.45};
  CHECK(argmax(q) == 1);
}

TEST_CASE("model text round-trip is exact") {
  for (auto arch : {Architecture::kLinear, Architecture::kMlp}) {
    const auto m = SoftmaxModel::random(arch, 5, 2, 4, 3);
    std::stringstream ss;
    save_model(m, ss);
    CHECK(load_model(ss) == m);
  }
  std::stringstream broken("cmpu-model 2\n");
  CHECK_THROWS_AS(load_model(broken), ValidationError);
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125}) CHECK(parse_double(format_double(v)) == v);
}
