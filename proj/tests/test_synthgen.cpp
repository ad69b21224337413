#include <doctest.h>

#include <cmath>
#include <random>

#include "cmpu/synthgen.hpp"
#include "remark.hpp"

using namespace cmpu;

TEST_CASE("mixture sampling: unlabeled label frequencies within binomial bands") {
  MixtureSpec spec = default_mixture_spec(3);
  const auto s = sample_pu_dataset(spec, {50, 50}, 10000);
  REQUIRE(s.unlabeled_labels.size() == 10000);
  const double expect[3] = {0.5, 0.3, 0.2};
  for (int y = 0; y < 3; ++y) {
    double count = 0;
    for (int l : s.unlabeled_labels) count += (l == y);
    const double n = 10000.0;
    const double sd = std::sqrt(n * expect[y] * (1 - expect[y]));
    CHECK(std::abs(count - n * expect[y]) < 3 * sd);
  }
  CHECK(s.dataset.positives[0].size() == 50);
  CHECK(sample_pu_dataset(spec, {50, 50}, 100).dataset == sample_pu_dataset(spec, {50, 50}, 100).dataset);
  CHECK_THROWS_AS(sample_pu_dataset(spec, {0, 50}, 100), ValidationError);
}

TEST_CASE("tiny noise puts samples on the class means") {
  MixtureSpec spec = default_mixture_spec(1);
  spec.scale = 1e-12;
  const auto s = sample_pu_dataset(spec, {3, 3}, 20);
  for (int i = 1; i <= 2; ++i) {
    const auto& xs = s.dataset.positives[static_cast<std::size_t>(i - 1)];
    for (std::size_t j = 0; j < xs.size(); ++j) {
      for (std::size_t k = 0; k < spec.dim; ++k) {
        CHECK(xs.row(j)[k] == doctest::Approx(spec.means[static_cast<std::size_t>(i)][k]).epsilon(1e-9));
      }
    }
  }
  for (std::size_t j = 0; j < s.dataset.unlabeled.size(); ++j) {
    const auto& m = spec.means[static_cast<std::size_t>(s.unlabeled_labels[j])];
    CHECK(s.dataset.unlabeled.row(j)[0] == doctest::Approx(m[0]).epsilon(1e-9));
  }
}

TEST_CASE("mixture spec validation") {
  MixtureSpec spec = default_mixture_spec(1);
  spec.means[1] = spec.means[0];
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = default_mixture_spec(1);
  spec.scale = 0.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("biased sampling removes labeled positives from the pool") {
  const auto spec = default_mixture_spec(2);
  const auto low = sample_biased_pu_dataset(spec, 4000, 0.2);
  const auto high = sample_biased_pu_dataset(spec, 4000, 0.9);
  auto neg_share = [](const PuSample& s) {
    double n = 0;
    for (int l : s.unlabeled_labels) n += (l == 0);
    return n / static_cast<double>(s.unlabeled_labels.size());
  };
  CHECK(neg_share(high) > neg_share(low));
  CHECK(low.dataset.total() == 4000);
}

TEST_CASE("corpus generation follows the slot layout") {
  CorpusSpec spec;
  spec.class_names = {"PER", "LOC"};
  spec.lexicon = {{"Ann Lee"}, {"Oslo"}};
  spec.templates = {"{PER} went to {LOC} ."};
  spec.num_sentences = 1;
  spec.features.dim = 8;
  const auto c = generate_corpus(spec);
  REQUIRE(c.sentences.size() == 1);
  const auto& s = c.sentences[0];
  CHECK(s.tokens == std::vector<std::string>{"Ann", "Lee", "went", "to", "Oslo", "."});
  CHECK(s.gold == std::vector<Tag>{Tag::begin(1), Tag::inside(1), Tag::outside(), Tag::outside(),
                                   Tag::begin(2), Tag::outside()});
  CHECK(c.features.size() == 6);
  CHECK(c.features.dim() == 8);

  spec.lexicon[1].clear();
  CHECK_THROWS_AS(generate_corpus(spec), ValidationError);
}

TEST_CASE("default corpus is deterministic and valid") {
  CorpusSpec spec = default_corpus_spec();
  spec.num_sentences = 200;
  const auto a = generate_corpus(spec);
  const auto b = generate_corpus(spec);
  CHECK(a.sentences == b.sentences);
  CHECK(a.features == b.features);
  CHECK_NOTHROW(validate(a));
  spec.seed = 2;
  CHECK_FALSE(generate_corpus(spec).sentences == a.sentences);
}

TEST_CASE("distant labeling of the remark sentence") {
  const auto small = distant_label(fixture::remark_corpus(), fixture::remark_small_dictionary());
  CHECK(small.sentences[0].distant ==
        std::vector<Tag>{Tag::begin(1), Tag::inside(1), Tag::outside(), Tag::outside(), Tag::outside(),
                         Tag::outside(), Tag::outside(), Tag::outside(), Tag::begin(2), Tag::outside(),
                         Tag::outside()});
  const auto full = distant_label(fixture::remark_corpus(), fixture::remark_full_dictionary());
  CHECK(full.sentences[0].distant == full.sentences[0].gold);
  const auto none = distant_label(fixture::remark_corpus(), Dictionary{{}, {}});
  for (const auto& t : none.sentences[0].distant) CHECK(t == Tag::outside());
}

TEST_CASE("distant labeling prefers the longest match") {
  TaggedCorpus c;
  c.class_names = {"PER", "LOC"};
  Sentence s;
  s.tokens = split_tokens("New York City hall");
  s.gold.assign(4, Tag::outside());
  s.distant = s.gold;
  c.sentences.push_back(s);
  const Dictionary d{{{"New", "York"}}, {{"New", "York", "City"}}};
  const auto out = distant_label(c, d);
  CHECK(out.sentences[0].distant ==
        std::vector<Tag>{Tag::begin(2), Tag::inside(2), Tag::inside(2), Tag::outside()});
  const Dictionary tie{{{"New", "York"}}, {{"New", "York"}}};
  CHECK(distant_label(c, tie).sentences[0].distant[0] == Tag::begin(1));
}

TEST_CASE("dictionary coverage takes nested prefixes") {
  CorpusSpec spec = default_corpus_spec();
  spec.lexicon = {{"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"}, {"k"}};
  const auto d02 = build_dictionary(spec, 0.2);
  const auto d04 = build_dictionary(spec, 0.4);
  CHECK(d02[0].size() == 2);
  CHECK(d02[0][1] == std::vector<std::string>{"b"});
  for (std::size_t i = 0; i < d02[0].size(); ++i) CHECK(d02[0][i] == d04[0][i]);
  CHECK(build_dictionary(spec, 1.0)[0].size() == 10);
  CHECK(d02[1].size() == 1);
  CHECK_THROWS_AS(build_dictionary(spec, 0.0), ValidationError);
}

TEST_CASE("corpus_to_pu partitions tokens") {
  auto c = distant_label(fixture::remark_corpus(), fixture::remark_small_dictionary());
  featurize(c, FeatureConfig{});
  const auto ds = corpus_to_pu(c);
  CHECK(ds.positives[0].size() == 2);
  CHECK(ds.positives[1].size() == 1);
  CHECK(ds.unlabeled.size() == 8);
  // Texas, Medical, Center are unlabeled although gold LOC.
  const auto offsets = c.offsets();
  bool found = false;
  for (std::size_t j = 0; j < ds.unlabeled.size(); ++j) {
    found |= std::equal(ds.unlabeled.row(j).begin(), ds.unlabeled.row(j).end(), c.features.row(4).begin());
  }
  CHECK(found);
  CHECK(offsets[0] == 0);

  auto full = distant_label(fixture::remark_corpus(), fixture::remark_full_dictionary());
  featurize(full, FeatureConfig{});
  CHECK(corpus_to_pu(full).unlabeled.size() == 5);

  auto empty = distant_label(fixture::remark_corpus(), Dictionary{{}, {}});
  featurize(empty, FeatureConfig{});
  CHECK_THROWS_AS(corpus_to_pu(empty), ValidationError);
}

TEST_CASE("distant recall grows with coverage and precision stays 1") {
  CorpusSpec spec = default_corpus_spec();
  spec.num_sentences = 400;
  const auto corpus = generate_corpus(spec);
  double last = -1.0;
  for (double rho : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    const auto q = annotation_quality(distant_label(corpus, build_dictionary(spec, rho)));
    CHECK(q.precision == 1.0);
    CHECK(q.recall >= last);
    last = q.recall;
  }
  CHECK(last == 1.0);
}

TEST_CASE("split drops test sentences seen in training") {
  CorpusSpec spec = default_corpus_spec();
  spec.num_sentences = 500;
  const auto corpus = generate_corpus(spec);
  const auto split = split_corpus(corpus, 0.2, 9);
  CHECK(split.train.sentences.size() + split.test.sentences.size() <= 500);
  CHECK(split.train.sentences.size() == 400);
  std::size_t overlap = 0;
  for (const auto& t : split.test.sentences) {
    for (const auto& s : split.train.sentences) overlap += s.tokens == t.tokens;
  }
  CHECK(overlap == 0);
  CHECK(split.train.has_features());
  CHECK_THROWS_AS(split_corpus(corpus, 1.0, 9), ValidationError);
}
