#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cmpu/core.hpp"
#include "cmpu/corpus.hpp"
#include "cmpu/ner_eval.hpp"

namespace cmpu {

// ---------------------------------------------------------------------------
// Gaussian mixture PU data
// ---------------------------------------------------------------------------

/// Isotropic Gaussian class-conditionals; means[0] is the negative class.
struct MixtureSpec {
  int num_classes = 2;
  std::size_t dim = 2;
  std::vector<std::vector<double>> means;
  double scale = 1.0;
  ClassPriors priors{std::vector<double>{0.3, 0.2}};
  std::uint64_t seed = 1;

  void validate() const;
};

/// Three well separated clusters in two dimensions with priors (0.3, 0.2).
MixtureSpec default_mixture_spec(std::uint64_t seed = 1);

struct PuSample {
  PuDataset dataset;
  /// True class of every unlabeled row; for evaluation only.
  std::vector<int> unlabeled_labels;
};

/// X_{P_i} ~ N(mean_i, scale^2 I); X_U from the full mixture.
PuSample sample_pu_dataset(const MixtureSpec& spec, const std::vector<std::size_t>& n_p,
                           std::size_t n_u);

/// Draws n_total points from the mixture and labels each true positive with
/// probability `coverage`. Labeled points leave the unlabeled pool, so lower
/// coverage leaves U closer to the negative distribution.
PuSample sample_biased_pu_dataset(const MixtureSpec& spec, std::size_t n_total, double coverage);

/// n samples from class y (0 = negative).
Samples sample_class(const MixtureSpec& spec, int y, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Distantly supervised tagging corpus
// ---------------------------------------------------------------------------

struct FeatureConfig {
  std::size_t dim = 256;
  std::uint64_t seed = 7;
  /// Weight of the +-1 context bag relative to the token itself.
  double context_weight = 1.0;
  /// Overall multiplier on the feature vector.
  double scale = 10.0;
};

/// Templates mark entity slots as {NAME} with NAME one of class_names, and
/// non-entity filler slots as {NAME} with NAME a key of `fillers`.
struct CorpusSpec {
  std::vector<std::string> class_names;
  /// lexicon[i-1] lists the surface forms of class i in dictionary order.
  std::vector<std::vector<std::string>> lexicon;
  std::vector<std::pair<std::string, std::vector<std::string>>> fillers;
  std::vector<std::string> templates;
  std::size_t num_sentences = 3000;
  double coverage = 1.0;
  std::uint64_t seed = 1;
  FeatureConfig features;

  void validate() const;
};

/// Two classes (PER, LOC), 60 forms each, 3000 sentences.
CorpusSpec default_corpus_spec();

/// Dictionary: per class, a list of token sequences.
using Dictionary = std::vector<std::vector<std::vector<std::string>>>;

std::vector<std::string> split_tokens(const std::string& text);

/// Sentences from templates with gold BIO from slot positions; distant layer all O.
TaggedCorpus generate_corpus(const CorpusSpec& spec);

/// Seeded random projection of (token, bag of +-1 neighbours) into cfg.dim.
void featurize(TaggedCorpus& corpus, const FeatureConfig& cfg);

/// Exact token-sequence matching. Candidate matches are accepted longest first,
/// ties to the leftmost start, then to the lower class index; accepted spans
/// never overlap. Everything unmatched is O.
TaggedCorpus distant_label(TaggedCorpus corpus, const Dictionary& dictionary);

/// First ceil(coverage * |lexicon_c|) forms of each class.
Dictionary build_dictionary(const CorpusSpec& spec);
Dictionary build_dictionary(const CorpusSpec& spec, double coverage);

/// Distant B-i/I-i tokens become positives of class i; O tokens go to the unlabeled pool.
PuDataset corpus_to_pu(const TaggedCorpus& corpus);

/// Tokens whose distant label is O, as samples. Used as negatives by the supervised baseline.
Samples distant_outside_tokens(const TaggedCorpus& corpus);

/// Distant layer scored as predictions against gold.
EvalResult annotation_quality(const TaggedCorpus& corpus);

struct CorpusSplit {
  TaggedCorpus train;
  TaggedCorpus test;
};

/// Seeded holdout of test_fraction of the sentences. Test sentences whose token
/// sequence also occurs in the training part are dropped.
CorpusSplit split_corpus(const TaggedCorpus& corpus, double test_fraction, std::uint64_t seed);

}  // namespace cmpu
