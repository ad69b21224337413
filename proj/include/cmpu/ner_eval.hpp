#pragma once

#include <compare>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmpu/corpus.hpp"
#include "cmpu/model.hpp"

namespace cmpu {

/// Entity mention; end is inclusive.
struct Span {
  std::size_t sentence = 0;
  std::size_t start = 0;
  std::size_t end = 0;
  int cls = 1;

  friend auto operator<=>(const Span&, const Span&) = default;
};

/// Maximal runs of one positive class; class 0 and class changes break runs.
std::vector<Span> decode_spans_from_classes(std::span<const int> token_classes,
                                            std::size_t sentence = 0);

struct BioDecoding {
  std::vector<Span> spans;
  /// I-X tags that did not continue an X span and were read as B-X.
  std::size_t repairs = 0;
};

BioDecoding decode_spans_from_bio(std::span<const Tag> tags, std::size_t sentence = 0);

/// Inverse of decode_spans_from_bio for spans of one sentence.
std::vector<Tag> encode_bio(std::span<const Span> spans, std::size_t length);

struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  double precision() const;
  double recall() const;
  double f1() const;
};

struct EvalResult {
  std::vector<std::string> class_names;
  std::vector<ClassCounts> per_class;  // index i-1 holds class i
  ClassCounts overall;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double token_accuracy = 0.0;
  std::size_t repairs = 0;
  /// Set when nothing was predicted; precision is then reported as 0.
  bool zero_prediction = false;
};

/// Strict entity-level micro scores: a prediction counts only when sentence,
/// boundaries and class all match. Token accuracy compares collapsed classes.
EvalResult score(std::span<const Span> pred_spans, std::span<const Span> gold_spans,
                 std::size_t num_tokens, std::span<const int> pred_token_classes,
                 std::span<const int> gold_token_classes,
                 const std::vector<std::string>& class_names);

/// Argmax of the softmax output per token; ties go to the lower class.
std::vector<int> predict_token_classes(const SoftmaxModel& model, const TaggedCorpus& corpus);

/// Gold spans from the gold BIO layer; predicted spans from class runs.
EvalResult evaluate_predictions(const TaggedCorpus& corpus, std::span<const int> predicted);
EvalResult evaluate_model(const SoftmaxModel& model, const TaggedCorpus& corpus);

/// Keys: precision, recall, f1, token_accuracy, per_class, repairs, zero_prediction,
/// tp, fp, fn. per_class maps class name to {precision, recall, f1, tp, fp, fn}.
nlohmann::ordered_json to_json(const EvalResult& result);

/// Header and row share this column order.
std::string eval_csv_header();
std::string eval_csv_row(const EvalResult& result);

}  // namespace cmpu
