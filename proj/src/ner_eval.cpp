#include "cmpu/ner_eval.hpp"

#include <algorithm>
#include <set>

namespace cmpu {

std::vector<Span> decode_spans_from_classes(std::span<const int> token_classes,
                                            std::size_t sentence) {
  std::vector<Span> spans;
  std::size_t i = 0;
  while (i < token_classes.size()) {
    const int c = token_classes[i];
    if (c == 0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < token_classes.size() && token_classes[j + 1] == c) ++j;
    spans.push_back({sentence, i, j, c});
    i = j + 1;
  }
  return spans;
}

BioDecoding decode_spans_from_bio(std::span<const Tag> tags, std::size_t sentence) {
  BioDecoding out;
  bool open = false;
  Span current;
  auto close = [&] {
    if (open) out.spans.push_back(current);
    open = false;
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const Tag& t = tags[i];
    switch (t.kind) {
      case Tag::Kind::kOutside:
        close();
        break;
      case Tag::Kind::kBegin:
        close();
        current = {sentence, i, i, t.cls};
        open = true;
        break;
      case Tag::Kind::kInside:
        if (open && current.cls == t.cls) {
          current.end = i;
        } else {
          close();
          ++out.repairs;
          current = {sentence, i, i, t.cls};
          open = true;
        }
        break;
    }
  }
  close();
  return out;
}

std::vector<Tag> encode_bio(std::span<const Span> spans, std::size_t length) {
  std::vector<Tag> tags(length, Tag::outside());
  for (const Span& s : spans) {
    if (s.end >= length || s.start > s.end) throw ValidationError("encode_bio: span out of range");
    tags[s.start] = Tag::begin(s.cls);
    for (std::size_t i = s.start + 1; i <= s.end; ++i) tags[i] = Tag::inside(s.cls);
  }
  return tags;
}

double ClassCounts::precision() const {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double ClassCounts::recall() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

// 2PR/(P+R) written on the counts, so rational values come out correctly rounded.
double ClassCounts::f1() const {
  const std::size_t denom = 2 * tp + fp + fn;
  return tp == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

EvalResult score(std::span<const Span> pred_spans, std::span<const Span> gold_spans,
                 std::size_t num_tokens, std::span<const int> pred_token_classes,
                 std::span<const int> gold_token_classes,
                 const std::vector<std::string>& class_names) {
  if (pred_token_classes.size() != num_tokens || gold_token_classes.size() != num_tokens) {
    throw ValidationError("score: token class sequences do not match num_tokens");
  }
  const auto num_classes = class_names.size();
  auto check = [num_classes](const Span& s) {
    if (s.start > s.end || s.cls < 1 || static_cast<std::size_t>(s.cls) > num_classes) {
      throw ValidationError("score: malformed span");
    }
  };
  for (const Span& s : pred_spans) check(s);
  for (const Span& s : gold_spans) check(s);

  EvalResult r;
  r.class_names = class_names;
  r.per_class.assign(num_classes, ClassCounts{});
  const std::set<Span> gold(gold_spans.begin(), gold_spans.end());
  const std::set<Span> pred(pred_spans.begin(), pred_spans.end());
  for (const Span& s : pred) {
    auto& c = r.per_class[static_cast<std::size_t>(s.cls - 1)];
    if (gold.count(s)) {
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  for (const Span& s : gold) {
    if (!pred.count(s)) ++r.per_class[static_cast<std::size_t>(s.cls - 1)].fn;
  }
  for (const auto& c : r.per_class) {
    r.overall.tp += c.tp;
    r.overall.fp += c.fp;
    r.overall.fn += c.fn;
  }
  r.precision = r.overall.precision();
  r.recall = r.overall.recall();
  r.f1 = r.overall.f1();
  r.zero_prediction = pred.empty();

  std::size_t correct = 0;
  for (std::size_t i = 0; i < num_tokens; ++i) {
    if (pred_token_classes[i] == gold_token_classes[i]) ++correct;
  }
  r.token_accuracy = num_tokens == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(num_tokens);
  return r;
}

std::vector<int> predict_token_classes(const SoftmaxModel& model, const TaggedCorpus& corpus) {
  if (!corpus.has_features()) throw ValidationError("predict: corpus has no features");
  std::vector<int> out(corpus.features.size());
  ForwardCache cache;
  for (std::size_t i = 0; i < out.size(); ++i) {
    forward(model, corpus.features.row(i), cache);
    out[i] = argmax(cache.probs);
  }
  return out;
}

EvalResult evaluate_predictions(const TaggedCorpus& corpus, std::span<const int> predicted) {
  const std::size_t n = corpus.num_tokens();
  if (predicted.size() != n) throw ValidationError("evaluate: prediction length mismatch");
  std::vector<Span> gold, pred;
  std::size_t repairs = 0;
  std::size_t offset = 0;
  for (std::size_t s = 0; s < corpus.sentences.size(); ++s) {
    const auto& sent = corpus.sentences[s];
    auto g = decode_spans_from_bio(sent.gold, s);
    repairs += g.repairs;
    gold.insert(gold.end(), g.spans.begin(), g.spans.end());
    auto p = decode_spans_from_classes(predicted.subspan(offset, sent.tokens.size()), s);
    pred.insert(pred.end(), p.begin(), p.end());
    offset += sent.tokens.size();
  }
  const auto gold_classes = corpus.gold_classes();
  EvalResult r = score(pred, gold, n, predicted, gold_classes, corpus.class_names);
  r.repairs = repairs;
  return r;
}

EvalResult evaluate_model(const SoftmaxModel& model, const TaggedCorpus& corpus) {
  const auto predicted = predict_token_classes(model, corpus);
  return evaluate_predictions(corpus, predicted);
}

nlohmann::ordered_json to_json(const EvalResult& result) {
  nlohmann::ordered_json j;
  j["precision"] = result.precision;
  j["recall"] = result.recall;
  j["f1"] = result.f1;
  j["token_accuracy"] = result.token_accuracy;
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < result.per_class.size(); ++i) {
    const auto& c = result.per_class[i];
    per[result.class_names[i]] = {{"precision", c.precision()}, {"recall", c.recall()},
                                  {"f1", c.f1()},               {"tp", c.tp},
                                  {"fp", c.fp},                 {"fn", c.fn}};
  }
  j["per_class"] = per;
  j["repairs"] = result.repairs;
  j["zero_prediction"] = result.zero_prediction;
  j["tp"] = result.overall.tp;
  j["fp"] = result.overall.fp;
  j["fn"] = result.overall.fn;
  return j;
}

std::string eval_csv_header() {
  return "precision,recall,f1,token_accuracy,tp,fp,fn,repairs,zero_prediction";
}

std::string eval_csv_row(const EvalResult& r) {
  return format_double(r.precision) + ',' + format_double(r.recall) + ',' + format_double(r.f1) +
         ',' + format_double(r.token_accuracy) + ',' + std::to_string(r.overall.tp) + ',' +
         std::to_string(r.overall.fp) + ',' + std::to_string(r.overall.fn) + ',' +
         std::to_string(r.repairs) + ',' + (r.zero_prediction ? "1" : "0");
}

}  // namespace cmpu
