#include "cmpu/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

namespace cmpu {

std::string format_tag(const Tag& tag, const std::vector<std::string>& class_names) {
  if (tag.kind == Tag::Kind::kOutside) return "O";
  if (tag.cls < 1 || tag.cls > static_cast<int>(class_names.size())) {
    throw ValidationError("tag class " + std::to_string(tag.cls) + " has no name");
  }
  return (tag.kind == Tag::Kind::kBegin ? "B-" : "I-") + class_names[static_cast<std::size_t>(tag.cls - 1)];
}

Tag parse_tag(const std::string& text, const std::vector<std::string>& class_names) {
  if (text == "O") return Tag::outside();
  if (text.size() < 3 || text[1] != '-' || (text[0] != 'B' && text[0] != 'I')) {
    throw ValidationError("malformed BIO tag '" + text + "'");
  }
  const std::string name = text.substr(2);
  auto it = std::find(class_names.begin(), class_names.end(), name);
  if (it == class_names.end()) throw ValidationError("unknown entity class '" + name + "'");
  const int cls = static_cast<int>(it - class_names.begin()) + 1;
  return text[0] == 'B' ? Tag::begin(cls) : Tag::inside(cls);
}

bool is_valid_bio(std::span<const Tag> tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].kind != Tag::Kind::kInside) continue;
    if (i == 0) return false;
    const Tag& prev = tags[i - 1];
    if (prev.kind == Tag::Kind::kOutside || prev.cls != tags[i].cls) return false;
  }
  return true;
}

std::vector<int> tag_classes(std::span<const Tag> tags) {
  std::vector<int> out;
  out.reserve(tags.size());
  for (const Tag& t : tags) out.push_back(t.kind == Tag::Kind::kOutside ? 0 : t.cls);
  return out;
}

std::size_t TaggedCorpus::num_tokens() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

std::vector<std::size_t> TaggedCorpus::offsets() const {
  std::vector<std::size_t> out;
  out.reserve(sentences.size());
  std::size_t n = 0;
  for (const auto& s : sentences) {
    out.push_back(n);
    n += s.tokens.size();
  }
  return out;
}

std::vector<int> TaggedCorpus::gold_classes() const {
  std::vector<int> out;
  for (const auto& s : sentences) {
    auto c = tag_classes(s.gold);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

std::vector<int> TaggedCorpus::distant_classes() const {
  std::vector<int> out;
  for (const auto& s : sentences) {
    auto c = tag_classes(s.distant);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

void validate(const TaggedCorpus& corpus) {
  const int c = corpus.num_classes();
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const auto& s = corpus.sentences[i];
    if (s.gold.size() != s.tokens.size() || s.distant.size() != s.tokens.size()) {
      throw ValidationError("sentence " + std::to_string(i) + ": label layers misaligned");
    }
    for (const auto* layer : {&s.gold, &s.distant}) {
      for (const Tag& t : *layer) {
        if (t.kind != Tag::Kind::kOutside && (t.cls < 1 || t.cls > c)) {
          throw ValidationError("sentence " + std::to_string(i) + ": class out of range");
        }
      }
      if (!is_valid_bio(*layer)) {
        throw ValidationError("sentence " + std::to_string(i) + ": invalid BIO sequence");
      }
    }
  }
  if (!corpus.features.empty() && corpus.features.size() != corpus.num_tokens()) {
    throw ValidationError("corpus: feature rows do not match token count");
  }
}

void write_conll(const TaggedCorpus& corpus, std::ostream& out) {
  bool first = true;
  for (const auto& s : corpus.sentences) {
    if (!first) out << '\n';
    first = false;
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      out << s.tokens[t] << '\t' << format_tag(s.gold[t], corpus.class_names) << '\t'
          << format_tag(s.distant[t], corpus.class_names) << '\n';
    }
  }
}

TaggedCorpus read_conll(std::istream& in, const std::vector<std::string>& class_names) {
  TaggedCorpus corpus;
  corpus.class_names = class_names;
  Sentence current;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!current.tokens.empty()) corpus.sentences.push_back(std::move(current));
    current = Sentence{};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      throw ValidationError("line " + std::to_string(line_no) + ": CRLF line ending");
    }
    if (line.empty()) {
      flush();
      continue;
    }
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected 3 tab-separated columns");
    }
    current.tokens.push_back(line.substr(0, t1));
    current.gold.push_back(parse_tag(line.substr(t1 + 1, t2 - t1 - 1), class_names));
    current.distant.push_back(parse_tag(line.substr(t2 + 1), class_names));
  }
  flush();
  validate(corpus);
  return corpus;
}

void write_conll(const TaggedCorpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write " + path);
  write_conll(corpus, out);
}

TaggedCorpus read_conll(const std::string& path, const std::vector<std::string>& class_names) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("cannot read " + path);
  return read_conll(in, class_names);
}

namespace {

std::vector<std::size_t> count_classes(const TaggedCorpus& corpus, bool distant) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(corpus.num_classes()), 0);
  for (const auto& s : corpus.sentences) {
    for (const Tag& t : distant ? s.distant : s.gold) {
      if (t.kind != Tag::Kind::kOutside) ++counts[static_cast<std::size_t>(t.cls - 1)];
    }
  }
  return counts;
}

}  // namespace

PriorEstimate estimate_priors_from_labels(const TaggedCorpus& corpus, double gamma) {
  if (!(gamma >= 1.0)) throw ValidationError("gamma must be >= 1");
  const std::size_t total = corpus.num_tokens();
  if (total == 0) throw ValidationError("empty corpus");
  const auto counts = count_classes(corpus, true);
  std::vector<double> pi;
  std::string missing;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) missing += (missing.empty() ? "" : ", ") + corpus.class_names[i];
    pi.push_back(gamma * static_cast<double>(counts[i]) / static_cast<double>(total));
  }
  if (!missing.empty()) throw ValidationError("no positive tokens for class " + missing);
  double sum = 0.0;
  for (double p : pi) sum += p;
  bool clamped = false;
  constexpr double kMaxSum = 0.99;
  if (sum > kMaxSum) {
    for (double& p : pi) p *= kMaxSum / sum;
    clamped = true;
  }
  return {ClassPriors(std::move(pi)), clamped};
}

ClassPriors gold_priors(const TaggedCorpus& corpus) {
  const std::size_t total = corpus.num_tokens();
  if (total == 0) throw ValidationError("empty corpus");
  const auto counts = count_classes(corpus, false);
  std::vector<double> pi;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) throw ValidationError("no positive tokens for class " + corpus.class_names[i]);
    pi.push_back(static_cast<double>(counts[i]) / static_cast<double>(total));
  }
  return ClassPriors(std::move(pi));
}

}  // namespace cmpu
