#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cmpu/core.hpp"

namespace cmpu {

/// One BIO tag. cls is 1..C for B/I and 0 for O.
struct Tag {
  enum class Kind : std::uint8_t { kOutside, kBegin, kInside };
  Kind kind = Kind::kOutside;
  int cls = 0;

  static Tag outside() { return {}; }
  static Tag begin(int c) { return {Kind::kBegin, c}; }
  static Tag inside(int c) { return {Kind::kInside, c}; }

  friend bool operator==(const Tag&, const Tag&) = default;
};

std::string format_tag(const Tag& tag, const std::vector<std::string>& class_names);
Tag parse_tag(const std::string& text, const std::vector<std::string>& class_names);

/// True when no I-X follows O or a tag of another class.
bool is_valid_bio(std::span<const Tag> tags);

/// Collapses B-X/I-X to X and O to 0.
std::vector<int> tag_classes(std::span<const Tag> tags);

struct Sentence {
  std::vector<std::string> tokens;
  std::vector<Tag> gold;
  std::vector<Tag> distant;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

/// Sentences with gold and distant BIO layers plus per-token features.
/// Token t of sentence s has flat index offset(s) + t in `features`.
struct TaggedCorpus {
  std::vector<std::string> class_names;  // class i is class_names[i-1]
  std::vector<Sentence> sentences;
  Samples features;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  std::size_t num_tokens() const;
  /// Flat index of the first token of each sentence.
  std::vector<std::size_t> offsets() const;
  bool has_features() const { return features.size() == num_tokens() && num_tokens() > 0; }

  std::vector<int> gold_classes() const;
  std::vector<int> distant_classes() const;
};

/// Throws ValidationError if any layer is invalid BIO or misaligned.
void validate(const TaggedCorpus& corpus);

/// Writes `token<TAB>gold<TAB>distant` lines, blank line between sentences, LF endings.
void write_conll(const TaggedCorpus& corpus, std::ostream& out);
/// Reads the same layout. Features are left empty.
TaggedCorpus read_conll(std::istream& in, const std::vector<std::string>& class_names);
void write_conll(const TaggedCorpus& corpus, const std::string& path);
TaggedCorpus read_conll(const std::string& path, const std::vector<std::string>& class_names);

struct PriorEstimate {
  ClassPriors priors;
  bool clamped = false;
};

/// pi_i = gamma * (distant tokens of class i) / (all tokens), rescaled so sum <= 0.99.
PriorEstimate estimate_priors_from_labels(const TaggedCorpus& corpus, double gamma = 1.0);

/// Same counting on gold labels; the known-prior setting.
ClassPriors gold_priors(const TaggedCorpus& corpus);

}  // namespace cmpu
