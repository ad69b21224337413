#include "cmpu/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace cmpu {

// ---------------------------------------------------------------------------
// Gaussian mixture
// ---------------------------------------------------------------------------

void MixtureSpec::validate() const {
  if (num_classes < 1) throw ValidationError("mixture: need at least one positive class");
  if (priors.num_classes() != num_classes) throw ValidationError("mixture: priors length != C");
  if (dim == 0) throw ValidationError("mixture: zero dimension");
  if (means.size() != static_cast<std::size_t>(num_classes) + 1) {
    throw ValidationError("mixture: need C+1 means");
  }
  for (const auto& m : means) {
    if (m.size() != dim) throw ValidationError("mixture: mean dimension mismatch");
  }
  for (std::size_t a = 0; a < means.size(); ++a) {
    for (std::size_t b = a + 1; b < means.size(); ++b) {
      if (means[a] == means[b]) throw ValidationError("mixture: class means must be distinct");
    }
  }
  if (!(scale > 0.0)) throw ValidationError("mixture: scale must be > 0");
}

MixtureSpec default_mixture_spec(std::uint64_t seed) {
  MixtureSpec spec;
  spec.num_classes = 2;
  spec.dim = 2;
  spec.means = {{0.0, 0.0}, {2.5, 0.0}, {0.0, 2.5}};
  spec.scale = 1.0;
  spec.priors = ClassPriors({0.3, 0.2});
  spec.seed = seed;
  return spec;
}

namespace {

void draw_point(const MixtureSpec& spec, int y, std::mt19937_64& rng,
                std::normal_distribution<double>& normal, std::vector<double>& x) {
  const auto& mean = spec.means[static_cast<std::size_t>(y)];
  x.resize(spec.dim);
  for (std::size_t k = 0; k < spec.dim; ++k) x[k] = mean[k] + spec.scale * normal(rng);
}

int draw_label(const MixtureSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  for (int i = 1; i <= spec.num_classes; ++i) {
    if (r < spec.priors[i]) return i;
    r -= spec.priors[i];
  }
  return 0;
}

}  // namespace

Samples sample_class(const MixtureSpec& spec, int y, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (y < 0 || y > spec.num_classes) throw ValidationError("sample_class: label out of range");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Samples out(spec.dim);
  out.reserve(n);
  std::vector<double> x;
  for (std::size_t j = 0; j < n; ++j) {
    draw_point(spec, y, rng, normal, x);
    out.push_back(x);
  }
  return out;
}

PuSample sample_pu_dataset(const MixtureSpec& spec, const std::vector<std::size_t>& n_p,
                           std::size_t n_u) {
  spec.validate();
  if (n_p.size() != static_cast<std::size_t>(spec.num_classes)) {
    throw ValidationError("sample_pu_dataset: need one positive count per class");
  }
  for (std::size_t n : n_p) {
    if (n < 1) throw ValidationError("sample_pu_dataset: positive counts must be >= 1");
  }
  if (n_u < 1) throw ValidationError("sample_pu_dataset: n_u must be >= 1");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  PuSample out;
  std::vector<double> x;
  for (int i = 1; i <= spec.num_classes; ++i) {
    Samples s(spec.dim);
    s.reserve(n_p[static_cast<std::size_t>(i - 1)]);
    for (std::size_t j = 0; j < n_p[static_cast<std::size_t>(i - 1)]; ++j) {
      draw_point(spec, i, rng, normal, x);
      s.push_back(x);
    }
    out.dataset.positives.push_back(std::move(s));
  }
  out.dataset.unlabeled = Samples(spec.dim);
  out.dataset.unlabeled.reserve(n_u);
  out.unlabeled_labels.reserve(n_u);
  for (std::size_t j = 0; j < n_u; ++j) {
    const int y = draw_label(spec, rng);
    draw_point(spec, y, rng, normal, x);
    out.dataset.unlabeled.push_back(x);
    out.unlabeled_labels.push_back(y);
  }
  return out;
}

PuSample sample_biased_pu_dataset(const MixtureSpec& spec, std::size_t n_total, double coverage) {
  spec.validate();
  if (!(coverage > 0.0 && coverage <= 1.0)) throw ValidationError("coverage must be in (0, 1]");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PuSample out;
  out.dataset.positives.assign(static_cast<std::size_t>(spec.num_classes), Samples(spec.dim));
  out.dataset.unlabeled = Samples(spec.dim);
  std::vector<double> x;
  for (std::size_t j = 0; j < n_total; ++j) {
    const int y = draw_label(spec, rng);
    draw_point(spec, y, rng, normal, x);
    if (y > 0 && u(rng) < coverage) {
      out.dataset.positives[static_cast<std::size_t>(y - 1)].push_back(x);
    } else {
      out.dataset.unlabeled.push_back(x);
      out.unlabeled_labels.push_back(y);
    }
  }
  validate(out.dataset);
  return out;
}

// ---------------------------------------------------------------------------
// Tagging corpus
// ---------------------------------------------------------------------------

std::vector<std::string> split_tokens(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

namespace {

// Slot name if the token is "{NAME}", otherwise empty.
std::string slot_name(const std::string& token) {
  if (token.size() >= 3 && token.front() == '{' && token.back() == '}') {
    return token.substr(1, token.size() - 2);
  }
  return {};
}

int class_index(const std::vector<std::string>& names, const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? 0 : static_cast<int>(it - names.begin()) + 1;
}

const std::vector<std::string>* filler_pool(const CorpusSpec& spec, const std::string& name) {
  for (const auto& [key, words] : spec.fillers) {
    if (key == name) return &words;
  }
  return nullptr;
}

}  // namespace

void CorpusSpec::validate() const {
  if (class_names.empty()) throw ValidationError("corpus spec: no entity classes");
  if (lexicon.size() != class_names.size()) {
    throw ValidationError("corpus spec: one lexicon list per class required");
  }
  if (templates.empty()) throw ValidationError("corpus spec: no templates");
  if (!(coverage > 0.0 && coverage <= 1.0)) throw ValidationError("coverage must be in (0, 1]");
  if (features.dim == 0) throw ValidationError("corpus spec: feature dimension must be > 0");
  for (const auto& tmpl : templates) {
    for (const auto& tok : split_tokens(tmpl)) {
      const std::string slot = slot_name(tok);
      if (slot.empty()) continue;
      const int c = class_index(class_names, slot);
      if (c == 0) {
        const auto* pool = filler_pool(*this, slot);
        if (pool == nullptr) throw ValidationError("template slot {" + slot + "} names no class");
        if (pool->empty()) throw ValidationError("filler pool {" + slot + "} is empty");
        continue;
      }
      if (lexicon[static_cast<std::size_t>(c - 1)].empty()) {
        throw ValidationError("template references empty lexicon class " + slot);
      }
    }
  }
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Rademacher vector with entries +-1/sqrt(d) keyed by (seed, role, token).
class Projection {
 public:
  Projection(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}

  const std::vector<double>& get(int role, const std::string& token) {
    const std::string key = std::to_string(role) + '\x1f' + token;
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::vector<double> v(dim_);
    const double a = 1.0 / std::sqrt(static_cast<double>(dim_));
    std::uint64_t state = mix_seed(seed_ ^ fnv1a(token), static_cast<std::uint64_t>(role));
    for (std::size_t k = 0; k < dim_; k += 64) {
      state = mix_seed(state, k);
      for (std::size_t b = 0; b < 64 && k + b < dim_; ++b) v[k + b] = ((state >> b) & 1U) ? a : -a;
    }
    return cache_.emplace(key, std::move(v)).first->second;
  }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  std::unordered_map<std::string, std::vector<double>> cache_;
};

constexpr int kSelfRole = 0;
constexpr int kContextRole = 1;

}  // namespace

void featurize(TaggedCorpus& corpus, const FeatureConfig& cfg) {
  if (cfg.dim == 0) throw ValidationError("featurize: zero dimension");
  Projection proj(cfg.dim, cfg.seed);
  Samples features(cfg.dim);
  features.reserve(corpus.num_tokens());
  std::vector<double> x(cfg.dim);
  static const std::string kBos = "<s>";
  static const std::string kEos = "</s>";
  for (const auto& s : corpus.sentences) {
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      const auto& self = proj.get(kSelfRole, s.tokens[t]);
      const auto& left = proj.get(kContextRole, t == 0 ? kBos : s.tokens[t - 1]);
      const auto& right = proj.get(kContextRole, t + 1 == s.tokens.size() ? kEos : s.tokens[t + 1]);
      for (std::size_t k = 0; k < cfg.dim; ++k) {
        x[k] = cfg.scale * (self[k] + cfg.context_weight * (left[k] + right[k]));
      }
      features.push_back(x);
    }
  }
  corpus.features = std::move(features);
}

TaggedCorpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  std::vector<std::vector<std::vector<std::string>>> forms;
  for (const auto& list : spec.lexicon) {
    std::vector<std::vector<std::string>> cls;
    for (const auto& f : list) {
      auto toks = split_tokens(f);
      if (toks.empty()) throw ValidationError("lexicon contains an empty surface form");
      cls.push_back(std::move(toks));
    }
    forms.push_back(std::move(cls));
  }
  std::vector<std::vector<std::string>> templates;
  for (const auto& t : spec.templates) templates.push_back(split_tokens(t));

  TaggedCorpus corpus;
  corpus.class_names = spec.class_names;
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick_template(0, templates.size() - 1);
  for (std::size_t n = 0; n < spec.num_sentences; ++n) {
    Sentence s;
    for (const auto& tok : templates[pick_template(rng)]) {
      const std::string slot = slot_name(tok);
      if (slot.empty()) {
        s.tokens.push_back(tok);
        s.gold.push_back(Tag::outside());
        continue;
      }
      const int c = class_index(spec.class_names, slot);
      if (c == 0) {
        const auto& words = *filler_pool(spec, slot);
        std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
        s.tokens.push_back(words[pick(rng)]);
        s.gold.push_back(Tag::outside());
        continue;
      }
      const auto& choices = forms[static_cast<std::size_t>(c - 1)];
      std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
      const auto& form = choices[pick(rng)];
      for (std::size_t k = 0; k < form.size(); ++k) {
        s.tokens.push_back(form[k]);
        s.gold.push_back(k == 0 ? Tag::begin(c) : Tag::inside(c));
      }
    }
    s.distant.assign(s.tokens.size(), Tag::outside());
    corpus.sentences.push_back(std::move(s));
  }
  featurize(corpus, spec.features);
  return corpus;
}

TaggedCorpus distant_label(TaggedCorpus corpus, const Dictionary& dictionary) {
  if (dictionary.size() > static_cast<std::size_t>(corpus.num_classes())) {
    throw ValidationError("distant_label: dictionary has more classes than the corpus");
  }
  // first token -> (class, form)
  std::unordered_map<std::string, std::vector<std::pair<int, const std::vector<std::string>*>>> index;
  for (std::size_t c = 0; c < dictionary.size(); ++c) {
    for (const auto& form : dictionary[c]) {
      if (form.empty()) continue;
      index[form.front()].emplace_back(static_cast<int>(c) + 1, &form);
    }
  }
  struct Match {
    std::size_t start, length;
    int cls;
  };
  for (auto& s : corpus.sentences) {
    std::vector<Match> matches;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      auto it = index.find(s.tokens[i]);
      if (it == index.end()) continue;
      for (const auto& [cls, form] : it->second) {
        if (i + form->size() > s.tokens.size()) continue;
        if (std::equal(form->begin(), form->end(), s.tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
          matches.push_back({i, form->size(), cls});
        }
      }
    }
    std::stable_sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
      if (a.length != b.length) return a.length > b.length;
      if (a.start != b.start) return a.start < b.start;
      return a.cls < b.cls;
    });
    std::vector<bool> taken(s.tokens.size(), false);
    s.distant.assign(s.tokens.size(), Tag::outside());
    for (const Match& m : matches) {
      bool free = true;
      for (std::size_t k = m.start; k < m.start + m.length; ++k) free = free && !taken[k];
      if (!free) continue;
      for (std::size_t k = m.start; k < m.start + m.length; ++k) {
        taken[k] = true;
        s.distant[k] = k == m.start ? Tag::begin(m.cls) : Tag::inside(m.cls);
      }
    }
  }
  return corpus;
}

Dictionary build_dictionary(const CorpusSpec& spec, double coverage) {
  if (!(coverage > 0.0 && coverage <= 1.0)) throw ValidationError("coverage must be in (0, 1]");
  Dictionary dict;
  for (const auto& list : spec.lexicon) {
    // The epsilon keeps products such as 0.6 * 5 from rounding up past the integer.
    const auto keep = static_cast<std::size_t>(
        std::ceil(coverage * static_cast<double>(list.size()) - 1e-9));
    std::vector<std::vector<std::string>> cls;
    for (std::size_t k = 0; k < std::min(keep, list.size()); ++k) cls.push_back(split_tokens(list[k]));
    dict.push_back(std::move(cls));
  }
  return dict;
}

Dictionary build_dictionary(const CorpusSpec& spec) { return build_dictionary(spec, spec.coverage); }

PuDataset corpus_to_pu(const TaggedCorpus& corpus) {
  if (!corpus.has_features()) throw ValidationError("corpus_to_pu: corpus has no features");
  const std::size_t d = corpus.features.dim();
  PuDataset ds;
  ds.positives.assign(static_cast<std::size_t>(corpus.num_classes()), Samples(d));
  ds.unlabeled = Samples(d);
  std::size_t flat = 0;
  for (const auto& s : corpus.sentences) {
    for (const Tag& t : s.distant) {
      if (t.kind == Tag::Kind::kOutside) {
        ds.unlabeled.push_back(corpus.features.row(flat));
      } else {
        ds.positives[static_cast<std::size_t>(t.cls - 1)].push_back(corpus.features.row(flat));
      }
      ++flat;
    }
  }
  std::string missing;
  for (std::size_t i = 0; i < ds.positives.size(); ++i) {
    if (ds.positives[i].size() == 0) missing += (missing.empty() ? "" : ", ") + corpus.class_names[i];
  }
  if (!missing.empty()) throw ValidationError("no distantly labeled tokens for class " + missing);
  if (ds.unlabeled.size() == 0) throw ValidationError("corpus_to_pu: no unlabeled tokens");
  return ds;
}

Samples distant_outside_tokens(const TaggedCorpus& corpus) {
  if (!corpus.has_features()) throw ValidationError("corpus has no features");
  Samples out(corpus.features.dim());
  std::size_t flat = 0;
  for (const auto& s : corpus.sentences) {
    for (const Tag& t : s.distant) {
      if (t.kind == Tag::Kind::kOutside) out.push_back(corpus.features.row(flat));
      ++flat;
    }
  }
  return out;
}

EvalResult annotation_quality(const TaggedCorpus& corpus) {
  return evaluate_predictions(corpus, corpus.distant_classes());
}

CorpusSplit split_corpus(const TaggedCorpus& corpus, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test fraction must be in (0, 1)");
  }
  const std::size_t n = corpus.sentences.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  std::vector<bool> is_test(n, false);
  for (std::size_t k = 0; k < n_test; ++k) is_test[order[k]] = true;

  std::set<std::vector<std::string>> seen;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_test[i]) seen.insert(corpus.sentences[i].tokens);
  }

  const bool with_features = corpus.has_features();
  const auto offsets = corpus.offsets();
  const std::size_t d = corpus.features.dim();
  CorpusSplit out;
  out.train.class_names = out.test.class_names = corpus.class_names;
  if (with_features) out.train.features = out.test.features = Samples(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = corpus.sentences[i];
    TaggedCorpus* target = &out.train;
    if (is_test[i]) {
      if (seen.count(s.tokens)) continue;
      target = &out.test;
    }
    target->sentences.push_back(s);
    if (with_features) {
      for (std::size_t t = 0; t < s.tokens.size(); ++t) target->features.push_back(corpus.features.row(offsets[i] + t));
    }
  }
  return out;
}

}  // namespace cmpu
