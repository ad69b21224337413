#pragma once

#include <string>
#include <vector>

#include "cmpu/corpus.hpp"
#include "cmpu/synthgen.hpp"

namespace fixture {

// "John Harris arrived at Texas Medical Center in Houston this afternoon",
// PER = {John Harris}, LOC = {Texas Medical Center, Houston}.
inline cmpu::TaggedCorpus remark_corpus() {
  using cmpu::Tag;
  cmpu::TaggedCorpus c;
  c.class_names = {"PER", "LOC"};
  cmpu::Sentence s;
  s.tokens = cmpu::split_tokens("John Harris arrived at Texas Medical Center in Houston this afternoon");
  s.gold = {Tag::begin(1), Tag::inside(1), Tag::outside(), Tag::outside(), Tag::begin(2), Tag::inside(2),
            Tag::inside(2), Tag::outside(), Tag::begin(2), Tag::outside(), Tag::outside()};
  s.distant.assign(s.tokens.size(), Tag::outside());
  c.sentences.push_back(s);
  return c;
}

/// The dictionary lacks "Texas Medical Center".
inline cmpu::Dictionary remark_small_dictionary() {
  return {{{"John", "Harris"}}, {{"Houston"}}};
}

inline cmpu::Dictionary remark_full_dictionary() {
  return {{{"John", "Harris"}}, {{"Texas", "Medical", "Center"}, {"Houston"}}};
}

}  // namespace fixture
