#include "cmpu/synthgen.hpp"

namespace cmpu {

namespace {

const std::vector<std::string> kFirstNames = {
    "John",  "Mary",   "Ahmed", "Li",    "Sofia", "Carlos", "Priya",  "Ivan",  "Grace", "Kenji",
    "Fatima", "Lucas", "Elena", "Omar",  "Chloe", "Diego",  "Hana",   "Tomas", "Aisha", "Pierre",
    "Nina",  "Rahul",  "Sara",  "Mateo", "Ingrid", "Kwame", "Yuki",   "Lars",  "Amara", "Felix"};

const std::vector<std::string> kLastNames = {
    "Harris", "Smith",  "Khan",  "Wei",    "Rossi",  "Mendez", "Patel", "Petrov", "Kim",    "Tanaka",
    "Haddad", "Silva",  "Novak", "Farouk", "Martin", "Lopez",  "Sato",  "Berg",   "Okafor", "Dubois",
    "Costa",  "Gupta",  "Larsen", "Ruiz",  "Nilsen", "Mensah", "Mori",  "Holm",   "Adeyemi", "Weber"};

const std::vector<std::string> kCities = {
    "Houston", "Boston", "Denver", "Lagos",  "Osaka",  "Lyon",  "Porto",  "Dublin",  "Nairobi", "Quito",
    "Hanoi",   "Krakow", "Seville", "Tampere", "Leeds", "Cusco", "Bergen", "Malmo", "Adelaide", "Tucson"};

const std::vector<std::string> kPlaceNames = {"Silver", "Cedar", "Eagle",   "Maple", "Stone",
                                              "Pine",   "Crystal", "Willow", "Granite", "Copper"};
const std::vector<std::string> kPlaceFeatures = {"Lake", "Valley", "Ridge", "Harbor"};

const std::vector<std::string> kRegions = {"Texas",   "Ohio",    "Kent",    "Georgia", "Victoria",
                                           "Alberta", "Bavaria", "Tuscany", "Quebec",  "Oregon"};
const std::vector<std::string> kFacilities = {"Medical Center", "Central Station", "City Hall",
                                              "State Park"};

std::vector<std::string> person_lexicon() {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < 60; ++k) {
    const std::size_t last = (7 * k + (k / 30) * 11) % 30;
    out.push_back(kFirstNames[k % 30] + " " + kLastNames[last]);
  }
  return out;
}

std::vector<std::string> location_lexicon() {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < 60; ++k) {
    const std::size_t j = k / 3;  // 0..19
    const std::size_t variant = (j / 10) * 2 + (j % 2);
    switch (k % 3) {
      case 0: out.push_back(kCities[j]); break;
      case 1: out.push_back(kPlaceNames[j % 10] + " " + kPlaceFeatures[variant]); break;
      default: out.push_back(kRegions[j % 10] + " " + kFacilities[variant]); break;
    }
  }
  return out;
}

}  // namespace

CorpusSpec default_corpus_spec() {
  CorpusSpec spec;
  spec.class_names = {"PER", "LOC"};
  spec.lexicon = {person_lexicon(), location_lexicon()};
  spec.fillers = {
      {"TIME", {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
                "yesterday", "today", "tonight", "morning", "evening"}},
      {"ADJ", {"quiet", "busy", "famous", "small", "old", "new", "crowded", "remote",
               "beautiful", "ancient", "modern", "local"}},
      {"NOUN", {"market", "library", "bridge", "stadium", "festival", "concert", "clinic",
                "factory", "garden", "bakery", "office", "campus"}},
      {"VERB", {"visited", "praised", "criticized", "joined", "left", "toured", "described",
                "photographed"}},
  };
  spec.templates = {
      "{PER} arrived at {LOC} on {TIME}",
      "{PER} met {PER} in {LOC} .",
      "the report from the {ADJ} {NOUN} in {LOC} was signed by {PER} .",
      "{PER} said the weather in {LOC} was {ADJ} .",
      "we flew to {LOC} on {TIME} .",
      "on {TIME} {PER} {VERB} {LOC} with friends .",
      "{PER} and {PER} {VERB} the {NOUN} .",
      "a {ADJ} {NOUN} opened near {LOC} last year .",
      "according to {PER} , prices at the {NOUN} rose sharply .",
      "the train to {LOC} was delayed on {TIME} .",
      "{PER} works at a {ADJ} {NOUN} in {LOC} .",
      "protesters gathered outside the {NOUN} in {LOC} on {TIME} .",
      "the meeting at the {NOUN} was postponed until {TIME} .",
      "nobody expected the {ADJ} storm to last until {TIME} .",
      "{PER} thanked the volunteers at the {NOUN} .",
      "officials in {LOC} {VERB} the {ADJ} {NOUN} .",
      "she moved from {LOC} to {LOC} on {TIME} .",
      "the award was presented to {PER} at the {NOUN} .",
      "{PER} , a teacher from {LOC} , won the prize .",
      "traffic near the {NOUN} was {ADJ} all {TIME} .",
      "the {ADJ} museum in {LOC} reopened on {TIME} .",
      "{PER} called {PER} after the {NOUN} closed .",
      "a spokesman for {PER} declined to comment on {TIME} .",
      "heavy rain flooded the {NOUN} around {LOC} .",
      "the company hired {PER} to run the {NOUN} .",
      "tourists {VERB} the {ADJ} streets of {LOC} .",
      "he wrote a letter to {PER} from {LOC} .",
      "the {NOUN} will close early on {TIME} .",
      "{PER} grew up in {LOC} before moving abroad .",
      "the {ADJ} river near {LOC} froze on {TIME} .",
  };
  spec.num_sentences = 3000;
  spec.coverage = 1.0;
  spec.seed = 1;
  return spec;
}

}  // namespace cmpu
