#include "ordlin/synthetic.hpp"

#include <random>
#include <string>

namespace ordlin {

namespace {

const std::vector<std::string> kDet{"the", "a", "this", "every", "some", "that"};
const std::vector<std::string> kAdj{"big", "small", "red", "old", "quiet", "happy", "dark", "young", "tall", "green"};
const std::vector<std::string> kNoun{"dog", "cat", "man", "woman", "child", "house", "tree", "car", "river",
                                     "book", "garden", "city", "teacher", "bird", "table", "letter"};
const std::vector<std::string> kVerb{"saw", "liked", "found", "chased", "built", "read", "painted", "sold",
                                     "watched", "carried", "opened", "followed"};
const std::vector<std::string> kAux{"will", "can", "must", "might"};
const std::vector<std::string> kAdv{"quickly", "often", "never", "slowly", "today", "again"};
const std::vector<std::string> kVerbPrep{"in", "on", "to", "near", "after"};
const std::vector<std::string> kNounPrep{"of", "with", "without"};
const std::vector<std::string> kConj{"and", "but"};

class Builder {
 public:
  explicit Builder(std::mt19937_64& rng) : rng_(rng) {}

  ConlluSentence sentence() {
    const int verb = clause(0, "root");
    if (chance(0.25)) {
      const int cc = add(pick(kConj), "CCONJ", "cc");
      const int second = clause(verb, "conj");
      tokens_[cc - 1].head = second;
    }
    add(".", "PUNCT", "punct", verb);
    ConlluSentence s;
    s.tokens = std::move(tokens_);
    for (auto& t : s.tokens) t.lemma = t.form;
    return s;
  }

 private:
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  const std::string& pick(const std::vector<std::string>& words) {
    return words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng_)];
  }

  int add(const std::string& form, const char* upos, const char* rel, int head = 0) {
    ConlluToken t;
    t.id = static_cast<int>(tokens_.size()) + 1;
    t.form = form;
    t.upos = upos;
    t.head = head;
    t.deprel = rel;
    tokens_.push_back(std::move(t));
    return tokens_.back().id;
  }
  void attach(const std::vector<int>& ids, int head) {
    for (int id : ids) tokens_[id - 1].head = head;
  }

  // Noun phrase; returns the head noun. Dependents wait in `pending` until
  // the noun exists.
  int noun_phrase(int depth) {
    std::vector<int> pre;
    pre.push_back(add(pick(kDet), "DET", "det"));
    const int adjectives = std::uniform_int_distribution<int>(0, 2)(rng_);
    for (int i = 0; i < adjectives; ++i) pre.push_back(add(pick(kAdj), "ADJ", "amod"));
    const int noun = add(pick(kNoun), "NOUN", "_");
    attach(pre, noun);
    if (depth < 2 && chance(0.3)) {
      const int inner = prep_phrase(kNounPrep, depth + 1);
      tokens_[inner - 1].head = noun;
      tokens_[inner - 1].deprel = "nmod";
    }
    return noun;
  }

  int prep_phrase(const std::vector<std::string>& preps, int depth) {
    const int adp = add(pick(preps), "ADP", "case");
    const int noun = noun_phrase(depth);
    tokens_[adp - 1].head = noun;
    return noun;
  }

  int clause(int head, const char* rel) {
    const int subj = noun_phrase(0);
    std::vector<int> pre;
    if (chance(0.4)) pre.push_back(add(pick(kAux), "AUX", "aux"));
    if (chance(0.3)) pre.push_back(add(pick(kAdv), "ADV", "advmod"));
    const int verb = add(pick(kVerb), "VERB", rel, head);
    tokens_[subj - 1].head = verb;
    tokens_[subj - 1].deprel = "nsubj";
    attach(pre, verb);
    if (chance(0.8)) {
      const int obj = noun_phrase(0);
      tokens_[obj - 1].head = verb;
      tokens_[obj - 1].deprel = "obj";
    }
    const int pps = std::uniform_int_distribution<int>(0, 2)(rng_);
    for (int i = 0; i < pps; ++i) {
      const int obl = prep_phrase(kVerbPrep, 1);
      tokens_[obl - 1].head = verb;
      tokens_[obl - 1].deprel = "obl";
    }
    if (chance(0.2)) add(pick(kAdv), "ADV", "advmod", verb);
    return verb;
  }

  std::mt19937_64& rng_;
  std::vector<ConlluToken> tokens_;
};

}  // namespace

std::vector<ConlluSentence> synthetic_treebank(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ConlluSentence> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back(Builder(rng).sentence());
    out.back().comments.push_back(" sent_id = syn-" + std::to_string(i + 1));
  }
  return out;
}

}  // namespace ordlin
