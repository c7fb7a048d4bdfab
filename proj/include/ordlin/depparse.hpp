#pragma once

// Dependency parsing with a learned realizer. A virtual ROOT token sits in
// front of every sentence; each word's head is the blue vertex (ROOT or
// another word) with the smallest psi from the word's red vertex.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ordlin/conllu.hpp"
#include "ordlin/scorer.hpp"

namespace ordlin {

/// Case-preserved word forms. Id 0 is UNK, id 1 the virtual ROOT.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kRoot = 1;

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> forms);

  int add(const std::string& form);
  int id(const std::string& form) const;
  int size() const { return static_cast<int>(forms_.size()); }
  const std::vector<std::string>& forms() const { return forms_; }

 private:
  std::vector<std::string> forms_;
  std::unordered_map<std::string, int> index_;
};

/// Relation labels in first-seen order.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names);

  int add(const std::string& name);
  /// -1 for an unknown label.
  int id(const std::string& name) const;
  const std::string& name(int id) const { return names_.at(id); }
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

Vocabulary build_vocabulary(std::span<const ConlluSentence> treebank);
LabelSet build_labels(std::span<const ConlluSentence> treebank);

struct Sentence {
  std::vector<std::string> tokens;
  std::vector<std::string> upos;
  std::vector<int> token_ids;
  std::vector<int> gold_heads;  // 0 = ROOT
  std::vector<std::string> gold_labels;
  std::vector<int> label_ids;   // -1 when the label is not in the label set
  int length() const { return static_cast<int>(tokens.size()); }
};

/// Warns on stderr when a sentence has no root or several.
std::vector<Sentence> to_sentences(std::span<const ConlluSentence> treebank, const Vocabulary& vocab,
                                   const LabelSet& labels);

/// ROOT followed by the sentence's token ids.
std::vector<int> model_ids(const Sentence& s);

/// ROOT-prefixed training example: model token 0 is ROOT, word i is model
/// token i, and the gold arc of word i points at model token gold_heads[i-1].
Example make_example(const Sentence& s);

struct ParseResult {
  std::vector<int> pred_heads;
  std::vector<int> pred_labels;
  std::vector<double> best_psi;
};

/// Decodes heads from ROOT-prefixed ranks (realizer over length + 1 tokens).
/// `label_probs` may be null, giving label 0 everywhere.
ParseResult decode_ranks(const Realizer& ranks, const Eigen::MatrixXd* label_probs, bool brute_force = false);

ParseResult parse_sentence(const ModelParameters& params, const Sentence& s, bool brute_force = false);
/// Sentences are parsed independently, in parallel.
std::vector<ParseResult> parse(const ModelParameters& params, std::span<const Sentence> sentences,
                               bool brute_force = false);

struct Scores {
  double uas = 0.0;  // percent
  double las = 0.0;
  long tokens = 0;
};

Scores evaluate(std::span<const ParseResult> preds, std::span<const Sentence> golds, bool ignore_punct);

/// Well-formedness counts for greedy output, which is not repaired.
struct Diagnostics {
  long cycles = 0;               // cycles among predicted heads
  long sentences_with_cycle = 0;
  long multi_root = 0;           // sentences with more than one ROOT dependent
  long no_root = 0;              // sentences with none
};

Diagnostics diagnose(std::span<const ParseResult> preds);

/// Copy of `treebank` with HEAD/DEPREL replaced by predictions.
std::vector<ConlluSentence> with_predictions(std::span<const ConlluSentence> treebank,
                                             std::span<const ParseResult> preds, const LabelSet& labels);

struct EpochReport {
  int epoch = 0;
  double loss = 0.0;  // mean over batches of order + label loss
  double order_loss = 0.0;
  double label_loss = 0.0;
  double dev_uas = 0.0;
  bool improved = false;
};

struct TrainOptions {
  /// Written whenever dev UAS improves; empty disables saving.
  std::string checkpoint_path;
  std::vector<std::string> vocab;
  std::vector<std::string> labels;
  std::function<void(const EpochReport&)> on_epoch;
};

struct TrainResult {
  ModelParameters best;
  std::vector<EpochReport> history;
  int best_epoch = 0;
  bool diverged = false;
  std::string message;
};

/// Minibatch Adam on order loss + label cross-entropy. Deterministic for a
/// fixed config.seed. Keeps the parameters of the best dev epoch (the last
/// epoch when dev is empty); on a non-finite loss stops and keeps the last
/// finite state.
TrainResult train(const ScorerConfig& config, std::span<const Sentence> train_set, std::span<const Sentence> dev,
                  const TrainOptions& opts = {});

}  // namespace ordlin
