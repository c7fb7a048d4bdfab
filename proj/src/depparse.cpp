#include "ordlin/depparse.hpp"

#include <cmath>
#include <iostream>
#include <random>

#include "ordlin/checkpoint.hpp"
#include "ordlin/errors.hpp"

namespace ordlin {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{"<unk>", "<root>"}) {}

Vocabulary::Vocabulary(std::vector<std::string> forms) : forms_(std::move(forms)) {
  if (forms_.size() < 2) throw DataError("vocabulary needs the UNK and ROOT entries");
  for (int i = 0; i < size(); ++i) index_.emplace(forms_[i], i);
}

int Vocabulary::add(const std::string& form) {
  const auto [it, fresh] = index_.emplace(form, size());
  if (fresh) forms_.push_back(form);
  return it->second;
}

int Vocabulary::id(const std::string& form) const {
  const auto it = index_.find(form);
  return it == index_.end() || it->second == kRoot ? kUnk : it->second;
}

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
  for (int i = 0; i < size(); ++i) index_.emplace(names_[i], i);
}

int LabelSet::add(const std::string& name) {
  const auto [it, fresh] = index_.emplace(name, size());
  if (fresh) names_.push_back(name);
  return it->second;
}

int LabelSet::id(const std::string& name) const {
  const auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

Vocabulary build_vocabulary(std::span<const ConlluSentence> treebank) {
  Vocabulary v;
  for (const auto& s : treebank) {
    for (const auto& t : s.tokens) v.add(t.form);
  }
  return v;
}

LabelSet build_labels(std::span<const ConlluSentence> treebank) {
  LabelSet l;
  for (const auto& s : treebank) {
    for (const auto& t : s.tokens) l.add(t.deprel);
  }
  return l;
}

std::vector<Sentence> to_sentences(std::span<const ConlluSentence> treebank, const Vocabulary& vocab,
                                   const LabelSet& labels) {
  std::vector<Sentence> out;
  out.reserve(treebank.size());
  for (std::size_t si = 0; si < treebank.size(); ++si) {
    Sentence s;
    int roots = 0;
    bool parsed = true;
    for (const auto& t : treebank[si].tokens) {
      s.tokens.push_back(t.form);
      s.upos.push_back(t.upos);
      s.token_ids.push_back(vocab.id(t.form));
      s.gold_heads.push_back(t.head);
      s.gold_labels.push_back(t.deprel);
      s.label_ids.push_back(labels.id(t.deprel));
      roots += t.head == 0;
      parsed = parsed && t.head != kNoHead;
    }
    if (parsed && roots != 1) std::cerr << "warning: sentence " << si + 1 << " has " << roots << " root tokens\n";
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<int> model_ids(const Sentence& s) {
  if (static_cast<int>(s.token_ids.size()) != s.length()) throw ContractViolation("sentence has tokens without ids");
  std::vector<int> ids;
  ids.reserve(s.token_ids.size() + 1);
  ids.push_back(Vocabulary::kRoot);
  ids.insert(ids.end(), s.token_ids.begin(), s.token_ids.end());
  return ids;
}

Example make_example(const Sentence& s) {
  const int n = s.length();
  if (static_cast<int>(s.gold_heads.size()) != n) throw ContractViolation("sentence has tokens without gold heads");
  Example ex;
  ex.ids = model_ids(s);
  ex.gold.n = n + 1;
  ex.labels.assign(n + 1, -1);
  for (int i = 1; i <= n; ++i) {
    const int h = s.gold_heads[i - 1];
    if (h < 0 || h > n) throw DataError("head " + std::to_string(h) + " out of range in a sentence of length " + std::to_string(n));
    ex.gold.edges.insert({i + 1, h + 1});
    ex.labels[i] = s.label_ids.empty() ? -1 : s.label_ids[i - 1];
  }
  return ex;
}

ParseResult decode_ranks(const Realizer& ranks, const Eigen::MatrixXd* label_probs, bool brute_force) {
  const int m = ranks.tokens();
  ParseResult out;
  if (m <= 1) return out;
  const auto heads = brute_force ? argmin_heads_naive(ranks, m, true) : argmin_heads(ranks, m, true);
  for (int i = 1; i < m; ++i) {
    // heads[i] is model token i; its head is a 1-based realizer token.
    out.pred_heads.push_back(std::max(heads[i].head - 1, 0));
    out.best_psi.push_back(heads[i].psi);
    int label = 0;
    if (label_probs != nullptr) label_probs->col(i).maxCoeff(&label);
    out.pred_labels.push_back(label);
  }
  return out;
}

ParseResult parse_sentence(const ModelParameters& params, const Sentence& s, bool brute_force) {
  if (s.length() == 0) return {};
  const Encoded enc = encode(params, model_ids(s));
  const Eigen::MatrixXd probs = label_scores(params, enc);
  return decode_ranks(realize_ranks(params, enc), &probs, brute_force);
}

std::vector<ParseResult> parse(const ModelParameters& params, std::span<const Sentence> sentences, bool brute_force) {
  std::vector<ParseResult> out(sentences.size());
  const long count = static_cast<long>(sentences.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) out[i] = parse_sentence(params, sentences[i], brute_force);
  return out;
}

Scores evaluate(std::span<const ParseResult> preds, std::span<const Sentence> golds, bool ignore_punct) {
  if (preds.size() != golds.size()) {
    throw ContractViolation("evaluate: " + std::to_string(preds.size()) + " predictions for " +
                            std::to_string(golds.size()) + " sentences");
  }
  long total = 0, heads = 0, labeled = 0;
  for (std::size_t s = 0; s < golds.size(); ++s) {
    const Sentence& g = golds[s];
    const ParseResult& p = preds[s];
    if (static_cast<int>(p.pred_heads.size()) != g.length()) {
      throw ContractViolation("evaluate: sentence " + std::to_string(s + 1) + " has " +
                              std::to_string(p.pred_heads.size()) + " predicted heads for " +
                              std::to_string(g.length()) + " tokens");
    }
    for (int i = 0; i < g.length(); ++i) {
      if (ignore_punct && i < static_cast<int>(g.upos.size()) && g.upos[i] == "PUNCT") continue;
      ++total;
      if (p.pred_heads[i] != g.gold_heads[i]) continue;
      ++heads;
      if (i < static_cast<int>(p.pred_labels.size()) && p.pred_labels[i] == g.label_ids[i]) ++labeled;
    }
  }
  Scores sc;
  sc.tokens = total;
  if (total > 0) {
    sc.uas = 100.0 * heads / total;
    sc.las = 100.0 * labeled / total;
  }
  return sc;
}

Diagnostics diagnose(std::span<const ParseResult> preds) {
  Diagnostics d;
  for (const auto& p : preds) {
    const int n = static_cast<int>(p.pred_heads.size());
    int roots = 0;
    for (int h : p.pred_heads) roots += h == 0;
    if (n > 0 && roots == 0) ++d.no_root;
    if (roots > 1) ++d.multi_root;
    // Functional graph walk: 0 unvisited, 1 on the current path, 2 done.
    std::vector<int> state(n + 1, 0);
    long found = 0;
    for (int start = 1; start <= n; ++start) {
      int v = start;
      while (v != 0 && state[v] == 0) {
        state[v] = 1;
        v = p.pred_heads[v - 1];
      }
      if (v != 0 && state[v] == 1) ++found;
      for (v = start; v != 0 && state[v] == 1; v = p.pred_heads[v - 1]) state[v] = 2;
    }
    d.cycles += found;
    d.sentences_with_cycle += found > 0;
  }
  return d;
}

std::vector<ConlluSentence> with_predictions(std::span<const ConlluSentence> treebank,
                                             std::span<const ParseResult> preds, const LabelSet& labels) {
  if (preds.size() != treebank.size()) throw ContractViolation("with_predictions: size mismatch");
  std::vector<ConlluSentence> out(treebank.begin(), treebank.end());
  for (std::size_t s = 0; s < out.size(); ++s) {
    auto& toks = out[s].tokens;
    if (preds[s].pred_heads.size() != toks.size()) throw ContractViolation("with_predictions: length mismatch");
    for (std::size_t i = 0; i < toks.size(); ++i) {
      toks[i].head = preds[s].pred_heads[i];
      const int l = preds[s].pred_labels[i];
      toks[i].deprel = l >= 0 && l < labels.size() ? labels.name(l) : "_";
    }
  }
  return out;
}

TrainResult train(const ScorerConfig& config, std::span<const Sentence> train_set, std::span<const Sentence> dev,
                  const TrainOptions& opts) {
  config.validate();
  if (train_set.empty()) throw ContractViolation("train: empty training set");
  std::vector<Example> examples;
  examples.reserve(train_set.size());
  for (const Sentence& s : train_set) {
    if (s.length() == 0) continue;
    for (int id : s.token_ids) {
      if (id >= config.vocab_size) throw ContractViolation("train: token id beyond vocab_size");
    }
    examples.push_back(make_example(s));
  }
  if (examples.empty()) throw ContractViolation("train: training set has only empty sentences");

  TrainResult result;
  ModelParameters params = ModelParameters::initialize(config);
  ModelParameters last_finite = params;
  result.best = params;
  Adam adam(config.learning_rate);
  std::mt19937_64 rng(config.seed ^ 0x5bd1e995u);
  double best_uas = -1.0;
  OrderLossOptions loss_opts;
  loss_opts.first_source = 1;  // ROOT has no head

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(examples.begin(), examples.end(), rng);
    EpochReport rep;
    rep.epoch = epoch;
    int batches = 0;
    for (std::size_t start = 0; start < examples.size(); start += config.batch_size) {
      const std::size_t len = std::min<std::size_t>(config.batch_size, examples.size() - start);
      LossGrad lg;
      try {
        lg = batch_loss_grad(params, std::span<const Example>(examples).subspan(start, len), loss_opts);
      } catch (const NumericsError& e) {
        result.diverged = true;
        result.message = std::string("epoch ") + std::to_string(epoch) + ": " + e.what();
        break;
      }
      if (!std::isfinite(lg.total())) {
        result.diverged = true;
        result.message = "epoch " + std::to_string(epoch) + ": non-finite loss";
        break;
      }
      clip_global_norm(lg.grad, config.grad_clip);
      last_finite = params;
      adam.step(params.values(), lg.grad);
      rep.order_loss += lg.order;
      rep.label_loss += lg.label;
      ++batches;
    }
    if (result.diverged) {
      if (best_uas < 0.0) result.best = last_finite;
      break;
    }
    rep.order_loss /= batches;
    rep.label_loss /= batches;
    rep.loss = rep.order_loss + rep.label_loss;
    if (!dev.empty()) {
      rep.dev_uas = evaluate(parse(params, dev), dev, false).uas;
      rep.improved = rep.dev_uas > best_uas;
    } else {
      rep.dev_uas = std::nan("");
      rep.improved = true;
    }
    if (rep.improved) {
      best_uas = dev.empty() ? 0.0 : rep.dev_uas;
      result.best = params;
      result.best_epoch = epoch;
      if (!opts.checkpoint_path.empty()) {
        save_checkpoint(opts.checkpoint_path, Checkpoint{params, opts.vocab, opts.labels,
                                                          {{"epoch", epoch}, {"dev_uas", rep.dev_uas}}});
      }
    }
    result.history.push_back(rep);
    if (opts.on_epoch) opts.on_epoch(rep);
  }
  return result;
}

}  // namespace ordlin
