#include "ordlin/cli.hpp"

#include <omp.h>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ordlin/bench.hpp"
#include "ordlin/checkpoint.hpp"
#include "ordlin/conllu.hpp"
#include "ordlin/depparse.hpp"
#include "ordlin/errors.hpp"
#include "ordlin/realizers.hpp"
#include "ordlin/synthetic.hpp"
#include "ordlin/verify.hpp"

namespace ordlin {
namespace {

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string config_path;
  int threads = 0;
};

std::uint64_t resolve_seed(const Globals& g, const nlohmann::json& config) {
  if (g.seed_given) return g.seed;
  if (config.contains("seed")) return config["seed"].get<std::uint64_t>();
  if (const char* env = std::getenv("ORDLIN_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ContractViolation(std::string("ORDLIN_SEED is not an integer: '") + env + "'");
    }
  }
  return 0;
}

nlohmann::json read_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  try {
    auto j = nlohmann::json::parse(in);
    if (!j.is_object()) throw DataError("config '" + path + "' is not a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config '" + path + "': " + e.what());
  }
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// Writes to `path`, or to `out` for "-".
template <class F>
void write_to(const std::string& path, std::ostream& out, F&& write) {
  if (path == "-") {
    write(out);
    return;
  }
  std::ofstream f(path);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  write(f);
  if (!f) throw DataError("write to '" + path + "' failed");
}

struct TrainArgs {
  std::string train_path, dev_path, out_path;
  int synthetic = 0;
  int epochs = 0, embed = 0, hidden = 0, k = 0, batch = 0;
  double lr = 0.0, clip = 0.0;
  std::string context;
  CLI::App* cmd = nullptr;
  bool given(const char* name) const { return cmd->count(name) > 0; }
};

int run_train(const Globals& g, const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const nlohmann::json cj = read_config(g.config_path);
  ScorerConfig config = cj.get<ScorerConfig>();
  config.seed = resolve_seed(g, cj);
  if (a.given("--epochs")) config.epochs = a.epochs;
  if (a.given("--embed-dim")) config.embed_dim = a.embed;
  if (a.given("--hidden-dim")) config.hidden_dim = a.hidden;
  if (a.given("--k")) config.k = a.k;
  if (a.given("--batch-size")) config.batch_size = a.batch;
  if (a.given("--lr")) config.learning_rate = a.lr;
  if (a.given("--grad-clip")) config.grad_clip = a.clip;
  if (a.given("--context")) config.context = context_from_string(a.context);

  std::vector<ConlluSentence> train_tb, dev_tb;
  if (a.synthetic > 0) {
    train_tb = synthetic_treebank(a.synthetic, config.seed);
    dev_tb = synthetic_treebank(std::max(1, a.synthetic / 4), config.seed + 1);
  } else if (!a.train_path.empty()) {
    train_tb = read_conllu_file(a.train_path);
  } else {
    throw ContractViolation("train needs --train or --synthetic");
  }
  if (!a.dev_path.empty()) dev_tb = read_conllu_file(a.dev_path);

  const Vocabulary vocab = build_vocabulary(train_tb);
  const LabelSet labels = build_labels(train_tb);
  config.vocab_size = vocab.size();
  config.label_count = std::max(1, labels.size());
  const auto train_set = to_sentences(train_tb, vocab, labels);
  const auto dev_set = to_sentences(dev_tb, vocab, labels);
  err << "train " << train_set.size() << " sentences, dev " << dev_set.size() << ", vocab " << vocab.size()
      << ", labels " << labels.size() << ", seed " << config.seed << '\n';

  TrainOptions opts;
  opts.checkpoint_path = a.out_path;
  opts.vocab = vocab.forms();
  opts.labels = labels.names();
  opts.on_epoch = [&](const EpochReport& r) {
    out << "epoch " << r.epoch << std::fixed << std::setprecision(4) << "\tloss " << r.loss << "\torder "
        << r.order_loss << "\tlabel " << r.label_loss << std::setprecision(2) << "\tdev_uas " << r.dev_uas
        << (r.improved ? "\t*" : "") << '\n'
        << std::defaultfloat;
  };
  const TrainResult res = train(config, train_set, dev_set, opts);
  if (res.diverged) err << "warning: training stopped: " << res.message << '\n';
  if (res.best_epoch == 0) {
    save_checkpoint(a.out_path, Checkpoint{res.best, opts.vocab, opts.labels, {{"diverged", true}}});
  }
  out << "best epoch " << res.best_epoch << ", saved " << a.out_path << '\n';
  return kExitOk;
}

int run_parse(const std::string& model, const std::string& input, const std::string& output, bool brute,
              std::ostream& out, std::ostream& err) {
  const Checkpoint ck = load_checkpoint(model);
  const Vocabulary vocab(ck.vocab);
  const LabelSet labels(ck.labels);
  const auto tb = read_conllu_file(input, false);
  const auto sentences = to_sentences(tb, vocab, labels);
  const auto preds = parse(ck.params, sentences, brute);
  write_to(output, out, [&](std::ostream& o) { write_conllu(o, with_predictions(tb, preds, labels)); });
  const Diagnostics d = diagnose(preds);
  err << "parsed " << preds.size() << " sentences; " << d.sentences_with_cycle << " with cycles, " << d.multi_root
      << " with several roots, " << d.no_root << " without a root\n";
  return kExitOk;
}

int run_eval(const std::string& pred_path, const std::string& gold_path, bool ignore_punct, std::ostream& out) {
  const auto gold_tb = read_conllu_file(gold_path);
  const auto pred_tb = read_conllu_file(pred_path);
  if (gold_tb.size() != pred_tb.size()) {
    throw DataError("'" + pred_path + "' has " + std::to_string(pred_tb.size()) + " sentences, '" + gold_path +
                    "' has " + std::to_string(gold_tb.size()));
  }
  const Vocabulary vocab = build_vocabulary(gold_tb);
  const LabelSet labels = build_labels(gold_tb);
  const auto gold = to_sentences(gold_tb, vocab, labels);
  std::vector<ParseResult> preds(pred_tb.size());
  for (std::size_t s = 0; s < pred_tb.size(); ++s) {
    if (pred_tb[s].tokens.size() != gold_tb[s].tokens.size()) {
      throw DataError("sentence " + std::to_string(s + 1) + " has " + std::to_string(pred_tb[s].tokens.size()) +
                      " predicted tokens and " + std::to_string(gold_tb[s].tokens.size()) + " gold tokens");
    }
    for (const auto& t : pred_tb[s].tokens) {
      preds[s].pred_heads.push_back(t.head);
      preds[s].pred_labels.push_back(labels.id(t.deprel));
    }
  }
  const Scores sc = evaluate(preds, gold, ignore_punct);
  const Diagnostics d = diagnose(preds);
  out << std::fixed << std::setprecision(2) << "UAS=" << sc.uas << " LAS=" << sc.las << " tokens=" << sc.tokens
      << '\n'
      << std::defaultfloat;
  out << "cycles=" << d.cycles << " multi_root=" << d.multi_root << " no_root=" << d.no_root << '\n';
  return kExitOk;
}

int run_bench(const Globals& g, BenchOptions opts, const std::string& json_path, const std::string& tsv_path,
              bool check, std::ostream& out, std::ostream& err) {
  opts.seed = resolve_seed(g, read_config(g.config_path));
  const BenchReport rep = bench_aggregation(opts);
  if (!json_path.empty()) write_to(json_path, out, [&](std::ostream& o) { o << to_json(rep).dump(2) << '\n'; });
  if (!tsv_path.empty() || json_path.empty()) {
    write_to(tsv_path.empty() ? "-" : tsv_path, out, [&](std::ostream& o) { write_tsv(o, rep); });
  }
  if (!check) return kExitOk;
  const double rf = median_ratio(rep, 4096, true);
  const double rn = median_ratio(rep, 4096, false);
  if (std::isnan(rf)) {
    err << "bench --check needs sizes n and 2n with n >= 4096\n";
    return kExitUsage;
  }
  const bool ok = rf <= 2.6 && rn >= 3.2;
  err << (ok ? "PASS" : "FAIL") << " median doubling ratio fast " << rf << " (<= 2.6), naive " << rn
      << " (>= 3.2)\n";
  return ok ? kExitOk : kExitCheckFailed;
}

int run_demo_tree(const std::string& inorder, const std::string& postorder, std::ostream& out) {
  const auto in = words(inorder);
  const auto post = words(postorder);
  const BinaryTree t = reconstruct_binary_tree(in, post);
  out << "root: " << t.labels[t.root] << '\n' << t.render();
  return kExitOk;
}

int run_verify(const Globals& g, int n, int trials, std::ostream& out) {
  const auto results = run_property_suites(n, trials, resolve_seed(g, read_config(g.config_path)));
  bool all = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name;
    if (!r.detail.empty()) out << "  " << r.detail;
    out << '\n';
    all = all && r.passed;
  }
  return all ? kExitOk : kExitCheckFailed;
}

int run_realize(const std::string& input, const std::string& output, std::ostream& out, std::ostream& err) {
  std::ifstream in(input);
  if (!in) throw DataError("cannot open '" + input + "'");
  const Structure s = read_structure(in);
  const TokenSplitStructure ts = token_split(s);
  const auto rel = as_relation(ts);
  const bool poset = check_order_axioms(2 * s.n, rel).partial_order();
  err << "n=" << s.n << " arcs=" << s.arcs.size() << " token-split partial order: " << (poset ? "yes" : "NO") << '\n';
  if (const auto bad = first_multi_head_token(s)) {
    err << "token " << *bad << " has several heads; no 2-dimensional realizer built\n";
  } else {
    const Realizer r = realize_tree(s);
    const bool exact = intersect_total_orders(r, s.n) == ts;
    err << "2-dimensional realizer reproduces the structure: " << (exact ? "yes" : "NO") << '\n';
    if (!exact) return kExitCheckFailed;
  }
  Structure back = recover_structure(ts);
  back.labels = s.labels;
  write_to(output, out, [&](std::ostream& o) { write_structure(o, back); });
  return poset ? kExitOk : kExitCheckFailed;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Order-based structured prediction: realizers, aggregation and a dependency parser", "ordlin"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "random seed (default: ORDLIN_SEED, else 0)")
      ->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--config", g.config_path, "JSON file with model and training settings");
  app.add_option("--threads", g.threads, "worker threads for parse, eval and training (0 = default)")
      ->check(CLI::NonNegativeNumber);

  TrainArgs ta;
  ta.cmd = app.add_subcommand("train", "train a parser on CoNLL-U data");
  ta.cmd->add_option("--train", ta.train_path, "training treebank (.conllu)");
  ta.cmd->add_option("--dev", ta.dev_path, "development treebank (.conllu)");
  ta.cmd->add_option("--synthetic", ta.synthetic, "train on N generated sentences (dev: N/4 more)")
      ->check(CLI::PositiveNumber);
  ta.cmd->add_option("--out", ta.out_path, "checkpoint file")->required();
  ta.cmd->add_option("--epochs", ta.epochs)->check(CLI::PositiveNumber);
  ta.cmd->add_option("--embed-dim", ta.embed)->check(CLI::PositiveNumber);
  ta.cmd->add_option("--hidden-dim", ta.hidden)->check(CLI::PositiveNumber);
  ta.cmd->add_option("--k", ta.k, "rank dimensions per vertex")->check(CLI::PositiveNumber);
  ta.cmd->add_option("--batch-size", ta.batch)->check(CLI::PositiveNumber);
  ta.cmd->add_option("--lr", ta.lr)->check(CLI::PositiveNumber);
  ta.cmd->add_option("--grad-clip", ta.clip)->check(CLI::PositiveNumber);
  ta.cmd->add_option("--context", ta.context, "birnn or window-mlp")
      ->check(CLI::IsMember({"birnn", "bidirectional-recurrent", "window-mlp", "window"}));

  std::string model, input, output = "-";
  bool brute = false;
  auto* parse_cmd = app.add_subcommand("parse", "parse CoNLL-U input, replacing HEAD and DEPREL");
  parse_cmd->add_option("--model", model, "checkpoint from `train`")->required();
  parse_cmd->add_option("--input", input, "CoNLL-U file; HEAD may be _")->required();
  parse_cmd->add_option("--output", output, "output file (- for stdout)");
  parse_cmd->add_flag("--brute-force", brute, "decode with the quadratic scan");

  std::string pred, gold;
  bool ignore_punct = false;
  auto* eval_cmd = app.add_subcommand("eval", "UAS and LAS of predictions against gold");
  eval_cmd->add_option("--pred", pred)->required();
  eval_cmd->add_option("--gold", gold)->required();
  eval_cmd->add_flag("--ignore-punct", ignore_punct, "skip tokens with UPOS PUNCT");

  BenchOptions bo;
  bo.sizes = {256, 512, 1024, 2048, 4096};
  std::string json_path, tsv_path;
  bool check = false;
  auto* bench_cmd = app.add_subcommand("bench", "time fast vs naive aggregation");
  bench_cmd->add_option("--sizes", bo.sizes, "token counts, increasing, >= 64");
  bench_cmd->add_option("--trials", bo.trials)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--semiring", bo.semiring)->check(CLI::IsMember({"min", "min-argmin", "log-sum-exp"}));
  bench_cmd->add_option("--json", json_path, "write the JSON report here (- for stdout)");
  bench_cmd->add_option("--tsv", tsv_path, "write the TSV report here (default stdout)");
  bench_cmd->add_flag("--check", check, "require doubling ratios fast <= 2.6 and naive >= 3.2 for n >= 4096");

  std::string inorder, postorder;
  auto* tree_cmd = app.add_subcommand("demo-tree", "rebuild a binary tree from its inorder and postorder");
  tree_cmd->add_option("--inorder", inorder, "whitespace-separated labels")->required();
  tree_cmd->add_option("--postorder", postorder, "whitespace-separated labels")->required();

  int vn = 64, vtrials = 20;
  auto* verify_cmd = app.add_subcommand("verify", "run the property suites");
  verify_cmd->add_option("--n", vn, "largest instance size")->check(CLI::Range(2, 4096));
  verify_cmd->add_option("--trials", vtrials, "cases per suite")->check(CLI::PositiveNumber);

  int count = 100;
  std::string synth_out = "-";
  auto* synth_cmd = app.add_subcommand("synth", "write a generated CoNLL-U treebank");
  synth_cmd->add_option("--count", count)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--out", synth_out, "output file (- for stdout)");

  std::string st_in, st_out = "-";
  auto* realize_cmd = app.add_subcommand("realize", "token-split a structure file and check its realizer");
  realize_cmd->add_option("--input", st_in, "structure file: n=<int>, then x<TAB>y[<TAB>label] lines")->required();
  realize_cmd->add_option("--output", st_out, "recovered structure (- for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    const auto extra = app.remaining();
    if (subs.empty() && !extra.empty()) {
      err << "error: unknown subcommand '" << extra.front() << "'\n\n";
    } else {
      err << "error: " << e.what() << "\n\n";
    }
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  if (g.threads > 0) omp_set_num_threads(g.threads);
  try {
    if (*ta.cmd) return run_train(g, ta, out, err);
    if (*parse_cmd) return run_parse(model, input, output, brute, out, err);
    if (*eval_cmd) return run_eval(pred, gold, ignore_punct, out);
    if (*bench_cmd) return run_bench(g, bo, json_path, tsv_path, check, out, err);
    if (*tree_cmd) return run_demo_tree(inorder, postorder, out);
    if (*verify_cmd) return run_verify(g, vn, vtrials, out);
    if (*realize_cmd) return run_realize(st_in, st_out, out, err);
    if (*synth_cmd) {
      const auto tb = synthetic_treebank(count, resolve_seed(g, read_config(g.config_path)));
      write_to(synth_out, out, [&](std::ostream& o) { write_conllu(o, tb); });
      return kExitOk;
    }
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const ReconstructionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericsError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace ordlin
