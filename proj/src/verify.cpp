#include "ordlin/verify.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "ordlin/aggregation.hpp"
#include "ordlin/random_instances.hpp"
#include "ordlin/realizers.hpp"

namespace ordlin {

namespace {

using testing::Rng;
using testing::uniform_int;

// True when some pair's maximizing coordinate differs between the two realizers.
bool argmax_changed(const Realizer& a, const Realizer& b) {
  const int m = a.tokens();
  for (int x = 0; x < m; ++x) {
    for (int y = 0; y < m; ++y) {
      int ka = 0, kb = 0;
      for (int k = 1; k < a.k(); ++k) {
        if (a.at(k, x) - a.at(k, m + y) > a.at(ka, x) - a.at(ka, m + y)) ka = k;
        if (b.at(k, x) - b.at(k, m + y) > b.at(kb, x) - b.at(kb, m + y)) kb = k;
      }
      if (ka != kb) return true;
    }
  }
  return false;
}

bool close_rel(double a, double b, double tol) {
  if (a == b) return true;
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

GradCheckReport gradient_check(const ModelParameters& params, const Example& ex, const OrderLossOptions& opts,
                               double h, double tol, double abs_floor) {
  GradCheckReport rep;
  const auto analytic = loss_grad(params, ex, opts).grad;
  ModelParameters probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params.values()[i];
    probe.values()[i] = orig + h;
    const double up = loss_grad(probe, ex, opts).total();
    const Realizer r_up = realize_ranks(probe, encode(probe, ex.ids));
    probe.values()[i] = orig - h;
    const double down = loss_grad(probe, ex, opts).total();
    const Realizer r_down = realize_ranks(probe, encode(probe, ex.ids));
    probe.values()[i] = orig;
    if (argmax_changed(r_up, r_down)) {
      ++rep.kinks;
      continue;
    }
    const double numeric = (up - down) / (2 * h);
    const double rel = std::abs(analytic[i] - numeric) / std::max({std::abs(analytic[i]), std::abs(numeric), abs_floor});
    ++rep.checked;
    rep.passed += rel <= tol;
    rep.worst_rel = std::max(rep.worst_rel, rel);
  }
  return rep;
}

GradCheckCase random_gradcheck_case(std::uint64_t seed, ContextKind context) {
  Rng rng(seed);
  ScorerConfig c;
  c.vocab_size = 9;
  c.embed_dim = 4;
  c.hidden_dim = 6;
  c.context = context;
  c.k = 2;
  c.label_count = 3;
  c.seed = seed;
  GradCheckCase out{ModelParameters::initialize(c), {}};
  // Larger weights than the default init so ranks spread out.
  for (double& v : out.params.values()) v *= 2.0;
  const int n = uniform_int(rng, 2, 7);
  out.example.ids.push_back(1);
  for (int i = 0; i < n; ++i) out.example.ids.push_back(uniform_int(rng, 2, c.vocab_size - 1));
  const Structure tree = testing::random_tree(rng, n);
  out.example.gold.n = n + 1;
  int root = 1;
  std::vector<bool> has_head(n + 1, false);
  for (const Arc& a : tree.arcs) {
    out.example.gold.edges.insert({a.from + 1, a.to + 1});
    has_head[a.from] = true;
  }
  for (int i = 1; i <= n; ++i) {
    if (!has_head[i]) root = i;
  }
  out.example.gold.edges.insert({root + 1, 1});
  out.example.labels.assign(n + 1, -1);
  for (int i = 1; i <= n; ++i) out.example.labels[i] = uniform_int(rng, 0, c.label_count - 1);
  return out;
}

std::vector<SuiteResult> run_property_suites(int n, int trials, std::uint64_t seed) {
  std::vector<SuiteResult> out;
  const auto suite = [&](const std::string& name, auto&& body) {
    SuiteResult r{name, true, ""};
    Rng rng(seed ^ std::hash<std::string>{}(name));
    try {
      r.detail = body(rng);
      r.passed = r.detail.empty();
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    if (r.passed) r.detail = std::to_string(trials) + " cases";
    out.push_back(std::move(r));
  };

  suite("token-split-axioms", [&](Rng& rng) -> std::string {
    const int cap = std::min(n, 48);
    for (int t = 0; t < trials; ++t) {
      const auto s = testing::random_digraph(rng, uniform_int(rng, 1, cap), 0.15);
      const auto ts = token_split(s);
      if (!check_order_axioms(2 * ts.n, as_relation(ts)).partial_order()) return "axiom violated at case " + std::to_string(t);
      if (!(recover_structure(ts) == s)) return "recovery failed at case " + std::to_string(t);
    }
    return "";
  });

  suite("realize-tree-exact", [&](Rng& rng) -> std::string {
    for (int t = 0; t < trials; ++t) {
      const int size = uniform_int(rng, 1, n);
      const auto s = t % 2 ? testing::random_tree(rng, size) : testing::random_head_function(rng, size);
      if (!(intersect_total_orders(realize_tree(s), size) == token_split(s))) return "mismatch at case " + std::to_string(t);
    }
    return "";
  });

  suite("aggregation-fast-equals-naive", [&](Rng& rng) -> std::string {
    for (int t = 0; t < trials; ++t) {
      const int size = uniform_int(rng, 1, n);
      const auto red = t % 4 ? testing::random_ranks(rng, 2 * size) : testing::random_integer_ranks(rng, 2 * size, 4);
      const auto blue = t % 4 ? testing::random_ranks(rng, 2 * size) : testing::random_integer_ranks(rng, 2 * size, 4);
      const auto r = RankView::dense(red, 2, size);
      const auto b = RankView::dense(blue, 2, size);
      const bool excl = t % 2 == 1;
      if (aggregate_fast_k2<MinSemiring>(r, b, excl).per_source != aggregate_naive<MinSemiring>(r, b, excl).per_source ||
          aggregate_fast_k2<MinArgminSemiring>(r, b, excl).per_source !=
              aggregate_naive<MinArgminSemiring>(r, b, excl).per_source) {
        return "min/argmin mismatch at case " + std::to_string(t);
      }
      const auto fl = aggregate_fast_k2<LogSumExpSemiring>(r, b, excl).per_source;
      const auto nl = aggregate_naive<LogSumExpSemiring>(r, b, excl).per_source;
      for (int x = 0; x < size; ++x) {
        if (!close_rel(fl[x], nl[x], 1e-9)) return "log-sum-exp mismatch at case " + std::to_string(t);
      }
    }
    return "";
  });

  suite("decode-fast-equals-brute-force", [&](Rng& rng) -> std::string {
    for (int t = 0; t < trials; ++t) {
      const int size = uniform_int(rng, 1, n);
      const auto r = testing::random_realizer(rng, 2, size);
      if (argmin_heads(r, size, true) != argmin_heads_naive(r, size, true)) return "mismatch at case " + std::to_string(t);
    }
    return "";
  });

  suite("binary-tree-round-trip", [&](Rng& rng) -> std::string {
    for (int t = 0; t < trials; ++t) {
      const auto tree = testing::random_binary_tree(rng, uniform_int(rng, 1, n));
      const auto in = tree.inorder();
      const auto post = tree.postorder();
      const auto back = reconstruct_binary_tree(in, post);
      if (back.inorder() != in || back.postorder() != post ||
          back.labels[back.root] != tree.labels[tree.root]) {
        return "mismatch at case " + std::to_string(t);
      }
    }
    return "";
  });

  suite("off-edge-mass-matches-direct-sum", [&](Rng& rng) -> std::string {
    const int cap = std::min(n, 128);
    for (int t = 0; t < trials; ++t) {
      const int size = uniform_int(rng, 2, std::max(2, cap));
      const auto red = testing::random_ranks(rng, 2 * size);
      const auto blue = testing::random_ranks(rng, 2 * size);
      const auto r = RankView::dense(red, 2, size);
      const auto b = RankView::dense(blue, 2, size);
      const auto s = testing::random_head_function(rng, size);
      double direct = 0.0;
      for (int x = 0; x < size; ++x) {
        for (int y = 0; y < size; ++y) {
          if (!s.arcs.contains({x + 1, y + 1})) direct += std::exp(-detail::psi_between(r, x, b, y));
        }
      }
      const double want = std::log(direct);
      if (!close_rel(logsumexp_offedge(r, b, s.arcs).value, want, 1e-6) ||
          !close_rel(offedge_log_mass(r, b, s.arcs, {}).log_mass, want, 1e-9)) {
        return "mismatch at case " + std::to_string(t);
      }
    }
    return "";
  });

  suite("gradient-finite-differences", [&](Rng& rng) -> std::string {
    const int cases = std::max(2, std::min(trials, 20));
    std::size_t checked = 0, passed = 0;
    for (int t = 0; t < cases; ++t) {
      auto gc = random_gradcheck_case(rng(), t % 2 ? ContextKind::window_mlp : ContextKind::birnn);
      OrderLossOptions opts;
      opts.first_source = 1;
      const auto rep = gradient_check(gc.params, gc.example, opts);
      checked += rep.checked;
      passed += rep.passed;
      opts.path = AggregationPath::naive;
      const auto naive = loss_grad(gc.params, gc.example, opts).grad;
      opts.path = AggregationPath::fast;
      const auto fast = loss_grad(gc.params, gc.example, opts).grad;
      for (std::size_t i = 0; i < fast.size(); ++i) {
        if (std::abs(fast[i] - naive[i]) > 1e-8) return "fast and naive gradients differ at case " + std::to_string(t);
      }
    }
    if (passed < 0.99 * checked) {
      std::ostringstream msg;
      msg << passed << "/" << checked << " coordinates within tolerance";
      return msg.str();
    }
    return "";
  });

  return out;
}

}  // namespace ordlin
