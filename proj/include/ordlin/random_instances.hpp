#pragma once

// Random instance generators for property checks.

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ordlin/order_core.hpp"
#include "ordlin/realizers.hpp"

namespace ordlin::testing {

using Rng = std::mt19937_64;

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Arbitrary digraph: cycles, self-loops and multi-head tokens allowed.
inline Structure random_digraph(Rng& rng, int n, double density) {
  Structure s;
  s.n = n;
  std::bernoulli_distribution keep(density);
  for (int x = 1; x <= n; ++x) {
    for (int y = 1; y <= n; ++y) {
      if (keep(rng)) s.add_arc(x, y);
    }
  }
  return s;
}

/// Rooted tree: every token but one has a head that is an earlier token in
/// a random relabeling, so the arcs form a single tree.
inline Structure random_tree(Rng& rng, int n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 1);
  std::shuffle(perm.begin(), perm.end(), rng);
  Structure s;
  s.n = n;
  for (int i = 1; i < n; ++i) s.add_arc(perm[i], perm[uniform_int(rng, 0, i - 1)]);
  return s;
}

/// Head-function graph: each token has at most one head; includes roots,
/// isolated tokens and (occasionally) self-loops and cycles.
inline Structure random_head_function(Rng& rng, int n) {
  Structure s;
  s.n = n;
  std::bernoulli_distribution headless(0.2);
  for (int x = 1; x <= n; ++x) {
    if (!headless(rng)) s.add_arc(x, uniform_int(rng, 1, n));
  }
  return s;
}

/// Forest of several trees over a random partition of the tokens.
inline Structure random_forest(Rng& rng, int n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 1);
  std::shuffle(perm.begin(), perm.end(), rng);
  Structure s;
  s.n = n;
  std::bernoulli_distribution new_root(0.15);
  int tree_start = 0;
  for (int i = 1; i < n; ++i) {
    if (new_root(rng)) {
      tree_start = i;
      continue;
    }
    s.add_arc(perm[i], perm[uniform_int(rng, tree_start, i - 1)]);
  }
  return s;
}

inline BinaryTree random_binary_tree(Rng& rng, int n) {
  BinaryTree t;
  t.labels.resize(n);
  for (int i = 0; i < n; ++i) t.labels[i] = "v" + std::to_string(i);
  t.left.assign(n, -1);
  t.right.assign(n, -1);
  t.root = 0;
  for (int v = 1; v < n; ++v) {
    int cur = t.root;
    while (true) {  // random descent to a free slot
      const bool go_left = uniform_int(rng, 0, 1) == 0;
      int& slot = go_left ? t.left[cur] : t.right[cur];
      if (slot < 0) {
        slot = v;
        break;
      }
      cur = slot;
    }
  }
  return t;
}

inline std::vector<double> random_ranks(Rng& rng, std::size_t count, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> out(count);
  for (auto& v : out) v = dist(rng);
  return out;
}

/// Small integer ranks: many exact ties in values and keys.
inline std::vector<double> random_integer_ranks(Rng& rng, std::size_t count, int range) {
  std::vector<double> out(count);
  for (auto& v : out) v = uniform_int(rng, -range, range);
  return out;
}

inline Realizer random_realizer(Rng& rng, int k, int n, double scale = 1.0) {
  return Realizer(k, 2 * n, random_ranks(rng, static_cast<std::size_t>(k) * 2 * n, scale));
}

}  // namespace ordlin::testing
