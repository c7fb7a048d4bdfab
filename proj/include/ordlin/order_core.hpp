#pragma once

// Structures as directed graphs, their token-split partial orders, and the
// rank-matrix realizers that encode a partial order as K total orders.

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

namespace ordlin {

/// Ordered pair (from, to) of 1-based token indices. For parsing, `to` is
/// the head of `from`.
struct Arc {
  int from = 0;
  int to = 0;
  auto operator<=>(const Arc&) const = default;
};

/// Directed graph over tokens 1..n, optionally carrying one label per arc.
struct Structure {
  int n = 0;
  std::set<Arc> arcs;
  std::map<Arc, int> labels;

  bool operator==(const Structure&) const = default;

  /// Adds an arc; a label replaces any label already stored on that arc.
  void add_arc(int from, int to, std::optional<int> label = std::nullopt);
  /// Throws ContractViolation when an endpoint or label key is out of range.
  void validate() const;
};

/// Bipartite edge set from red copies to blue copies of the tokens.
/// Edge {x, y} stands for x_r -> y_b.
struct TokenSplitStructure {
  int n = 0;
  std::set<Arc> edges;

  bool operator==(const TokenSplitStructure&) const = default;
};

TokenSplitStructure token_split(const Structure& s);
Structure recover_structure(const TokenSplitStructure& t);

/// Token-split vertex numbering over 1..2n: red x -> x, blue y -> n + y.
std::vector<std::pair<int, int>> as_relation(const TokenSplitStructure& t);

struct OrderAxiomReport {
  bool irreflexive = true;
  bool asymmetric = true;
  bool transitive = true;

  bool partial_order() const { return irreflexive && asymmetric && transitive; }
};

/// Naive check of the strict-order axioms for a relation over 1..n.
OrderAxiomReport check_order_axioms(int n, std::span<const std::pair<int, int>> rel);

/// max_k (fx[k] - fy[k]); x precedes y in every total order iff the result is negative.
double pairwise_psi(std::span<const double> fx, std::span<const double> fy);

/// Same as pairwise_psi, also reporting the lowest coordinate achieving the max.
std::pair<double, int> pairwise_psi_argmax(std::span<const double> fx, std::span<const double> fy);

/// K x m matrix of ranks over token-split vertices. Column layout for n
/// tokens: red x at column x - 1, blue x at column n + x - 1.
class Realizer {
 public:
  Realizer() = default;
  Realizer(int k, int m);
  Realizer(int k, int m, std::vector<double> ranks);

  int k() const { return k_; }
  int columns() const { return m_; }
  int tokens() const { return m_ / 2; }

  double& at(int row, int col) { return ranks_[static_cast<std::size_t>(row) * m_ + col]; }
  double at(int row, int col) const { return ranks_[static_cast<std::size_t>(row) * m_ + col]; }
  std::span<const double> row(int r) const {
    return {ranks_.data() + static_cast<std::size_t>(r) * m_, static_cast<std::size_t>(m_)};
  }
  std::span<double> row(int r) {
    return {ranks_.data() + static_cast<std::size_t>(r) * m_, static_cast<std::size_t>(m_)};
  }
  const std::vector<double>& data() const { return ranks_; }

  /// Rank vector of one column (length K).
  std::vector<double> column(int col) const;

  int red_column(int token) const { return token - 1; }
  int blue_column(int token) const { return tokens() + token - 1; }

  /// psi between two columns.
  double psi(int col_a, int col_b) const;

  /// Tie-broken total order of one row: compares (rank, token index, red
  /// before blue), so equal ranks still yield a strict order.
  bool precedes(int row, int col_a, int col_b) const;
  /// Columns of one row sorted by `precedes`.
  std::vector<int> row_order(int row) const;

  /// Throws ContractViolation on non-finite ranks or a shape problem.
  void validate() const;

  bool operator==(const Realizer&) const = default;

 private:
  int k_ = 0;
  int m_ = 0;
  std::vector<double> ranks_;
};

/// Naive O(K n^2) intersection: x_r -> y_b iff psi(red x, blue y) < 0.
TokenSplitStructure intersect_total_orders(const Realizer& r, int n);

/// Line-oriented text format: "n=<int>" then "x<TAB>y[<TAB>label]" per arc.
void write_structure(std::ostream& out, const Structure& s);
Structure read_structure(std::istream& in);

}  // namespace ordlin
