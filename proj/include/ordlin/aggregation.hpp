#pragma once

// Aggregation of psi over all (red source, blue target) pairs.
//
// aggregate_naive is the O(K n^2) reference and handles any K.
// aggregate_fast_k2 is the K = 2 sweep: with key(v) = f1(v) - f2(v),
// key(y) <= key(x) implies psi(x, y) = f1(x) - f1(y), and key(y) > key(x)
// implies psi(x, y) = f2(x) - f2(y). After one sort of all vertices by key,
// a forward sweep aggregates the first family through a running prefix over
// blue targets and a backward sweep aggregates the second, so every source
// costs O(1) beyond the sort.

#include <algorithm>
#include <cstddef>
#include <set>
#include <span>
#include <vector>

#include "ordlin/errors.hpp"
#include "ordlin/order_core.hpp"
#include "ordlin/semiring.hpp"

namespace ordlin {

/// Read-only K x n view over ranks; element (k, i) at data[k * stride + i].
struct RankView {
  const double* data = nullptr;
  int k = 0;
  int n = 0;
  std::ptrdiff_t stride = 0;

  double operator()(int row, int i) const { return data[row * stride + i]; }

  static RankView dense(std::span<const double> buf, int k, int n) {
    if (buf.size() != static_cast<std::size_t>(k) * n) throw ContractViolation("RankView: buffer size mismatch");
    return {buf.data(), k, n, n};
  }
  static RankView red(const Realizer& r) { return {r.data().data(), r.k(), r.tokens(), r.columns()}; }
  static RankView blue(const Realizer& r) {
    return {r.data().data() + r.tokens(), r.k(), r.tokens(), r.columns()};
  }
};

template <Semiring S>
struct AggregationResult {
  typename S::value_type global = S::zero();
  std::vector<typename S::value_type> per_source;
};

namespace detail {

inline void check_shapes(const RankView& red, const RankView& blue) {
  if (red.k != blue.k || red.n != blue.n || red.k < 1) {
    throw ContractViolation("aggregation: red is " + std::to_string(red.k) + "x" + std::to_string(red.n) +
                            ", blue is " + std::to_string(blue.k) + "x" + std::to_string(blue.n));
  }
}

inline double psi_between(const RankView& red, int x, const RankView& blue, int y) {
  double best = red(0, x) - blue(0, y);
  for (int r = 1; r < red.k; ++r) {
    const double d = red(r, x) - blue(r, y);
    if (d > best) best = d;
  }
  return best;
}

template <Semiring S>
typename S::value_type fold(const std::vector<typename S::value_type>& parts) {
  auto acc = S::zero();
  for (const auto& p : parts) acc = S::combine(acc, p);
  return acc;
}

/// f1 - f2 held exactly as hi + lo (hi = rounded difference, lo = its
/// rounding error), so comparing keys never misplaces a vertex.
struct ExactKey {
  double hi;
  double lo;
  static ExactKey of(double a, double b) {
    const double nb = -b;
    const double s = a + nb;
    const double bv = s - a;
    const double err = (a - (s - bv)) + (nb - bv);
    return {s, err};
  }
  friend bool operator<(const ExactKey& p, const ExactKey& q) { return p.hi < q.hi || (p.hi == q.hi && p.lo < q.lo); }
  friend bool operator==(const ExactKey& p, const ExactKey& q) { return p.hi == q.hi && p.lo == q.lo; }
};

struct SweepItem {
  ExactKey key;
  int index;
  bool red;
};

/// All 2n token-split vertices sorted by key; at equal key blue targets come
/// before red sources, then by index.
std::vector<SweepItem> sorted_by_key(const RankView& red, const RankView& blue);

template <Semiring S>
std::vector<typename S::value_type> sweep_k2(const RankView& red, const RankView& blue,
                                             const std::vector<SweepItem>& order) {
  using V = typename S::value_type;
  std::vector<V> per(red.n, S::zero());
  V prefix = S::zero();
  for (const SweepItem& it : order) {
    if (it.red) {
      per[it.index] = S::shift(red(0, it.index), prefix);
    } else {
      prefix = S::combine(prefix, S::lift(-blue(0, it.index), it.index));
    }
  }
  V suffix = S::zero();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (it->red) {
      per[it->index] = S::combine(per[it->index], S::shift(red(1, it->index), suffix));
    } else {
      suffix = S::combine(suffix, S::lift(-blue(1, it->index), it->index));
    }
  }
  return per;
}

}  // namespace detail

/// Reference aggregation: per_source[x] = (+)_y lift(psi(x_r, y_b), y), skipping
/// y == x when exclude_diagonal. O(K n^2).
template <Semiring S>
AggregationResult<S> aggregate_naive(const RankView& red, const RankView& blue, bool exclude_diagonal) {
  detail::check_shapes(red, blue);
  AggregationResult<S> out;
  out.per_source.assign(red.n, S::zero());
  for (int x = 0; x < red.n; ++x) {
    auto acc = S::zero();
    for (int y = 0; y < blue.n; ++y) {
      if (exclude_diagonal && x == y) continue;
      acc = S::combine(acc, S::lift(detail::psi_between(red, x, blue, y), y));
    }
    out.per_source[x] = acc;
  }
  out.global = detail::fold<S>(out.per_source);
  return out;
}

/// aggregate_naive with sources split across OpenMP threads. Same result,
/// bit for bit: each source is still reduced serially in target order.
template <Semiring S>
AggregationResult<S> aggregate_naive_parallel(const RankView& red, const RankView& blue, bool exclude_diagonal) {
  detail::check_shapes(red, blue);
  AggregationResult<S> out;
  out.per_source.assign(red.n, S::zero());
  const int n = red.n;
#pragma omp parallel for schedule(static)
  for (int x = 0; x < n; ++x) {
    auto acc = S::zero();
    for (int y = 0; y < n; ++y) {
      if (exclude_diagonal && x == y) continue;
      acc = S::combine(acc, S::lift(detail::psi_between(red, x, blue, y), y));
    }
    out.per_source[x] = acc;
  }
  out.global = detail::fold<S>(out.per_source);
  return out;
}

/// K = 2 sort-and-sweep aggregation; same contract as aggregate_naive in
/// O(n log n). Throws UnsupportedDimension for K != 2.
template <Semiring S>
AggregationResult<S> aggregate_fast_k2(const RankView& red, const RankView& blue, bool exclude_diagonal) {
  detail::check_shapes(red, blue);
  if (red.k != 2) {
    throw UnsupportedDimension("aggregate_fast_k2 needs K = 2 (got K = " + std::to_string(red.k) +
                               "); use aggregate_naive");
  }
  const auto order = detail::sorted_by_key(red, blue);
  AggregationResult<S> out;
  if (!exclude_diagonal) {
    out.per_source = detail::sweep_k2<S>(red, blue, order);
  } else if constexpr (ExcludableSemiring<S>) {
    out.per_source = detail::sweep_k2<S>(red, blue, order);
    for (int x = 0; x < red.n; ++x) {
      out.per_source[x] = S::without(out.per_source[x], x, S::lift(detail::psi_between(red, x, blue, x), x));
    }
  } else if constexpr (SelectingSemiring<S>) {
    const auto top = detail::sweep_k2<TopTwoSemiring>(red, blue, order);
    out.per_source.resize(red.n);
    for (int x = 0; x < red.n; ++x) {
      out.per_source[x] = S::from_scored(TopTwoSemiring::without(top[x], x, TopTwoSemiring::zero())[0]);
    }
  } else {
    throw ContractViolation(std::string("aggregate_fast_k2: semiring ") + S::name +
                            " cannot exclude the diagonal");
  }
  out.global = detail::fold<S>(out.per_source);
  return out;
}

/// One decoded head per red source: 1-based blue token, or 0 with psi = +inf
/// when no candidate is left.
struct HeadChoice {
  int head = 0;
  double psi = kInf;
  bool operator==(const HeadChoice&) const = default;
};

/// argmin_y psi(x_r, y_b) for every x; ties go to the smaller y. Uses the
/// K = 2 sweep with a top-two payload, otherwise the naive scan.
std::vector<HeadChoice> argmin_heads(const Realizer& r, int n, bool forbid_self);
/// Serial O(K n^2) reference for argmin_heads.
std::vector<HeadChoice> argmin_heads_naive(const Realizer& r, int n, bool forbid_self);

enum class AggregationPath { fast, naive };

struct OffEdgeOptions {
  bool include_diagonal = true;
  /// Red sources with 0-based index below this are left out entirely.
  int first_source = 0;
  /// log-mass reported when the complement has no measurable mass.
  double floor = -36.04365338911715;  // log(2^-52)
  AggregationPath path = AggregationPath::fast;
};

struct OffEdgeMass {
  double value = 0.0;
  /// The edge mass swallowed the total; value is the floor.
  bool clamped = false;
};

/// log sum over (x_r, y_b) not in `edges` of exp(-psi): the all-pairs term
/// minus the edge-only term, in log space. `edges` use 1-based tokens.
OffEdgeMass logsumexp_offedge(const RankView& red, const RankView& blue, const std::set<Arc>& edges,
                              const OffEdgeOptions& opts = {});

/// log sum_{x, y} exp(-psi(x_r, y_b)) and its gradient with respect to every
/// rank. Sources before opts.first_source are skipped; the diagonal is always
/// included. The fast path runs two sweeps over the key order.
struct LogMassGradient {
  double log_mass = -kInf;
  std::vector<double> d_red;   // K x n, row-major
  std::vector<double> d_blue;  // K x n, row-major
};
LogMassGradient all_pairs_log_mass(const RankView& red, const RankView& blue, const OffEdgeOptions& opts);

/// Same quantity as logsumexp_offedge, with gradient, computed without
/// subtracting the edge mass: the fast path sums the sweep ranges around each
/// excluded pair with a range-sum tree, O((n + |E|) log n). Stays accurate when
/// the edges carry nearly all of the mass. log_mass is -inf for an empty
/// complement; there is no floor.
LogMassGradient offedge_log_mass(const RankView& red, const RankView& blue, const std::set<Arc>& edges,
                                 const OffEdgeOptions& opts);

}  // namespace ordlin
