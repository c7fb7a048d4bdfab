#include "ordlin/aggregation.hpp"

#include <cmath>

namespace ordlin {

namespace {

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

HeadChoice to_choice(const Scored& s) {
  if (s.index == kNoIndex) return {};
  return {s.index + 1, s.value};
}

// Log-space sums over index ranges of a fixed array, without subtraction.
class LogRangeSum {
 public:
  explicit LogRangeSum(const std::vector<double>& leaves) : size_(leaves.size()), tree_(2 * leaves.size(), -kInf) {
    std::copy(leaves.begin(), leaves.end(), tree_.begin() + static_cast<std::ptrdiff_t>(size_));
    for (std::size_t i = size_; i-- > 1;) tree_[i] = log_add(tree_[2 * i], tree_[2 * i + 1]);
  }

  double query(std::size_t l, std::size_t r) const {
    double acc = -kInf;
    for (l += size_, r += size_; l < r; l >>= 1, r >>= 1) {
      if (l & 1) acc = log_add(acc, tree_[l++]);
      if (r & 1) acc = log_add(acc, tree_[--r]);
    }
    return acc;
  }

  /// Sum over [l, r) leaving out the positions in `skip` (sorted, unique).
  double query_except(std::size_t l, std::size_t r, const std::vector<std::size_t>& skip) const {
    double acc = -kInf;
    for (std::size_t s : skip) {
      if (s < l || s >= r) continue;
      acc = log_add(acc, query(l, s));
      l = s + 1;
    }
    return log_add(acc, query(l, r));
  }

 private:
  std::size_t size_;
  std::vector<double> tree_;
};

// Excluded (source, target) pairs as 0-based indices, restricted to active sources.
std::vector<std::pair<int, int>> excluded_pairs(int n, const std::set<Arc>& edges, const OffEdgeOptions& opts) {
  std::set<std::pair<int, int>> out;
  for (const Arc& e : edges) {
    if (e.from < 1 || e.from > n || e.to < 1 || e.to > n) throw ContractViolation("offedge: edge out of range");
    if (e.from - 1 >= opts.first_source) out.emplace(e.from - 1, e.to - 1);
  }
  if (!opts.include_diagonal) {
    for (int x = opts.first_source; x < n; ++x) out.emplace(x, x);
  }
  return {out.begin(), out.end()};
}

LogMassGradient from_family_masses(int n, int first_source, const std::vector<double>& src1,
                                   const std::vector<double>& src2, const std::vector<double>& tgt1,
                                   const std::vector<double>& tgt2) {
  LogMassGradient out;
  out.d_red.assign(2 * static_cast<std::size_t>(n), 0.0);
  out.d_blue.assign(2 * static_cast<std::size_t>(n), 0.0);
  for (int x = first_source; x < n; ++x) out.log_mass = log_add(out.log_mass, log_add(src1[x], src2[x]));
  if (out.log_mass == -kInf) return out;
  const double z = out.log_mass;
  for (int i = 0; i < n; ++i) {
    if (i >= first_source) {
      out.d_red[i] = -std::exp(src1[i] - z);
      out.d_red[n + i] = -std::exp(src2[i] - z);
    }
    out.d_blue[i] = std::exp(tgt1[i] - z);
    out.d_blue[n + i] = std::exp(tgt2[i] - z);
  }
  return out;
}

LogMassGradient offedge_fast(const RankView& red, const RankView& blue,
                             const std::vector<std::pair<int, int>>& excluded, int first_source) {
  const int n = red.n;
  const auto order = detail::sorted_by_key(red, blue);
  const std::size_t p = order.size();
  std::vector<std::size_t> red_pos(n), blue_pos(n);
  // Family 1 pairs a source with the blues before it (psi from row 0),
  // family 2 with the blues after it (row 1).
  std::vector<double> blue1(p, -kInf), blue2(p, -kInf), red1(p, -kInf), red2(p, -kInf);
  for (std::size_t i = 0; i < p; ++i) {
    const int v = order[i].index;
    if (order[i].red) {
      red_pos[v] = i;
      if (v < first_source) continue;
      red1[i] = -red(0, v);
      red2[i] = -red(1, v);
    } else {
      blue_pos[v] = i;
      blue1[i] = blue(0, v);
      blue2[i] = blue(1, v);
    }
  }
  std::vector<std::vector<std::size_t>> skip_src(n), skip_tgt(n);
  for (const auto& [x, y] : excluded) {
    skip_src[x].push_back(blue_pos[y]);
    skip_tgt[y].push_back(red_pos[x]);
  }
  for (auto& v : skip_src) std::sort(v.begin(), v.end());
  for (auto& v : skip_tgt) std::sort(v.begin(), v.end());

  const LogRangeSum b1(blue1), b2(blue2), r1(red1), r2(red2);
  std::vector<double> src1(n, -kInf), src2(n, -kInf), tgt1(n, -kInf), tgt2(n, -kInf);
  for (int x = first_source; x < n; ++x) {
    const std::size_t s = red_pos[x];
    src1[x] = -red(0, x) + b1.query_except(0, s, skip_src[x]);
    src2[x] = -red(1, x) + b2.query_except(s + 1, p, skip_src[x]);
  }
  for (int y = 0; y < n; ++y) {
    const std::size_t t = blue_pos[y];
    tgt1[y] = blue(0, y) + r1.query_except(t + 1, p, skip_tgt[y]);
    tgt2[y] = blue(1, y) + r2.query_except(0, t, skip_tgt[y]);
  }
  return from_family_masses(n, first_source, src1, src2, tgt1, tgt2);
}

LogMassGradient log_mass_naive(const RankView& red, const RankView& blue, int first_source,
                               const std::vector<std::pair<int, int>>& excluded = {}) {
  const std::set<std::pair<int, int>> skip(excluded.begin(), excluded.end());
  const int n = red.n;
  const int k = red.k;
  LogMassGradient out;
  out.d_red.assign(static_cast<std::size_t>(k) * n, 0.0);
  out.d_blue.assign(static_cast<std::size_t>(k) * n, 0.0);
  for (int x = first_source; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (!skip.contains({x, y})) out.log_mass = log_add(out.log_mass, -detail::psi_between(red, x, blue, y));
    }
  }
  if (out.log_mass == -kInf) return out;
  for (int x = first_source; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (skip.contains({x, y})) continue;
      // Subgradient of the max goes to the lowest achieving coordinate.
      int arg = 0;
      double psi = red(0, x) - blue(0, y);
      for (int r = 1; r < k; ++r) {
        const double d = red(r, x) - blue(r, y);
        if (d > psi) {
          psi = d;
          arg = r;
        }
      }
      const double p = std::exp(-psi - out.log_mass);
      out.d_red[static_cast<std::size_t>(arg) * n + x] -= p;
      out.d_blue[static_cast<std::size_t>(arg) * n + y] += p;
    }
  }
  return out;
}

LogMassGradient log_mass_fast(const RankView& red, const RankView& blue, int first_source) {
  const int n = red.n;
  const auto order = detail::sorted_by_key(red, blue);
  // src1[x]: log mass of pairs (x, y) with y before x (psi from row 0);
  // src2[x]: pairs with y after x (psi from row 1). tgt1/tgt2 likewise per target.
  std::vector<double> src1(n, -kInf), src2(n, -kInf), tgt1(n, -kInf), tgt2(n, -kInf);
  const auto active = [&](int x) { return x >= first_source; };

  double blue_prefix = -kInf;  // log sum exp(f1(y)) over blues seen
  double red_prefix = -kInf;   // log sum exp(-f2(x)) over active reds seen
  for (const auto& it : order) {
    if (it.red) {
      if (!active(it.index)) continue;
      src1[it.index] = -red(0, it.index) + blue_prefix;
      red_prefix = log_add(red_prefix, -red(1, it.index));
    } else {
      tgt2[it.index] = blue(1, it.index) + red_prefix;
      blue_prefix = log_add(blue_prefix, blue(0, it.index));
    }
  }
  double blue_suffix = -kInf;  // log sum exp(f2(y))
  double red_suffix = -kInf;   // log sum exp(-f1(x))
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (it->red) {
      if (!active(it->index)) continue;
      src2[it->index] = -red(1, it->index) + blue_suffix;
      red_suffix = log_add(red_suffix, -red(0, it->index));
    } else {
      tgt1[it->index] = blue(0, it->index) + red_suffix;
      blue_suffix = log_add(blue_suffix, blue(1, it->index));
    }
  }

  return from_family_masses(n, first_source, src1, src2, tgt1, tgt2);
}

}  // namespace

namespace detail {

std::vector<SweepItem> sorted_by_key(const RankView& red, const RankView& blue) {
  std::vector<SweepItem> items;
  items.reserve(2 * static_cast<std::size_t>(red.n));
  for (int i = 0; i < blue.n; ++i) items.push_back({ExactKey::of(blue(0, i), blue(1, i)), i, false});
  for (int i = 0; i < red.n; ++i) items.push_back({ExactKey::of(red(0, i), red(1, i)), i, true});
  std::sort(items.begin(), items.end(), [](const SweepItem& a, const SweepItem& b) {
    if (a.key < b.key) return true;
    if (b.key < a.key) return false;
    if (a.red != b.red) return !a.red;
    return a.index < b.index;
  });
  return items;
}

}  // namespace detail

std::vector<HeadChoice> argmin_heads(const Realizer& r, int n, bool forbid_self) {
  if (r.columns() != 2 * n) throw ContractViolation("argmin_heads: realizer does not cover 2n vertices");
  const RankView red = RankView::red(r);
  const RankView blue = RankView::blue(r);
  const auto agg = r.k() == 2 ? aggregate_fast_k2<MinArgminSemiring>(red, blue, forbid_self)
                              : aggregate_naive<MinArgminSemiring>(red, blue, forbid_self);
  std::vector<HeadChoice> out;
  out.reserve(n);
  for (const Scored& s : agg.per_source) out.push_back(to_choice(s));
  return out;
}

std::vector<HeadChoice> argmin_heads_naive(const Realizer& r, int n, bool forbid_self) {
  if (r.columns() != 2 * n) throw ContractViolation("argmin_heads: realizer does not cover 2n vertices");
  std::vector<HeadChoice> out(n);
  for (int x = 1; x <= n; ++x) {
    for (int y = 1; y <= n; ++y) {
      if (forbid_self && x == y) continue;
      const double psi = r.psi(r.red_column(x), r.blue_column(y));
      if (out[x - 1].head == 0 || psi < out[x - 1].psi) out[x - 1] = {y, psi};
    }
  }
  return out;
}

LogMassGradient all_pairs_log_mass(const RankView& red, const RankView& blue, const OffEdgeOptions& opts) {
  detail::check_shapes(red, blue);
  if (opts.first_source < 0) throw ContractViolation("all_pairs_log_mass: negative first_source");
  if (opts.path == AggregationPath::fast && red.k == 2) return log_mass_fast(red, blue, opts.first_source);
  return log_mass_naive(red, blue, opts.first_source);
}

LogMassGradient offedge_log_mass(const RankView& red, const RankView& blue, const std::set<Arc>& edges,
                                 const OffEdgeOptions& opts) {
  detail::check_shapes(red, blue);
  if (opts.first_source < 0) throw ContractViolation("offedge_log_mass: negative first_source");
  const auto excluded = excluded_pairs(red.n, edges, opts);
  if (opts.path == AggregationPath::fast && red.k == 2) {
    return excluded.empty() ? log_mass_fast(red, blue, opts.first_source)
                            : offedge_fast(red, blue, excluded, opts.first_source);
  }
  return log_mass_naive(red, blue, opts.first_source, excluded);
}

OffEdgeMass logsumexp_offedge(const RankView& red, const RankView& blue, const std::set<Arc>& edges,
                              const OffEdgeOptions& opts) {
  detail::check_shapes(red, blue);
  const int n = red.n;
  double total = -kInf;
  if (opts.path == AggregationPath::fast && red.k == 2) {
    const auto agg = aggregate_fast_k2<LogSumExpSemiring>(red, blue, false);
    for (int x = opts.first_source; x < n; ++x) total = log_add(total, -agg.per_source[x]);
  } else {
    for (int x = opts.first_source; x < n; ++x) {
      for (int y = 0; y < n; ++y) total = log_add(total, -detail::psi_between(red, x, blue, y));
    }
  }

  double removed = -kInf;
  for (const Arc& e : edges) {
    if (e.from < 1 || e.from > n || e.to < 1 || e.to > n) throw ContractViolation("logsumexp_offedge: edge out of range");
    if (e.from - 1 < opts.first_source) continue;
    if (!opts.include_diagonal && e.from == e.to) continue;  // removed below
    removed = log_add(removed, -detail::psi_between(red, e.from - 1, blue, e.to - 1));
  }
  if (!opts.include_diagonal) {
    for (int x = opts.first_source; x < n; ++x) removed = log_add(removed, -detail::psi_between(red, x, blue, x));
  }

  if (removed == -kInf) return {total, false};
  if (total == -kInf) return {opts.floor, true};
  const double rest = -std::expm1(removed - total);
  if (!(rest > 0x1p-52)) return {opts.floor, true};
  return {total + std::log(rest), false};
}

}  // namespace ordlin
