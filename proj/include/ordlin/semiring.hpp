#pragma once

// Semirings for psi-aggregation. Each one supplies
//   zero()          identity of combine
//   combine(a, b)   commutative, associative
//   lift(psi, y)    element for one target y at value psi
//   shift(c, e)     adds the real constant c, so lift(c + v, y) == shift(c, lift(v, y))

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <limits>

namespace ordlin {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr int kNoIndex = std::numeric_limits<int>::max();

/// A value tagged with the target that produced it. Orders by (value, index).
struct Scored {
  double value = kInf;
  int index = kNoIndex;

  bool operator==(const Scored&) const = default;
  friend bool operator<(const Scored& a, const Scored& b) {
    return a.value < b.value || (a.value == b.value && a.index < b.index);
  }
};

template <class S>
concept Semiring = requires(typename S::value_type a, double c, int y) {
  { S::zero() } -> std::same_as<typename S::value_type>;
  { S::combine(a, a) } -> std::same_as<typename S::value_type>;
  { S::lift(c, y) } -> std::same_as<typename S::value_type>;
  { S::shift(c, a) } -> std::same_as<typename S::value_type>;
};

/// Semirings that can drop one target from an aggregate directly.
template <class S>
concept ExcludableSemiring = Semiring<S> && requires(typename S::value_type a, int y) {
  { S::without(a, y, a) } -> std::same_as<typename S::value_type>;
};

/// Semirings whose combine is a selection by (value, index); they exclude a
/// target by carrying a runner-up.
template <class S>
concept SelectingSemiring = Semiring<S> && requires(Scored s) {
  { S::from_scored(s) } -> std::same_as<typename S::value_type>;
};

struct MinSemiring {
  using value_type = double;
  static constexpr const char* name = "min";

  static double zero() { return kInf; }
  static double combine(double a, double b) { return b < a ? b : a; }
  static double lift(double psi, int) { return psi; }
  static double shift(double c, double e) { return c + e; }
  static double from_scored(Scored s) { return s.value; }
};

/// Min with the achieving target; ties go to the smaller target index.
struct MinArgminSemiring {
  using value_type = Scored;
  static constexpr const char* name = "min-argmin";

  static Scored zero() { return {}; }
  static Scored combine(Scored a, Scored b) { return b < a ? b : a; }
  static Scored lift(double psi, int y) { return {psi, y}; }
  static Scored shift(double c, Scored e) { return {c + e.value, e.index}; }
  static Scored from_scored(Scored s) { return s; }
};

/// Best and runner-up targets (distinct indices). Lets decoding drop the
/// self target without a second pass.
struct TopTwoSemiring {
  using value_type = std::array<Scored, 2>;
  static constexpr const char* name = "top2-argmin";

  static value_type zero() { return {Scored{}, Scored{}}; }
  static value_type combine(const value_type& a, const value_type& b) {
    // Merge two sorted pairs; indices are distinct across disjoint target sets.
    std::array<Scored, 4> all{a[0], a[1], b[0], b[1]};
    std::sort(all.begin(), all.end());
    value_type out{all[0], Scored{}};
    for (std::size_t i = 1; i < all.size(); ++i) {
      if (all[i].index != all[0].index || all[i].index == kNoIndex) {
        out[1] = all[i];
        break;
      }
    }
    return out;
  }
  static value_type lift(double psi, int y) { return {Scored{psi, y}, Scored{}}; }
  static value_type shift(double c, const value_type& e) {
    return {Scored{c + e[0].value, e[0].index}, Scored{c + e[1].value, e[1].index}};
  }
  static value_type without(const value_type& e, int y, const value_type&) {
    if (e[0].index == y) return {e[1], Scored{}};
    if (e[1].index == y) return {e[0], Scored{}};
    return e;
  }
};

/// Soft-min: a (+) b = -log(exp(-a) + exp(-b)). The aggregate over psi values is
/// -log sum exp(-psi).
struct LogSumExpSemiring {
  using value_type = double;
  static constexpr const char* name = "log-sum-exp";

  static double zero() { return kInf; }
  static double combine(double a, double b) {
    if (a == kInf) return b;
    if (b == kInf) return a;
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    return lo - std::log1p(std::exp(lo - hi));
  }
  static double lift(double psi, int) { return psi; }
  static double shift(double c, double e) { return c + e; }
  /// Removes one term `part` from `total`; returns zero() when nothing
  /// measurable is left.
  static double without(double total, int, double part) {
    if (part == kInf) return total;
    if (part <= total) return kInf;
    const double rest = -std::expm1(total - part);
    if (!(rest > 0.0)) return kInf;
    return total - std::log(rest);
  }
};

}  // namespace ordlin
