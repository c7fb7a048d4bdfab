#include "ordlin/order_core.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>
#include <string>

#include "ordlin/errors.hpp"

namespace ordlin {

void Structure::add_arc(int from, int to, std::optional<int> label) {
  arcs.insert({from, to});
  if (label) labels[{from, to}] = *label;
}

void Structure::validate() const {
  if (n < 0) throw ContractViolation("structure: negative token count");
  for (const Arc& a : arcs) {
    if (a.from < 1 || a.from > n || a.to < 1 || a.to > n) {
      throw ContractViolation("structure: arc (" + std::to_string(a.from) + "," +
                              std::to_string(a.to) + ") outside 1.." + std::to_string(n));
    }
  }
  for (const auto& [arc, label] : labels) {
    if (!arcs.contains(arc)) throw ContractViolation("structure: label on a missing arc");
  }
}

TokenSplitStructure token_split(const Structure& s) {
  // Each arc x -> y becomes x_r -> y_b; self-loops become x_r -> x_b.
  TokenSplitStructure t;
  t.n = s.n;
  t.edges = s.arcs;
  return t;
}

Structure recover_structure(const TokenSplitStructure& t) {
  Structure s;
  s.n = t.n;
  s.arcs = t.edges;
  return s;
}

std::vector<std::pair<int, int>> as_relation(const TokenSplitStructure& t) {
  std::vector<std::pair<int, int>> rel;
  rel.reserve(t.edges.size());
  for (const Arc& e : t.edges) rel.emplace_back(e.from, t.n + e.to);
  return rel;
}

OrderAxiomReport check_order_axioms(int n, std::span<const std::pair<int, int>> rel) {
  const auto idx = [n](int x, int y) { return static_cast<std::size_t>(x - 1) * n + (y - 1); };
  std::vector<char> holds(static_cast<std::size_t>(n) * n, 0);
  std::vector<std::vector<int>> succ(n + 1);
  for (auto [x, y] : rel) {
    if (x < 1 || x > n || y < 1 || y > n) throw ContractViolation("check_order_axioms: pair out of range");
    if (!holds[idx(x, y)]) succ[x].push_back(y);
    holds[idx(x, y)] = 1;
  }

  OrderAxiomReport report;
  for (auto [x, y] : rel) {
    if (x == y) report.irreflexive = false;
    if (x != y && holds[idx(y, x)]) report.asymmetric = false;
    for (int z : succ[y]) {
      if (!holds[idx(x, z)]) report.transitive = false;
    }
  }
  return report;
}

std::pair<double, int> pairwise_psi_argmax(std::span<const double> fx, std::span<const double> fy) {
  if (fx.size() != fy.size() || fx.empty()) {
    throw ContractViolation("pairwise_psi: rank vectors of length " + std::to_string(fx.size()) +
                            " and " + std::to_string(fy.size()));
  }
  double best = fx[0] - fy[0];
  int arg = 0;
  for (std::size_t k = 1; k < fx.size(); ++k) {
    const double d = fx[k] - fy[k];
    if (d > best) {
      best = d;
      arg = static_cast<int>(k);
    }
  }
  return {best, arg};
}

double pairwise_psi(std::span<const double> fx, std::span<const double> fy) {
  return pairwise_psi_argmax(fx, fy).first;
}

Realizer::Realizer(int k, int m) : Realizer(k, m, std::vector<double>(static_cast<std::size_t>(k) * m, 0.0)) {}

Realizer::Realizer(int k, int m, std::vector<double> ranks) : k_(k), m_(m), ranks_(std::move(ranks)) {
  if (k_ < 1 || m_ < 0 || m_ % 2 != 0) {
    throw ContractViolation("realizer: need k >= 1 and an even column count");
  }
  if (ranks_.size() != static_cast<std::size_t>(k_) * m_) {
    throw ContractViolation("realizer: rank buffer has wrong size");
  }
}

std::vector<double> Realizer::column(int col) const {
  std::vector<double> out(k_);
  for (int r = 0; r < k_; ++r) out[r] = at(r, col);
  return out;
}

double Realizer::psi(int col_a, int col_b) const {
  double best = at(0, col_a) - at(0, col_b);
  for (int r = 1; r < k_; ++r) best = std::max(best, at(r, col_a) - at(r, col_b));
  return best;
}

bool Realizer::precedes(int row, int col_a, int col_b) const {
  const int n = tokens();
  const auto key = [&](int c) {
    const bool blue = c >= n;
    return std::tuple(at(row, c), blue ? c - n : c, blue);
  };
  return key(col_a) < key(col_b);
}

std::vector<int> Realizer::row_order(int row) const {
  std::vector<int> cols(m_);
  std::iota(cols.begin(), cols.end(), 0);
  std::sort(cols.begin(), cols.end(), [&](int a, int b) { return precedes(row, a, b); });
  return cols;
}

void Realizer::validate() const {
  if (ranks_.size() != static_cast<std::size_t>(k_) * m_) throw ContractViolation("realizer: bad shape");
  for (double v : ranks_) {
    if (!std::isfinite(v)) throw ContractViolation("realizer: non-finite rank");
  }
}

TokenSplitStructure intersect_total_orders(const Realizer& r, int n) {
  if (r.columns() != 2 * n) {
    throw ContractViolation("intersect_total_orders: realizer has " + std::to_string(r.columns()) +
                            " columns, expected " + std::to_string(2 * n));
  }
  TokenSplitStructure t;
  t.n = n;
  for (int x = 1; x <= n; ++x) {
    for (int y = 1; y <= n; ++y) {
      if (r.psi(r.red_column(x), r.blue_column(y)) < 0.0) t.edges.insert({x, y});
    }
  }
  return t;
}

void write_structure(std::ostream& out, const Structure& s) {
  out << "n=" << s.n << '\n';
  for (const Arc& a : s.arcs) {
    out << a.from << '\t' << a.to;
    if (auto it = s.labels.find(a); it != s.labels.end()) out << '\t' << it->second;
    out << '\n';
  }
}

Structure read_structure(std::istream& in) {
  Structure s;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!have_header) {
      if (line.rfind("n=", 0) != 0) throw DataError("structure line " + std::to_string(lineno) + ": expected n=<int>");
      try {
        s.n = std::stoi(line.substr(2));
      } catch (const std::exception&) {
        throw DataError("structure line " + std::to_string(lineno) + ": bad token count");
      }
      have_header = true;
      continue;
    }
    std::istringstream fields(line);
    int x = 0;
    int y = 0;
    if (!(fields >> x >> y)) throw DataError("structure line " + std::to_string(lineno) + ": expected x<TAB>y");
    int label = 0;
    if (fields >> label) {
      s.add_arc(x, y, label);
    } else {
      s.add_arc(x, y);
    }
  }
  if (!have_header) throw DataError("structure: missing n=<int> header");
  try {
    s.validate();
  } catch (const ContractViolation& e) {
    throw DataError(e.what());
  }
  return s;
}

}  // namespace ordlin
