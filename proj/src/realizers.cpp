#include "ordlin/realizers.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "ordlin/errors.hpp"

namespace ordlin {

namespace {

void require_disjoint(const LinearExtensionPair& a, const LinearExtensionPair& b, const char* op) {
  std::unordered_set<int> seen(a.l1.begin(), a.l1.end());
  for (int v : b.l1) {
    if (seen.contains(v)) {
      throw ContractViolation(std::string(op) + ": vertex " + std::to_string(v) + " appears in both operands");
    }
  }
}

template <class... Ranges>
std::vector<int> concat(const Ranges&... parts) {
  std::vector<int> out;
  out.reserve((parts.size() + ...));
  (out.insert(out.end(), parts.begin(), parts.end()), ...);
  return out;
}

}  // namespace

bool LinearExtensionPair::valid() const {
  if (l1.size() != l2.size()) return false;
  std::vector<int> a = l1;
  std::vector<int> b = l2;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b && std::adjacent_find(a.begin(), a.end()) == a.end();
}

LinearExtensionPair sp_parallel(const LinearExtensionPair& a, const LinearExtensionPair& b) {
  require_disjoint(a, b, "sp_parallel");
  return {concat(a.l1, b.l1), concat(b.l2, a.l2)};
}

LinearExtensionPair sp_series(const LinearExtensionPair& a, const LinearExtensionPair& b) {
  require_disjoint(a, b, "sp_series");
  return {concat(a.l1, b.l1), concat(a.l2, b.l2)};
}

LinearExtensionPair sp_parallel_all(std::span<const LinearExtensionPair> parts) {
  LinearExtensionPair out;
  std::unordered_set<int> seen;
  for (const auto& p : parts) {
    for (int v : p.l1) {
      if (!seen.insert(v).second) {
        throw ContractViolation("sp_parallel: vertex " + std::to_string(v) + " appears in two operands");
      }
    }
    out.l1.insert(out.l1.end(), p.l1.begin(), p.l1.end());
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    out.l2.insert(out.l2.end(), it->l2.begin(), it->l2.end());
  }
  return out;
}

Realizer to_realizer(const LinearExtensionPair& p, int m) {
  if (static_cast<int>(p.l1.size()) != m || !p.valid()) {
    throw ContractViolation("to_realizer: pair is not a pair of permutations of 1.." + std::to_string(m));
  }
  Realizer r(2, m);
  for (int pos = 0; pos < m; ++pos) {
    if (p.l1[pos] < 1 || p.l1[pos] > m) throw ContractViolation("to_realizer: vertex id out of range");
    r.at(0, p.l1[pos] - 1) = pos;
    r.at(1, p.l2[pos] - 1) = pos;
  }
  return r;
}

std::optional<int> first_multi_head_token(const Structure& s) {
  std::vector<int> out_degree(s.n + 1, 0);
  for (const Arc& a : s.arcs) {
    if (++out_degree[a.from] == 2) return a.from;
  }
  return std::nullopt;
}

Realizer realize_tree(const Structure& s) {
  s.validate();
  if (auto bad = first_multi_head_token(s)) {
    throw ContractViolation("realize_tree: token " + std::to_string(*bad) + " has more than one head");
  }
  const int n = s.n;
  // Token-split vertex ids: red x -> x, blue y -> n + y.
  std::vector<std::vector<int>> dependents(n + 1);
  std::vector<char> has_head(n + 1, 0);
  for (const Arc& a : s.arcs) {  // arcs are sorted, so dependents come out ascending
    dependents[a.to].push_back(a.from);
    has_head[a.from] = 1;
  }

  std::vector<LinearExtensionPair> factors;
  for (int h = 1; h <= n; ++h) {
    const auto& deps = dependents[h];
    if (deps.empty()) continue;
    // Star: the dependents are pairwise incomparable, then all precede h_b.
    LinearExtensionPair star;
    star.l1.assign(deps.begin(), deps.end());
    star.l2.assign(deps.rbegin(), deps.rend());
    star.l1.push_back(n + h);
    star.l2.push_back(n + h);
    factors.push_back(std::move(star));
  }
  for (int x = 1; x <= n; ++x) {
    if (!has_head[x]) factors.push_back(LinearExtensionPair::singleton(x));
  }
  for (int y = 1; y <= n; ++y) {
    if (dependents[y].empty()) factors.push_back(LinearExtensionPair::singleton(n + y));
  }
  return to_realizer(sp_parallel_all(factors), 2 * n);
}

std::optional<int> BinaryTree::find(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) return std::nullopt;
  return static_cast<int>(it - labels.begin());
}

std::vector<std::string> BinaryTree::inorder() const {
  std::vector<std::string> out;
  std::vector<int> stack;
  int cur = root;
  while (cur >= 0 || !stack.empty()) {
    while (cur >= 0) {
      stack.push_back(cur);
      cur = left[cur];
    }
    cur = stack.back();
    stack.pop_back();
    out.push_back(labels[cur]);
    cur = right[cur];
  }
  return out;
}

std::vector<std::string> BinaryTree::postorder() const {
  // Reverse of a (node, right, left) preorder.
  std::vector<std::string> out;
  if (root < 0) return out;
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    out.push_back(labels[v]);
    if (left[v] >= 0) stack.push_back(left[v]);
    if (right[v] >= 0) stack.push_back(right[v]);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string BinaryTree::render() const {
  std::ostringstream out;
  if (root < 0) return "";
  std::vector<std::tuple<int, int, const char*>> stack{{root, 0, ""}};
  while (!stack.empty()) {
    auto [v, depth, tag] = stack.back();
    stack.pop_back();
    out << std::string(2 * depth, ' ') << tag << labels[v] << '\n';
    if (right[v] >= 0) stack.emplace_back(right[v], depth + 1, "R: ");
    if (left[v] >= 0) stack.emplace_back(left[v], depth + 1, "L: ");
  }
  return out.str();
}

BinaryTree reconstruct_binary_tree(std::span<const std::string> inorder, std::span<const std::string> postorder) {
  const int n = static_cast<int>(inorder.size());
  if (n == 0) throw ReconstructionError("empty traversal", "");

  std::unordered_map<std::string, int> in_pos;
  for (int i = 0; i < n; ++i) {
    if (!in_pos.emplace(inorder[i], i).second) {
      throw ReconstructionError("label '" + inorder[i] + "' repeated in inorder", inorder[i]);
    }
  }
  if (static_cast<int>(postorder.size()) != n) {
    throw ReconstructionError("traversals have different lengths",
                              postorder.size() > inorder.size() ? postorder[n] : inorder[postorder.size()]);
  }
  std::vector<int> post(n, -1);
  for (int i = 0; i < n; ++i) {
    auto it = in_pos.find(postorder[i]);
    if (it == in_pos.end() || post[it->second] != -1) {
      throw ReconstructionError("label '" + postorder[i] + "' of postorder does not match inorder", postorder[i]);
    }
    post[it->second] = i;
  }

  // Node ids are inorder positions, so in-order comparison is id comparison.
  // right_of(x, y) holds exactly for right descendants of y. left_of(x, y)
  // also holds for nodes left of y's whole subtree, but those finish in
  // postorder before any node of it, so the latest-finishing candidate is
  // still the left child whenever y has one (that is, when y's inorder
  // predecessor finishes before y).
  const auto left_of = [&](int x, int y) { return x < y && post[x] < post[y]; };
  const auto right_of = [&](int x, int y) { return x > y && post[x] < post[y]; };

  BinaryTree tree;
  tree.labels.assign(inorder.begin(), inorder.end());
  tree.left.assign(n, -1);
  tree.right.assign(n, -1);
  const auto pick = [&](int y, auto&& related) {
    int best = -1;
    for (int z = 0; z < n; ++z) {
      if (related(z, y) && (best < 0 || post[z] > post[best])) best = z;
    }
    return best;
  };
  std::vector<int> parents(n, 0);
  for (int y = 0; y < n; ++y) {
    if (y > 0 && post[y - 1] < post[y]) tree.left[y] = pick(y, left_of);
    tree.right[y] = pick(y, right_of);
    for (int c : {tree.left[y], tree.right[y]}) {
      if (c >= 0 && ++parents[c] > 1) {
        throw ReconstructionError("label '" + tree.labels[c] + "' would have two parents", tree.labels[c]);
      }
    }
  }
  for (int v = 0; v < n; ++v) {
    if (parents[v] == 0) {
      if (tree.root >= 0) {
        throw ReconstructionError("labels '" + tree.labels[tree.root] + "' and '" + tree.labels[v] +
                                      "' are both parentless",
                                  tree.labels[v]);
      }
      tree.root = v;
    }
  }
  if (tree.root < 0) throw ReconstructionError("no root found", inorder[0]);

  const auto check = [](const std::vector<std::string>& got, std::span<const std::string> want, const char* name) {
    for (std::size_t i = 0; i < want.size(); ++i) {
      if (i >= got.size() || got[i] != want[i]) {
        throw ReconstructionError(std::string(name) + " is inconsistent at label '" + want[i] + "'", want[i]);
      }
    }
  };
  check(tree.inorder(), inorder, "inorder");
  check(tree.postorder(), postorder, "postorder");
  return tree;
}

}  // namespace ordlin
