#pragma once

// Constructive 2-dimensional realizers: series-parallel composition of
// linear-extension pairs, realizers for head-function graphs, and binary
// tree reconstruction from inorder + postorder traversals.

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ordlin/order_core.hpp"

namespace ordlin {

/// Two total orders over the same vertex ids; their intersection is the
/// realized partial order.
struct LinearExtensionPair {
  std::vector<int> l1;
  std::vector<int> l2;

  bool operator==(const LinearExtensionPair&) const = default;

  static LinearExtensionPair singleton(int v) { return {{v}, {v}}; }
  /// True when l1 and l2 hold the same ids, each exactly once.
  bool valid() const;
};

/// (a.l1 ++ b.l1, b.l2 ++ a.l2): no pair across a and b is comparable.
LinearExtensionPair sp_parallel(const LinearExtensionPair& a, const LinearExtensionPair& b);
/// (a.l1 ++ b.l1, a.l2 ++ b.l2): everything in a precedes everything in b.
LinearExtensionPair sp_series(const LinearExtensionPair& a, const LinearExtensionPair& b);
/// Left fold of sp_parallel over `parts`, in linear time.
LinearExtensionPair sp_parallel_all(std::span<const LinearExtensionPair> parts);

/// Realizer of a pair over vertex ids 1..m: rank = position in each list.
Realizer to_realizer(const LinearExtensionPair& p, int m);

/// K = 2 realizer whose intersection is exactly token_split(s). Requires
/// every token to have at most one outgoing arc.
Realizer realize_tree(const Structure& s);

/// Which token (if any) has two or more heads.
std::optional<int> first_multi_head_token(const Structure& s);

class ReconstructionError : public std::runtime_error {
 public:
  ReconstructionError(const std::string& what, std::string label)
      : std::runtime_error(what), label_(std::move(label)) {}
  const std::string& label() const { return label_; }

 private:
  std::string label_;
};

/// Binary tree over string labels. Node ids index `labels`.
struct BinaryTree {
  std::vector<std::string> labels;
  int root = -1;
  std::vector<int> left;   // -1 = no child
  std::vector<int> right;  // -1 = no child

  int size() const { return static_cast<int>(labels.size()); }
  std::optional<int> find(const std::string& label) const;

  std::vector<std::string> inorder() const;
  std::vector<std::string> postorder() const;
  /// Indented one-node-per-line rendering, root first.
  std::string render() const;
};

/// Rebuilds the unique binary tree with the given traversals from the
/// left-descendant and right-descendant partial orders they induce.
BinaryTree reconstruct_binary_tree(std::span<const std::string> inorder,
                                   std::span<const std::string> postorder);

}  // namespace ordlin
