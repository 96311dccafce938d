#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sobext/rng.hpp"

namespace sobext {

using NodeIndex = int;

/// Smallest admissible leaf weight. Below this the dyadic decomposition
/// depth and the grid cardinality stop being desk-scale.
inline constexpr double kMinLeafWeight = 0x1.0p-40;

/// Values on every node of a tree, indexed by NodeIndex.
struct NodeFunction {
  std::vector<double> values;
  double operator[](NodeIndex v) const { return values[static_cast<std::size_t>(v)]; }
  double& operator[](NodeIndex v) { return values[static_cast<std::size_t>(v)]; }
};

/// Values on the leaves of a tree, indexed by leaf ordinal (tree order).
struct LeafFunction {
  std::vector<double> values;
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  std::size_t size() const { return values.size(); }
};

struct TreeViolation {
  std::string node;  // digit-string id of the offending node
  std::string message;
};

/// Ordered N-ary tree with positive node weights.
///
/// Nodes are stored in depth-first preorder with children sorted by their
/// last digit, so the leaves appear in tree order and every shadow (the set
/// of leaves below a node) is a contiguous range of leaf ordinals.
/// The object is immutable after construction.
class WeightedTree {
 public:
  struct Node {
    std::string id;
    NodeIndex parent = -1;
    std::vector<NodeIndex> children;
    int depth = 0;
    double weight = 0.0;
    int first_leaf = 0;  // shadow = leaves [first_leaf, end_leaf)
    int end_leaf = 0;
    int leaf_ordinal = -1;  // -1 for interior nodes
  };

  /// Builds the tree from (id, weight) pairs. Throws InputError if ids are
  /// not digit strings over {0..N-1}, are duplicated, are not prefix-closed,
  /// if a weight is non-positive, or if the smallest leaf weight is below
  /// kMinLeafWeight. Structural invariants that may legitimately be probed
  /// (child counts, weight decay, root weight) are left to validate().
  static WeightedTree build(int arity, double epsilon,
                            std::vector<std::pair<std::string, double>> weights);

  int arity() const { return arity_; }
  double epsilon() const { return epsilon_; }
  std::size_t size() const { return nodes_.size(); }
  int height() const { return height_; }

  const Node& node(NodeIndex v) const { return nodes_[static_cast<std::size_t>(v)]; }
  std::span<const Node> nodes() const { return nodes_; }
  NodeIndex root() const { return 0; }
  bool is_leaf(NodeIndex v) const { return node(v).children.empty(); }
  NodeIndex parent(NodeIndex v) const { return node(v).parent; }
  double weight(NodeIndex v) const { return node(v).weight; }
  int depth(NodeIndex v) const { return node(v).depth; }

  /// Leaves in tree order.
  std::span<const NodeIndex> leaves() const { return leaves_; }
  std::size_t leaf_count() const { return leaves_.size(); }
  /// Interior (non-leaf) nodes in preorder.
  std::span<const NodeIndex> interior() const { return interior_; }

  /// Throws InputError for unknown ids.
  NodeIndex index_of(std::string_view id) const;

  /// Ancestor of v at depth k (the length-k prefix); k <= depth(v).
  NodeIndex ancestor(NodeIndex v, int k) const;
  NodeIndex lca(NodeIndex u, NodeIndex v) const;
  NodeIndex lca(std::string_view u, std::string_view v) const { return lca(index_of(u), index_of(v)); }

  /// Minimum leaf weight.
  double delta() const { return delta_; }

  /// Last digit of a non-root node.
  int last_digit(NodeIndex v) const { return node(v).id.back() - '0'; }

 private:
  int arity_ = 2;
  double epsilon_ = 0.5;
  int height_ = 0;
  double delta_ = 1.0;
  std::vector<Node> nodes_;
  std::vector<NodeIndex> leaves_;
  std::vector<NodeIndex> interior_;
  std::unordered_map<std::string, NodeIndex> index_;
};

/// Reports every violated structural invariant: root weight 1, between 2 and
/// N children per interior node, W_v <= eps * W_parent(v), epsilon in (0,1).
std::vector<TreeViolation> validate(const WeightedTree& tree);

/// (sum over non-root v of |Phi(v) - Phi(parent v)|^p W_v^(2-p))^(1/p).
/// Accepts 1 < p <= 2; p = 2 is the Hilbert-space reference case.
double seminorm_tree(const WeightedTree& tree, const NodeFunction& phi, double p);

/// The p-th power of seminorm_tree (the objective minimised by extensions).
double tree_energy(const WeightedTree& tree, const NodeFunction& phi, double p);

struct RandomTreeParams {
  int arity = 2;
  int depth = 2;
  double epsilon = 0.01;
  /// Probability that a node above the last level is made a leaf. Zero gives
  /// all leaves at full depth.
  double early_leaf_probability = 0.0;
  /// Weights are W_v = U * eps * W_parent with U uniform in [u_min, 1].
  double u_min = 0.5;
};

/// Seeded random tree: child count uniform in {2..N}.
WeightedTree random_tree(const RandomTreeParams& params, std::uint64_t seed);

/// Tree in which every node at depth < depth has exactly `arity` children
/// and every non-root weight equals eps * W_parent.
WeightedTree perfect_tree(int arity, int depth, double epsilon);

}  // namespace sobext
