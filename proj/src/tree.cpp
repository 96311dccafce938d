#include "sobext/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sobext/errors.hpp"

namespace sobext {

namespace {

bool is_digit_string(std::string_view id, int arity) {
  return std::all_of(id.begin(), id.end(), [arity](char c) { return c >= '0' && c < '0' + arity; });
}

}  // namespace

WeightedTree WeightedTree::build(int arity, double epsilon,
                                 std::vector<std::pair<std::string, double>> weights) {
  if (arity < 2 || arity > 10) throw InputError("arity N must lie in [2, 10]");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("epsilon must lie in (0, 1)");

  // Preorder with children sorted by last digit is exactly lexicographic
  // order of the digit strings.
  std::sort(weights.begin(), weights.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  WeightedTree t;
  t.arity_ = arity;
  t.epsilon_ = epsilon;
  t.nodes_.reserve(weights.size());
  for (auto& [id, w] : weights) {
    if (!is_digit_string(id, arity)) throw InputError("node id '" + id + "' is not a digit string over {0..N-1}");
    if (!(w > 0.0) || !std::isfinite(w)) throw InputError("node '" + id + "' has a non-positive weight");
    if (t.index_.contains(id)) throw InputError("duplicate node id '" + id + "'");
    Node n;
    n.id = id;
    n.depth = static_cast<int>(id.size());
    n.weight = w;
    if (!id.empty()) {
      auto it = t.index_.find(id.substr(0, id.size() - 1));
      if (it == t.index_.end()) throw InputError("node ids are not prefix-closed at '" + id + "'");
      n.parent = it->second;
    }
    const auto idx = static_cast<NodeIndex>(t.nodes_.size());
    t.index_.emplace(id, idx);
    t.nodes_.push_back(std::move(n));
    if (t.nodes_.back().parent >= 0) t.nodes_[static_cast<std::size_t>(t.nodes_.back().parent)].children.push_back(idx);
  }
  if (t.nodes_.empty() || !t.nodes_.front().id.empty()) throw InputError("tree has no root node (empty id)");

  t.delta_ = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.nodes_.size(); ++i) {
    auto& n = t.nodes_[i];
    t.height_ = std::max(t.height_, n.depth);
    if (n.children.empty()) {
      n.leaf_ordinal = static_cast<int>(t.leaves_.size());
      t.leaves_.push_back(static_cast<NodeIndex>(i));
      t.delta_ = std::min(t.delta_, n.weight);
    } else {
      t.interior_.push_back(static_cast<NodeIndex>(i));
    }
  }
  for (std::size_t i = t.nodes_.size(); i-- > 0;) {
    auto& n = t.nodes_[i];
    if (n.children.empty()) {
      n.first_leaf = n.leaf_ordinal;
      n.end_leaf = n.leaf_ordinal + 1;
    } else {
      n.first_leaf = t.nodes_[static_cast<std::size_t>(n.children.front())].first_leaf;
      n.end_leaf = t.nodes_[static_cast<std::size_t>(n.children.back())].end_leaf;
    }
  }
  if (t.delta_ < kMinLeafWeight) {
    std::ostringstream os;
    os << "minimum leaf weight " << t.delta_ << " is below the floor 2^-40";
    throw InputError(os.str());
  }
  return t;
}

NodeIndex WeightedTree::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw InputError("unknown node id '" + std::string(id) + "'");
  return it->second;
}

NodeIndex WeightedTree::ancestor(NodeIndex v, int k) const {
  while (depth(v) > k) v = parent(v);
  return v;
}

NodeIndex WeightedTree::lca(NodeIndex u, NodeIndex v) const {
  while (depth(u) > depth(v)) u = parent(u);
  while (depth(v) > depth(u)) v = parent(v);
  while (u != v) {
    u = parent(u);
    v = parent(v);
  }
  return u;
}

std::vector<TreeViolation> validate(const WeightedTree& tree) {
  std::vector<TreeViolation> out;
  const auto& root = tree.node(tree.root());
  if (root.weight != 1.0) out.push_back({root.id, "root weight must be 1"});
  if (!(tree.epsilon() > 0.0 && tree.epsilon() < 1.0)) out.push_back({"", "epsilon must lie in (0, 1)"});
  for (const auto& n : tree.nodes()) {
    const auto kids = n.children.size();
    if (kids == 1 || kids > static_cast<std::size_t>(tree.arity())) {
      std::ostringstream os;
      os << "interior node has " << kids << " children; expected 2.." << tree.arity();
      out.push_back({n.id, os.str()});
    }
    if (n.parent >= 0) {
      const double bound = tree.epsilon() * tree.weight(n.parent);
      // Relative slack of one part in 1e12 admits the equality case after
      // decimal round trips.
      if (n.weight > bound * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "weight " << n.weight << " exceeds eps * W_parent = " << bound;
        out.push_back({n.id, os.str()});
      }
    }
  }
  return out;
}

double tree_energy(const WeightedTree& tree, const NodeFunction& phi, double p) {
  if (!(p > 1.0 && p <= 2.0)) throw InputError("p must lie in (1, 2]");
  if (phi.values.size() != tree.size()) throw InputError("node function size does not match the tree");
  double sum = 0.0;
  for (std::size_t i = 1; i < tree.size(); ++i) {
    const auto v = static_cast<NodeIndex>(i);
    const double d = phi[v] - phi[tree.parent(v)];
    if (d != 0.0) sum += std::pow(std::abs(d), p) * std::pow(tree.weight(v), 2.0 - p);
  }
  return sum;
}

double seminorm_tree(const WeightedTree& tree, const NodeFunction& phi, double p) {
  return std::pow(tree_energy(tree, phi, p), 1.0 / p);
}

namespace {

void grow(const RandomTreeParams& params, Rng& rng, const std::string& id, double weight, int depth,
          std::vector<std::pair<std::string, double>>& out) {
  out.emplace_back(id, weight);
  if (depth == params.depth) return;
  if (depth > 0 && params.early_leaf_probability > 0.0 && rng.uniform() < params.early_leaf_probability) return;
  const int kids = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(params.arity - 1)));
  // Children take distinct digits, kept in increasing order.
  std::vector<int> digits(static_cast<std::size_t>(params.arity));
  for (int i = 0; i < params.arity; ++i) digits[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < kids; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(params.arity - i));
    std::swap(digits[static_cast<std::size_t>(i)], digits[j]);
  }
  std::sort(digits.begin(), digits.begin() + kids);
  for (int i = 0; i < kids; ++i) {
    const double u = rng.uniform(params.u_min, 1.0);
    grow(params, rng, id + static_cast<char>('0' + digits[static_cast<std::size_t>(i)]),
         u * params.epsilon * weight, depth + 1, out);
  }
}

}  // namespace

WeightedTree random_tree(const RandomTreeParams& params, std::uint64_t seed) {
  if (params.depth < 1) throw InputError("depth must be at least 1");
  if (!(params.u_min > 0.0 && params.u_min <= 1.0)) throw InputError("u_min must lie in (0, 1]");
  Rng rng(seed);
  std::vector<std::pair<std::string, double>> nodes;
  grow(params, rng, "", 1.0, 0, nodes);
  return WeightedTree::build(params.arity, params.epsilon, std::move(nodes));
}

WeightedTree perfect_tree(int arity, int depth, double epsilon) {
  std::vector<std::pair<std::string, double>> nodes{{"", 1.0}};
  std::vector<std::pair<std::string, double>> frontier{{"", 1.0}};
  for (int d = 0; d < depth; ++d) {
    std::vector<std::pair<std::string, double>> next;
    for (const auto& [id, w] : frontier)
      for (int k = 0; k < arity; ++k) next.emplace_back(id + static_cast<char>('0' + k), epsilon * w);
    nodes.insert(nodes.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return WeightedTree::build(arity, epsilon, std::move(nodes));
}

}  // namespace sobext
