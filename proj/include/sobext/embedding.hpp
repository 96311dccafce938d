#pragma once

#include <cstdint>
#include <vector>

#include "sobext/geometry.hpp"
#include "sobext/tree.hpp"

namespace sobext {

/// Psi of every node, indexed by NodeIndex.
std::vector<double> psi_all(const WeightedTree& tree);

/// Psi(v) by the recursion Psi(v) = Psi(parent) + W_parent * digit / (N - 1).
double psi(const WeightedTree& tree, NodeIndex v);

/// Closed-sum form of Psi, used as a cross-check of the recursion.
double psi_closed_sum(const WeightedTree& tree, NodeIndex v);

/// The planar set E = E1 u E2.
///
/// E1 = {(k Delta, 0) : 0 <= k < e1_count} is never materialised; every
/// query on it is arithmetic. E2 holds (Psi(leaf), W_leaf) in leaf order.
class PlanarSet {
 public:
  static PlanarSet build(const WeightedTree& tree);

  double delta() const { return delta_; }
  std::int64_t e1_count() const { return e1_count_; }
  Point e1_point(std::int64_t k) const { return {static_cast<double>(k) * delta_, 0.0}; }
  double e1_x(std::int64_t k) const { return static_cast<double>(k) * delta_; }

  /// E2 point for leaf ordinal i.
  const std::vector<Point>& e2() const { return e2_; }
  std::size_t e2_count() const { return e2_.size(); }
  /// Tree node of E2 point i.
  NodeIndex e2_leaf(std::size_t i) const { return e2_leaf_[i]; }
  const std::vector<double>& psi() const { return psi_; }

  /// Index of the E1 point nearest to q; ties go to the smaller index.
  std::int64_t nearest_e1_index(Point q) const;
  Point nearest_e1(Point q) const { return e1_point(nearest_e1_index(q)); }
  double dist_to_e1(Point q) const;

  /// Number of E1 points in the closed rectangle r.
  std::int64_t count_e1(const Rect& r) const;
  /// Range [first, last] of E1 indices inside r; empty if first > last.
  std::pair<std::int64_t, std::int64_t> e1_range(const Rect& r) const;

  /// Number of E2 points in the closed rectangle r, stopping early once
  /// `limit` is reached. `first_hit` receives one point found, if any.
  int count_e2(const Rect& r, int limit = 1 << 30, int* first_hit = nullptr) const;

 private:
  double delta_ = 1.0;
  std::int64_t e1_count_ = 0;
  std::vector<Point> e2_;
  std::vector<NodeIndex> e2_leaf_;
  std::vector<double> psi_;
  // E2 indices sorted by first coordinate, for range counting.
  std::vector<int> by_x1_;
  std::vector<double> sorted_x1_;
};

struct PsiReport {
  bool order_preserving = true;
  double k_measured = 1.0;
  /// Worst pair for each side of the two-sided lca bound.
  double max_upper_ratio = 0.0;  // |dPsi| / W_lca
  double max_lower_ratio = 0.0;  // W_lca / (N |dPsi|)
};

/// Order preservation of Psi on leaves (all pairs) and the smallest K >= 1
/// with K^-1 W_lca / N <= |Psi(w) - Psi(v)| <= K W_lca.
PsiReport verify_lemma_psi(const WeightedTree& tree, const PlanarSet& ps);

struct SepReport {
  bool inside_box = true;        // E within [0,2) x [0,2)
  bool separated = true;         // pairwise distance >= Delta
  bool height_bounds = true;     // Delta <= x2 <= dist(x,E1) <= 2 x2
  bool e2_spacing = true;        // x2 <= dist(x, E2 \ {x})
  double min_separation = 0.0;   // min over E2 pairs and E2-E1 of distance / Delta
  double max_e1_ratio = 0.0;     // max dist(x,E1) / x2
  double min_e2_ratio = 0.0;     // min dist(x, E2\{x}) / x2
  bool ok() const { return inside_box && separated && height_bounds && e2_spacing; }
};

SepReport verify_lemma_sep(const PlanarSet& ps);

}  // namespace sobext
