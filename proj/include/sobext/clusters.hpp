#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sobext/embedding.hpp"
#include "sobext/tree.hpp"
#include "sobext/whitney.hpp"

namespace sobext {

/// Image in E2 of the shadow of one tree node. Cluster indices coincide with
/// tree NodeIndex values.
struct Cluster {
  NodeIndex parent = -1;
  int depth = 0;
  double weight = 0.0;
  int first = 0;  // members are E2 points [first, end)
  int end = 0;
  Point y;        // representative: E2 point of the first leaf
  double radius = 0.0;  // kappa * K1 * W
  bool leaf() const { return end - first == 1; }
};

struct ClusterOptions {
  double kappa = 20.0;
  /// K1; computed from the instance when empty (see default_k1).
  std::optional<double> k1;
  /// Dilation used in the disjointness properties (B4)-(B6).
  double k0 = 50.0;
  /// Throw VerificationError on any violated ball property.
  bool strict = false;
};

struct BallReport {
  bool mirrors_tree = true;   // C_u in C_v iff v is an ancestor of u; weights equal
  bool b1 = true;             // C in kappa^-1 B_C
  bool b2 = true;             // kappa B_C in B_parent
  bool b3 = true;             // radius = kappa K1 W_C
  bool b4 = true;             // disjoint clusters have disjoint K0 balls
  bool b5 = true;             // leaf K0 balls pairwise disjoint
  bool b6 = true;             // K0 balls of equal depth pairwise disjoint
  bool q0_in_root_ball = true;
  std::size_t violation_count = 0;
  /// First violations, each naming the offending cluster ids.
  std::vector<std::string> violations;
  /// min N dist(K0 B_C, K0 B_C') / (W_pi(C) + W_pi(C')) over disjoint pairs in C0.
  double b4_constant = 0.0;
  /// Largest K0 for which (B5) and (B6) would hold.
  double k0_disjoint_max = 0.0;
  /// diam(C) / W_C over non-leaf clusters.
  double diam_ratio_min = 0.0;
  double diam_ratio_max = 0.0;
  bool ok() const { return mirrors_tree && b1 && b2 && b3 && b4 && b5 && b6 && q0_in_root_ball; }
  bool containment_ok() const { return mirrors_tree && b1 && b2 && b3 && q0_in_root_ball; }
};

class ClusterTree {
 public:
  /// Builds one cluster per tree node and checks every ball property. In
  /// strict mode a violation throws VerificationError listing all of them.
  static ClusterTree build(const WeightedTree& tree, const PlanarSet& ps, const ClusterOptions& opts = {});

  double kappa() const { return kappa_; }
  double k1() const { return k1_; }
  double k0() const { return k0_; }
  std::size_t size() const { return clusters_.size(); }
  const Cluster& cluster(int c) const { return clusters_[static_cast<std::size_t>(c)]; }
  const std::vector<Cluster>& clusters() const { return clusters_; }
  const std::vector<int>& children(int c) const { return children_[static_cast<std::size_t>(c)]; }
  int root() const { return 0; }
  /// Cluster {x} of E2 point i.
  int leaf_cluster(std::size_t i) const { return leaf_of_e2_[i]; }
  const BallReport& ball_report() const { return report_; }

  /// True if the closed square lies in the closed ball B_C (relative
  /// tolerance 1e-12 on the radius).
  bool square_in_ball(int c, const DyadicSquare& q) const;

 private:
  double kappa_ = 20.0, k1_ = 1.0, k0_ = 50.0;
  std::vector<Cluster> clusters_;
  std::vector<std::vector<int>> children_;
  std::vector<int> leaf_of_e2_;
  BallReport report_;
};

/// 1.1 * max(1, diam(C)/W_C over non-leaf C, R/kappa) where R is the
/// largest distance from y_root to a corner of Q0.
double default_k1(const WeightedTree& tree, const PlanarSet& ps, double kappa);

struct Assignment {
  std::vector<int> cluster;   // C_Q per Whitney square
  std::size_t ambiguous = 0;  // squares lying in two deepest balls
};

/// C_Q = the deepest cluster whose ball contains Q. When several clusters
/// of that depth qualify, the one with y_C nearest the centre of Q wins
/// (then the first in preorder) and the square is counted as ambiguous.
Assignment assign_clusters(const ClusterTree& ct, const WhitneyDecomposition& wd, Exec exec = Exec::Parallel);

struct PairSets {
  /// Neighbour pairs (Q, Q') with C_Q = C and C_Q' = parent(C), per cluster.
  std::vector<std::vector<std::pair<int, int>>> pairs;
  /// Neighbour pairs whose clusters differ but are not parent and child.
  std::size_t c_violations = 0;
};

PairSets pair_sets(const ClusterTree& ct, const WhitneyDecomposition& wd, const Assignment& as);

/// R_C = sum over pairs of (delta_Q / W_C)^(2-p), per cluster (0 at the root).
std::vector<double> pair_ratios(const ClusterTree& ct, const WhitneyDecomposition& wd, const PairSets& ps, double p);

struct ClusterLemmaReport {
  std::size_t a_violations = 0;  // Type II square not mapped to {x_Q}
  std::size_t b_violations = 0;  // boundary square not mapped to the root
  std::size_t c_violations = 0;
  std::size_t ambiguous = 0;
  bool ok() const { return a_violations == 0 && b_violations == 0 && c_violations == 0 && ambiguous == 0; }
};

ClusterLemmaReport verify_cluster_lemma(const ClusterTree& ct, const WhitneyDecomposition& wd, const Assignment& as,
                                        const PairSets& pairs);

}  // namespace sobext
