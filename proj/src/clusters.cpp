#include "sobext/clusters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sobext/errors.hpp"

namespace sobext {

namespace {

constexpr double kBallTol = 1e-12;
constexpr std::size_t kMaxListed = 50;

double cluster_diameter(const PlanarSet& ps, int first, int end) {
  double d = 0.0;
  const auto& e2 = ps.e2();
  for (int i = first; i < end; ++i)
    for (int j = i + 1; j < end; ++j) d = std::max(d, distance(e2[static_cast<std::size_t>(i)], e2[static_cast<std::size_t>(j)]));
  return d;
}

std::string quoted(const WeightedTree& t, int c) { return "\"" + t.node(c).id + "\""; }

bool is_ancestor(const WeightedTree& t, NodeIndex v, NodeIndex u) {
  return t.depth(u) >= t.depth(v) && t.ancestor(u, t.depth(v)) == v;
}

}  // namespace

double default_k1(const WeightedTree& tree, const PlanarSet& ps, double kappa) {
  double k = 1.0;
  for (NodeIndex v : tree.interior()) {
    const auto& n = tree.node(v);
    k = std::max(k, cluster_diameter(ps, n.first_leaf, n.end_leaf) / n.weight);
  }
  const Point y = ps.e2()[0];
  double r = 0.0;
  for (double a : {kQ0Lo, kQ0Lo + kQ0Side})
    for (double b : {kQ0Lo, kQ0Lo + kQ0Side}) r = std::max(r, distance(y, Point{a, b}));
  k = std::max(k, r / kappa);
  return 1.1 * k;
}

ClusterTree ClusterTree::build(const WeightedTree& tree, const PlanarSet& ps, const ClusterOptions& opts) {
  if (!(opts.kappa > 10.0)) throw InputError("kappa must exceed 10");
  if (!(opts.k0 >= 1.0)) throw InputError("K0 must be at least 1");
  ClusterTree ct;
  ct.kappa_ = opts.kappa;
  ct.k0_ = opts.k0;
  ct.k1_ = opts.k1 ? *opts.k1 : default_k1(tree, ps, opts.kappa);
  if (!(ct.k1_ >= 1.0)) throw InputError("K1 must be at least 1");

  const std::size_t n = tree.size();
  ct.clusters_.resize(n);
  ct.children_.resize(n);
  ct.leaf_of_e2_.assign(ps.e2_count(), -1);
  for (std::size_t v = 0; v < n; ++v) {
    const auto& node = tree.node(static_cast<NodeIndex>(v));
    auto& c = ct.clusters_[v];
    c.parent = node.parent;
    c.depth = node.depth;
    c.weight = node.weight;
    c.first = node.first_leaf;
    c.end = node.end_leaf;
    c.y = ps.e2()[static_cast<std::size_t>(c.first)];
    c.radius = ct.kappa_ * ct.k1_ * c.weight;
    ct.children_[v].assign(node.children.begin(), node.children.end());
    if (node.leaf_ordinal >= 0) ct.leaf_of_e2_[static_cast<std::size_t>(node.leaf_ordinal)] = static_cast<int>(v);
  }

  auto& rep = ct.report_;
  auto fail = [&rep](bool& flag, const std::string& msg) {
    flag = false;
    if (rep.violations.size() < kMaxListed) rep.violations.push_back(msg);
    ++rep.violation_count;
  };
  const auto& e2 = ps.e2();
  const int ni = static_cast<int>(n);

  for (int v = 0; v < ni; ++v) {
    const auto& c = ct.clusters_[static_cast<std::size_t>(v)];
    if (c.weight != tree.weight(v)) fail(rep.mirrors_tree, "weight mismatch at " + quoted(tree, v));
    if (c.leaf() && c.weight != e2[static_cast<std::size_t>(c.first)].x2)
      fail(rep.mirrors_tree, "leaf weight differs from height at " + quoted(tree, v));
    for (int u = 0; u < ni; ++u) {
      const auto& d = ct.clusters_[static_cast<std::size_t>(u)];
      const bool subset = d.first >= c.first && d.end <= c.end;
      if (subset != is_ancestor(tree, v, u))
        fail(rep.mirrors_tree, "containment of " + quoted(tree, u) + " in " + quoted(tree, v) + " disagrees with ancestry");
    }
    // (B1)
    const double inner = ct.k1_ * c.weight * (1.0 + kBallTol);
    for (int i = c.first; i < c.end; ++i)
      if (distance(e2[static_cast<std::size_t>(i)], c.y) > inner) {
        fail(rep.b1, "(B1) " + quoted(tree, v) + " not inside kappa^-1 B_C");
        break;
      }
    // (B2)
    if (c.parent >= 0) {
      const auto& pc = ct.clusters_[static_cast<std::size_t>(c.parent)];
      if (distance(pc.y, c.y) + ct.kappa_ * c.radius > pc.radius * (1.0 + kBallTol))
        fail(rep.b2, "(B2) kappa B_" + quoted(tree, v) + " not inside B_" + quoted(tree, c.parent));
    }
    // (B3)
    if (std::abs(2.0 * c.radius - 2.0 * ct.k1_ * ct.kappa_ * c.weight) > 1e-15 * c.radius)
      fail(rep.b3, "(B3) radius of " + quoted(tree, v));
  }

  {
    const auto& r = ct.clusters_[0];
    const double lim = r.radius * (1.0 + kBallTol);
    bool inside = true;
    for (double a : {kQ0Lo, kQ0Lo + kQ0Side})
      for (double b : {kQ0Lo, kQ0Lo + kQ0Side}) inside = inside && distance(r.y, Point{a, b}) <= lim;
    if (!inside) fail(rep.q0_in_root_ball, "Q0 corner outside B_root");
  }

  // (B4)-(B6) over disjoint pairs of non-root clusters.
  rep.b4_constant = std::numeric_limits<double>::infinity();
  rep.k0_disjoint_max = std::numeric_limits<double>::infinity();
  const double N = tree.arity();
  for (int u = 1; u < ni; ++u) {
    const auto& a = ct.clusters_[static_cast<std::size_t>(u)];
    for (int v = u + 1; v < ni; ++v) {
      const auto& b = ct.clusters_[static_cast<std::size_t>(v)];
      if (!(a.end <= b.first || b.end <= a.first)) continue;
      const double centres = distance(a.y, b.y);
      const double reach = ct.k0_ * (a.radius + b.radius) * (1.0 + kBallTol);
      const double gap = std::max(0.0, centres - reach);
      const double wsum = ct.clusters_[static_cast<std::size_t>(a.parent)].weight + ct.clusters_[static_cast<std::size_t>(b.parent)].weight;
      rep.b4_constant = std::min(rep.b4_constant, N * gap / wsum);
      if (gap <= 0.0) fail(rep.b4, "(B4) K0 balls of " + quoted(tree, u) + " and " + quoted(tree, v) + " meet");
      const bool same_depth = a.depth == b.depth;
      const bool both_leaves = a.leaf() && b.leaf();
      if (same_depth || both_leaves) {
        rep.k0_disjoint_max = std::min(rep.k0_disjoint_max, centres / (a.radius + b.radius));
        if (gap <= 0.0 && both_leaves) fail(rep.b5, "(B5) leaves " + quoted(tree, u) + " and " + quoted(tree, v));
        if (gap <= 0.0 && same_depth) fail(rep.b6, "(B6) depth " + std::to_string(a.depth) + ": " + quoted(tree, u) + " and " + quoted(tree, v));
      }
    }
  }
  if (!std::isfinite(rep.b4_constant)) rep.b4_constant = 0.0;
  if (!std::isfinite(rep.k0_disjoint_max)) rep.k0_disjoint_max = 0.0;

  rep.diam_ratio_min = std::numeric_limits<double>::infinity();
  rep.diam_ratio_max = 0.0;
  for (NodeIndex v : tree.interior()) {
    const double r = cluster_diameter(ps, tree.node(v).first_leaf, tree.node(v).end_leaf) / tree.weight(v);
    rep.diam_ratio_min = std::min(rep.diam_ratio_min, r);
    rep.diam_ratio_max = std::max(rep.diam_ratio_max, r);
  }
  if (!std::isfinite(rep.diam_ratio_min)) rep.diam_ratio_min = 0.0;

  if (opts.strict && !rep.ok()) {
    std::ostringstream os;
    os << rep.violation_count << " ball-property violations (kappa=" << ct.kappa_ << ", K1=" << ct.k1_
       << ", K0=" << ct.k0_ << "):";
    for (const auto& m : rep.violations) os << "\n  " << m;
    if (rep.violation_count > rep.violations.size()) os << "\n  ...";
    throw VerificationError(os.str());
  }
  return ct;
}

bool ClusterTree::square_in_ball(int c, const DyadicSquare& q) const {
  const auto& cl = clusters_[static_cast<std::size_t>(c)];
  const Rect r = q.closure();
  const double dx = std::max(std::abs(r.lo1 - cl.y.x1), std::abs(r.hi1 - cl.y.x1));
  const double dy = std::max(std::abs(r.lo2 - cl.y.x2), std::abs(r.hi2 - cl.y.x2));
  const double lim = cl.radius * (1.0 + kBallTol);
  return dx * dx + dy * dy <= lim * lim;
}

Assignment assign_clusters(const ClusterTree& ct, const WhitneyDecomposition& wd, Exec exec) {
  Assignment as;
  const auto n = static_cast<std::int64_t>(wd.size());
  as.cluster.assign(wd.size(), 0);
  std::size_t ambiguous = 0;
  auto one = [&](std::int64_t i) -> bool {
    const auto& q = wd.square(static_cast<std::size_t>(i)).sq;
    const Point m = q.center();
    // Every ball containing Q lies on a chain of balls containing Q, so a
    // search pruned at balls missing Q visits all candidates.
    thread_local std::vector<int> stack;
    stack.assign(1, ct.root());
    int best = ct.root(), best_depth = 0, ties = 1;
    double best_d = distance(ct.cluster(best).y, m);
    while (!stack.empty()) {
      const int c = stack.back();
      stack.pop_back();
      for (int ch : ct.children(c)) {
        if (!ct.square_in_ball(ch, q)) continue;
        stack.push_back(ch);
        const auto& cl = ct.cluster(ch);
        const double d = distance(cl.y, m);
        if (cl.depth > best_depth) {
          best = ch;
          best_depth = cl.depth;
          best_d = d;
          ties = 1;
        } else if (cl.depth == best_depth) {
          ++ties;
          if (d < best_d || (d == best_d && ch < best)) {
            best = ch;
            best_d = d;
          }
        }
      }
    }
    as.cluster[static_cast<std::size_t>(i)] = best;
    return ties > 1;
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static) reduction(+ : ambiguous)
    for (std::int64_t i = 0; i < n; ++i) ambiguous += one(i) ? 1 : 0;
  } else {
    for (std::int64_t i = 0; i < n; ++i) ambiguous += one(i) ? 1 : 0;
  }
  as.ambiguous = ambiguous;
  return as;
}

PairSets pair_sets(const ClusterTree& ct, const WhitneyDecomposition& wd, const Assignment& as) {
  PairSets out;
  out.pairs.resize(ct.size());
  for (std::size_t q = 0; q < wd.size(); ++q) {
    const int cq = as.cluster[q];
    for (int r : wd.neighbors(q)) {
      const int cr = as.cluster[static_cast<std::size_t>(r)];
      if (cr == cq) continue;
      if (ct.cluster(cq).parent == cr) {
        out.pairs[static_cast<std::size_t>(cq)].emplace_back(static_cast<int>(q), r);
      } else if (ct.cluster(cr).parent != cq) {
        ++out.c_violations;
      }
    }
  }
  return out;
}

std::vector<double> pair_ratios(const ClusterTree& ct, const WhitneyDecomposition& wd, const PairSets& ps, double p) {
  std::vector<double> r(ct.size(), 0.0);
  for (std::size_t c = 1; c < ct.size(); ++c) {
    const double w = ct.cluster(static_cast<int>(c)).weight;
    for (const auto& [q, qq] : ps.pairs[c]) r[c] += std::pow(wd.square(static_cast<std::size_t>(q)).sq.side() / w, 2.0 - p);
  }
  return r;
}

ClusterLemmaReport verify_cluster_lemma(const ClusterTree& ct, const WhitneyDecomposition& wd, const Assignment& as,
                                        const PairSets& pairs) {
  ClusterLemmaReport rep;
  for (std::size_t q = 0; q < wd.size(); ++q) {
    const auto& s = wd.square(q);
    const int c = as.cluster[q];
    if (s.type == SquareType::II && c != ct.leaf_cluster(static_cast<std::size_t>(s.xq))) ++rep.a_violations;
    if (s.boundary && c != ct.root()) ++rep.b_violations;
  }
  rep.c_violations = pairs.c_violations;
  rep.ambiguous = as.ambiguous;
  return rep;
}

}  // namespace sobext
