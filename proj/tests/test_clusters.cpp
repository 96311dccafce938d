#include <cmath>

#include "doctest.h"
#include "sobext/clusters.hpp"
#include "sobext/errors.hpp"

using namespace sobext;

namespace {

// Deepest cluster whose ball holds all four corners of Q; ties to the
// centre nearest Q, then the first in preorder. Scans every cluster.
int brute_cluster(const WeightedTree& t, const PlanarSet& ps, double kappa, double k1, const DyadicSquare& q) {
  const Rect r = q.closure();
  const Point m = q.center();
  int best = -1;
  double best_d = 0.0;
  for (std::size_t v = 0; v < t.size(); ++v) {
    const auto& n = t.node(static_cast<NodeIndex>(v));
    const Point y = ps.e2()[static_cast<std::size_t>(n.first_leaf)];
    const double rad = kappa * k1 * n.weight * (1.0 + 1e-12);
    bool in = true;
    for (double a : {r.lo1, r.hi1})
      for (double b : {r.lo2, r.hi2}) in = in && std::hypot(a - y.x1, b - y.x2) <= rad;
    if (!in) continue;
    const double d = distance(y, m);
    if (best < 0 || n.depth > t.depth(best) || (n.depth == t.depth(best) && d < best_d)) {
      best = static_cast<int>(v);
      best_d = d;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("leaf and root clusters") {
  auto t = random_tree({.arity = 3, .depth = 2, .epsilon = 0.01, .early_leaf_probability = 0.3}, 4);
  auto ps = PlanarSet::build(t);
  auto ct = ClusterTree::build(t, ps);
  CHECK(ct.size() == t.size());
  CHECK(ct.cluster(ct.root()).weight == 1.0);
  CHECK(ct.cluster(ct.root()).first == 0);
  CHECK(ct.cluster(ct.root()).end == static_cast<int>(ps.e2_count()));
  for (std::size_t i = 0; i < ps.e2_count(); ++i) {
    const auto& c = ct.cluster(ct.leaf_cluster(i));
    CHECK(c.leaf());
    CHECK(c.first == static_cast<int>(i));
    CHECK(c.weight == ps.e2()[i].x2);
  }
  CHECK(ct.ball_report().mirrors_tree);
}

TEST_CASE("depth-1 binary tree at kappa 20, K1 4") {
  auto t = perfect_tree(2, 1, 0.01);
  auto ps = PlanarSet::build(t);
  auto ct = ClusterTree::build(t, ps, {.kappa = 20.0, .k1 = 4.0, .k0 = 1.0});
  const auto& rep = ct.ball_report();
  CHECK(rep.b1);
  CHECK(rep.b2);
  CHECK(rep.b3);
  CHECK(rep.q0_in_root_ball);
  // Leaf balls have radius 0.8 and centres 1 apart, so even B_C overlap.
  CHECK(ct.cluster(1).radius == doctest::Approx(0.8));
  CHECK(rep.k0_disjoint_max == doctest::Approx(1.0 / 1.6));
  CHECK_FALSE(rep.b4);
  CHECK_FALSE(rep.b5);
  CHECK_FALSE(rep.b6);
  CHECK_THROWS_AS(ClusterTree::build(t, ps, {.kappa = 20.0, .k1 = 4.0, .k0 = 1.0, .strict = true}), VerificationError);
}

TEST_CASE("ball properties hold when eps is small against kappa K0") {
  auto t = perfect_tree(2, 1, 2e-4);
  auto ps = PlanarSet::build(t);
  auto ct = ClusterTree::build(t, ps, {.kappa = 20.0, .k0 = 50.0, .strict = true});
  const auto& rep = ct.ball_report();
  CHECK(rep.ok());
  CHECK(rep.b4_constant > 0.0);
  CHECK(rep.k0_disjoint_max > 50.0);
}

TEST_CASE("strict build names the offending clusters") {
  auto t = perfect_tree(2, 1, 0.01);
  auto ps = PlanarSet::build(t);
  try {
    ClusterTree::build(t, ps, {.strict = true});
    FAIL("expected a violation");
  } catch (const VerificationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(B5) leaves \"0\" and \"1\"") != std::string::npos);
  }
}

TEST_CASE("default K1 gives (B1) and Q0 in the root ball") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto t = random_tree({.arity = 2 + static_cast<int>(s % 2), .depth = 1 + static_cast<int>(s % 3), .epsilon = 0.01,
                          .early_leaf_probability = 0.2},
                         s);
    auto ps = PlanarSet::build(t);
    auto ct = ClusterTree::build(t, ps);
    CHECK(ct.k1() >= 1.0);
    CHECK(ct.ball_report().b1);
    CHECK(ct.ball_report().q0_in_root_ball);
    CHECK(ct.ball_report().mirrors_tree);
    CHECK(ct.ball_report().b2);
    // Non-leaf clusters are spread over a fixed fraction of their weight.
    CHECK(ct.ball_report().diam_ratio_min * t.arity() >= 0.5);
    CHECK(ct.ball_report().diam_ratio_max <= 1.5);
  }
}

TEST_CASE("invalid constants are rejected") {
  auto t = perfect_tree(2, 1, 0.01);
  auto ps = PlanarSet::build(t);
  CHECK_THROWS_AS(ClusterTree::build(t, ps, {.kappa = 10.0}), InputError);
  CHECK_THROWS_AS(ClusterTree::build(t, ps, {.k1 = 0.5}), InputError);
}

TEST_CASE("assignment agrees with the exhaustive scan") {
  struct Case {
    int arity, depth;
    double eps;
    std::uint64_t seed;
  };
  for (auto c : {Case{2, 1, 0.01, 0}, Case{3, 1, 0.005, 1}, Case{2, 2, 0.025, 2}, Case{3, 2, 0.02, 3}}) {
    auto t = random_tree({.arity = c.arity, .depth = c.depth, .epsilon = c.eps}, c.seed);
    auto ps = PlanarSet::build(t);
    auto wd = WhitneyDecomposition::decompose(ps);
    auto ct = ClusterTree::build(t, ps);
    REQUIRE(ct.ball_report().b2);
    auto as = assign_clusters(ct, wd, Exec::Serial);
    // Siblings can both contain Q only if their balls overlap.
    if (as.ambiguous > 0) CHECK(ct.ball_report().k0_disjoint_max < 1.0);
    if (ct.ball_report().k0_disjoint_max >= 1.0) CHECK(as.ambiguous == 0);
    for (std::size_t q = 0; q < wd.size(); q += 1 + wd.size() / 20000)
      CHECK(as.cluster[q] == brute_cluster(t, ps, ct.kappa(), ct.k1(), wd.square(q).sq));
    auto par = assign_clusters(ct, wd, Exec::Parallel);
    CHECK(par.cluster == as.cluster);
  }
}

TEST_CASE("cluster lemma on generated trees") {
  struct Case {
    int arity, depth;
    double eps;
  };
  std::uint64_t s = 0;
  for (auto c : {Case{2, 1, 0.005}, Case{3, 1, 0.005}, Case{3, 1, 0.0033}, Case{2, 2, 0.02}, Case{2, 2, 0.015}}) {
    auto t = random_tree({.arity = c.arity, .depth = c.depth, .epsilon = c.eps, .early_leaf_probability = 0.2}, s++);
    auto ps = PlanarSet::build(t);
    auto wd = WhitneyDecomposition::decompose(ps);
    auto ct = ClusterTree::build(t, ps);
    auto as = assign_clusters(ct, wd);
    auto pairs = pair_sets(ct, wd, as);
    auto rep = verify_cluster_lemma(ct, wd, as, pairs);
    CHECK(rep.a_violations == 0);
    CHECK(rep.b_violations == 0);
    CHECK(rep.c_violations == 0);
    CHECK(rep.ambiguous == 0);
  }
}

TEST_CASE("pair sets match a scan over all neighbour pairs") {
  auto t = random_tree({.arity = 3, .depth = 1, .epsilon = 0.05}, 7);
  auto ps = PlanarSet::build(t);
  auto wd = WhitneyDecomposition::decompose(ps);
  auto ct = ClusterTree::build(t, ps);
  auto as = assign_clusters(ct, wd);
  auto pairs = pair_sets(ct, wd, as);
  CHECK(pairs.pairs[0].empty());
  std::vector<std::size_t> count(ct.size(), 0);
  std::vector<double> rc(ct.size(), 0.0);
  const double p = 1.5;
  for (std::size_t q = 0; q < wd.size(); ++q)
    for (std::size_t r = 0; r < wd.size(); ++r) {
      if (as.cluster[r] != ct.cluster(as.cluster[q]).parent) continue;
      if (!wd.square(q).sq.dilate(1.1).intersects(wd.square(r).sq.dilate(1.1))) continue;
      const int c = as.cluster[q];
      ++count[static_cast<std::size_t>(c)];
      rc[static_cast<std::size_t>(c)] += std::pow(wd.square(q).sq.side() / ct.cluster(c).weight, 2.0 - p);
    }
  auto ratios = pair_ratios(ct, wd, pairs, p);
  for (std::size_t c = 0; c < ct.size(); ++c) {
    CHECK(pairs.pairs[c].size() == count[c]);
    CHECK(ratios[c] == doctest::Approx(rc[c]).epsilon(1e-12));
  }
  CHECK(ratios[0] == 0.0);
}
