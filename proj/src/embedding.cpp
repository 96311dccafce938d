#include "sobext/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sobext/errors.hpp"

namespace sobext {

std::vector<double> psi_all(const WeightedTree& tree) {
  std::vector<double> out(tree.size(), 0.0);
  const double denom = static_cast<double>(tree.arity() - 1);
  // Preorder: parents precede children.
  for (std::size_t i = 1; i < tree.size(); ++i) {
    const auto v = static_cast<NodeIndex>(i);
    const NodeIndex par = tree.parent(v);
    out[i] = out[static_cast<std::size_t>(par)] + tree.weight(par) * tree.last_digit(v) / denom;
  }
  return out;
}

double psi(const WeightedTree& tree, NodeIndex v) {
  if (v < 0 || static_cast<std::size_t>(v) >= tree.size()) throw InputError("unknown node");
  if (v == tree.root()) return 0.0;
  const NodeIndex par = tree.parent(v);
  return psi(tree, par) + tree.weight(par) * tree.last_digit(v) / static_cast<double>(tree.arity() - 1);
}

double psi_closed_sum(const WeightedTree& tree, NodeIndex v) {
  const auto& id = tree.node(v).id;
  double s = 0.0;
  for (int i = 1; i <= static_cast<int>(id.size()); ++i) {
    const NodeIndex anc = tree.ancestor(v, i - 1);
    s += tree.weight(anc) * (id[static_cast<std::size_t>(i - 1)] - '0') / static_cast<double>(tree.arity() - 1);
  }
  return s;
}

PlanarSet PlanarSet::build(const WeightedTree& tree) {
  PlanarSet ps;
  ps.delta_ = tree.delta();
  if (!(ps.delta_ >= kMinLeafWeight)) throw InputError("minimum leaf weight is below 2^-40");
  // Smallest K with K * Delta >= 2, so that exactly the k < K satisfy k Delta < 2.
  auto k = static_cast<std::int64_t>(std::ceil(2.0 / ps.delta_));
  while (k > 1 && static_cast<double>(k - 1) * ps.delta_ >= 2.0) --k;
  while (static_cast<double>(k) * ps.delta_ < 2.0) ++k;
  ps.e1_count_ = k;

  ps.psi_ = psi_all(tree);
  for (NodeIndex leaf : tree.leaves()) {
    ps.e2_.push_back({ps.psi_[static_cast<std::size_t>(leaf)], tree.weight(leaf)});
    ps.e2_leaf_.push_back(leaf);
  }
  ps.by_x1_.resize(ps.e2_.size());
  std::iota(ps.by_x1_.begin(), ps.by_x1_.end(), 0);
  std::stable_sort(ps.by_x1_.begin(), ps.by_x1_.end(),
                   [&](int a, int b) { return ps.e2_[static_cast<std::size_t>(a)].x1 < ps.e2_[static_cast<std::size_t>(b)].x1; });
  for (int i : ps.by_x1_) ps.sorted_x1_.push_back(ps.e2_[static_cast<std::size_t>(i)].x1);
  return ps;
}

std::int64_t PlanarSet::nearest_e1_index(Point q) const {
  const double t = q.x1 / delta_;
  if (!(t > 0.0)) return 0;
  if (t >= static_cast<double>(e1_count_ - 1)) return e1_count_ - 1;
  // Rounding of t may be off by one; compare the neighbouring candidates.
  const auto k = static_cast<std::int64_t>(std::floor(t));
  std::int64_t best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::int64_t c = std::max<std::int64_t>(0, k - 1); c <= std::min(e1_count_ - 1, k + 1); ++c) {
    const double d = std::abs(q.x1 - e1_x(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double PlanarSet::dist_to_e1(Point q) const { return distance(q, nearest_e1(q)); }

std::pair<std::int64_t, std::int64_t> PlanarSet::e1_range(const Rect& r) const {
  if (!(r.lo2 <= 0.0 && r.hi2 >= 0.0)) return {1, 0};
  const double lo = std::max(r.lo1, 0.0);
  if (r.hi1 < 0.0 || lo > e1_x(e1_count_ - 1)) return {1, 0};
  auto first = static_cast<std::int64_t>(std::ceil(lo / delta_));
  while (first > 0 && e1_x(first - 1) >= r.lo1) --first;
  while (e1_x(first) < r.lo1) ++first;
  const double hi = std::min(r.hi1, e1_x(e1_count_ - 1));
  auto last = static_cast<std::int64_t>(std::floor(hi / delta_));
  while (last + 1 < e1_count_ && e1_x(last + 1) <= r.hi1) ++last;
  while (last >= 0 && e1_x(last) > r.hi1) --last;
  first = std::max<std::int64_t>(first, 0);
  last = std::min(last, e1_count_ - 1);
  return {first, last};
}

std::int64_t PlanarSet::count_e1(const Rect& r) const {
  const auto [a, b] = e1_range(r);
  return b >= a ? b - a + 1 : 0;
}

int PlanarSet::count_e2(const Rect& r, int limit, int* first_hit) const {
  auto it = std::lower_bound(sorted_x1_.begin(), sorted_x1_.end(), r.lo1);
  int n = 0;
  for (auto i = static_cast<std::size_t>(it - sorted_x1_.begin()); i < sorted_x1_.size() && sorted_x1_[i] <= r.hi1; ++i) {
    const int idx = by_x1_[i];
    const Point& p = e2_[static_cast<std::size_t>(idx)];
    if (p.x2 >= r.lo2 && p.x2 <= r.hi2) {
      if (n == 0 && first_hit) *first_hit = idx;
      if (++n >= limit) break;
    }
  }
  return n;
}

PsiReport verify_lemma_psi(const WeightedTree& tree, const PlanarSet& ps) {
  PsiReport rep;
  const auto leaves = tree.leaves();
  const double n = tree.arity();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    for (std::size_t j = i + 1; j < leaves.size(); ++j) {
      const double a = ps.psi()[static_cast<std::size_t>(leaves[i])];
      const double b = ps.psi()[static_cast<std::size_t>(leaves[j])];
      if (!(a < b)) rep.order_preserving = false;
      const double w = tree.weight(tree.lca(leaves[i], leaves[j]));
      const double d = std::abs(b - a);
      rep.max_upper_ratio = std::max(rep.max_upper_ratio, d / w);
      rep.max_lower_ratio =
          std::max(rep.max_lower_ratio, d > 0.0 ? w / (n * d) : std::numeric_limits<double>::infinity());
    }
  }
  rep.k_measured = std::max({1.0, rep.max_upper_ratio, rep.max_lower_ratio});
  return rep;
}

SepReport verify_lemma_sep(const PlanarSet& ps) {
  SepReport rep;
  const double delta = ps.delta();
  const double slack = 1e-12;
  rep.min_separation = std::numeric_limits<double>::infinity();
  rep.min_e2_ratio = std::numeric_limits<double>::infinity();
  // E1 lies in [0,2) by construction of e1_count; check the last point.
  if (!(ps.e1_x(ps.e1_count() - 1) < 2.0)) rep.inside_box = false;
  const auto& e2 = ps.e2();
  for (std::size_t i = 0; i < e2.size(); ++i) {
    const Point x = e2[i];
    if (!(x.x1 >= 0.0 && x.x1 < 2.0 && x.x2 >= 0.0 && x.x2 < 2.0)) rep.inside_box = false;
    const double d1 = ps.dist_to_e1(x);
    rep.min_separation = std::min(rep.min_separation, d1 / delta);
    rep.max_e1_ratio = std::max(rep.max_e1_ratio, d1 / x.x2);
    if (!(x.x2 >= delta * (1.0 - slack) && x.x2 <= d1 * (1.0 + slack) && d1 <= 2.0 * x.x2 * (1.0 + slack)))
      rep.height_bounds = false;
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < e2.size(); ++j)
      if (j != i) nearest = std::min(nearest, distance(x, e2[j]));
    if (std::isfinite(nearest)) {
      rep.min_separation = std::min(rep.min_separation, nearest / delta);
      rep.min_e2_ratio = std::min(rep.min_e2_ratio, nearest / x.x2);
      if (!(x.x2 <= nearest * (1.0 + slack))) rep.e2_spacing = false;
    }
  }
  if (!(rep.min_separation >= 1.0 - slack)) rep.separated = false;
  return rep;
}

}  // namespace sobext
