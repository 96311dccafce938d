#include "sobext/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

namespace sobext {

namespace {

constexpr double kBandLo = 0.5;
constexpr double kBandHi = 0.55;

struct KeyHash {
  std::size_t operator()(const DyadicSquare& q) const {
    std::size_t h = std::hash<std::int64_t>{}(q.ix);
    h ^= std::hash<std::int64_t>{}(q.iy) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<int>{}(q.level) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

std::int64_t pick_offset_partner(std::int64_t z, std::int64_t off, std::int64_t count) {
  if (z + off <= count - 1) return z + off;
  if (z - off >= 0) return z - off;
  return (count - 1 - z >= z) ? count - 1 : 0;
}

}  // namespace

bool closures_touch(const DyadicSquare& a, const DyadicSquare& b) {
  const int top = std::max(a.level, b.level);
  const int sa = top - a.level, sb = top - b.level;
  const std::int64_t a0x = a.ix << sa, a1x = (a.ix + 1) << sa, a0y = a.iy << sa, a1y = (a.iy + 1) << sa;
  const std::int64_t b0x = b.ix << sb, b1x = (b.ix + 1) << sb, b0y = b.iy << sb, b1y = (b.iy + 1) << sb;
  return a0x <= b1x && b0x <= a1x && a0y <= b1y && b0y <= a1y;
}

const char* to_string(SquareType t) {
  switch (t) {
    case SquareType::I: return "I";
    case SquareType::II: return "II";
    case SquareType::III: return "III";
  }
  return "?";
}

E2Anchor e2_anchor(const PlanarSet& ps, std::size_t i) {
  const Point x = ps.e2()[i];
  E2Anchor a;
  a.z = ps.nearest_e1_index(x);
  double t = x.x1 + x.x2;
  if (!(t < 2.0)) t = x.x1 - x.x2;
  a.w = ps.nearest_e1_index({t, 0.0});
  if (a.w == a.z) a.w = a.z + 1 < ps.e1_count() ? a.z + 1 : a.z - 1;
  const Point z = ps.e1_point(a.z), w = ps.e1_point(a.w);
  const double h = x.x2;
  for (double d : {distance(x, z), distance(x, w), distance(z, w)}) {
    if (!(d >= 0.25 * h && d <= 4.0 * h))
      throw NumericalError("E2 anchor distances are not comparable to the height at point " + std::to_string(i));
  }
  return a;
}

std::array<double, 3> bump_profile(double u) {
  const double t = std::abs(u);
  if (t <= kBandLo) return {1.0, 0.0, 0.0};
  if (t >= kBandHi) return {0.0, 0.0, 0.0};
  const double w = kBandHi - kBandLo;
  const double s = (t - kBandLo) / w;
  const double s2 = s * s;
  const double smooth = s2 * s * (10.0 + s * (-15.0 + 6.0 * s));
  const double d1 = 30.0 * s2 * (1.0 - s) * (1.0 - s);
  const double d2 = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
  const double sgn = u < 0.0 ? -1.0 : 1.0;
  return {1.0 - smooth, -d1 * sgn / w, -d2 / (w * w)};
}

Jet2 bump(const DyadicSquare& q, Point x) {
  const double d = q.side();
  const Point c = q.center();
  const double u1 = (x.x1 - c.x1) / d, u2 = (x.x2 - c.x2) / d;
  Jet2 j;
  if (std::abs(u1) >= kBandHi || std::abs(u2) >= kBandHi) return j;
  const auto g1 = bump_profile(u1), g2 = bump_profile(u2);
  j.value = g1[0] * g2[0];
  j.grad = {g1[1] * g2[0] / d, g1[0] * g2[1] / d};
  const double d2 = d * d;
  j.hess = {g1[2] * g2[0] / d2, g1[1] * g2[1] / d2, g1[0] * g2[2] / d2};
  return j;
}

WhitneyDecomposition WhitneyDecomposition::decompose(const PlanarSet& ps, const WhitneyOptions& opts) {
  WhitneyDecomposition wd;
  if (ps.e2_count() + static_cast<std::size_t>(ps.e1_count()) < 2) throw InputError("E must contain at least two points");

  auto count3 = [&ps](const DyadicSquare& q) {
    const Rect r = q.dilate(3.0);
    const std::int64_t n1 = ps.count_e1(r);
    if (n1 >= 2) return std::int64_t{2};
    return n1 + ps.count_e2(r, static_cast<int>(2 - n1));
  };

  std::vector<E2Anchor> anchors(ps.e2_count());
  for (std::size_t i = 0; i < anchors.size(); ++i) anchors[i] = e2_anchor(ps, i);

  std::size_t leaves = 0;
  const std::size_t abandon = 20 * opts.max_squares;
  bool over = false;
  std::vector<std::pair<int, DyadicSquare>> stack;
  wd.qtree_.push_back({});
  stack.push_back({0, DyadicSquare{}});
  while (!stack.empty()) {
    auto [node, q] = stack.back();
    stack.pop_back();
    if (count3(q) <= 1) {
      ++leaves;
      if (leaves > opts.max_squares) over = true;
      if (over) {
        if (leaves > abandon) break;
        continue;
      }
      WhitneySquare s;
      s.sq = q;
      s.boundary = q.on_boundary();
      const Rect r = q.dilate(1.1);
      const auto [a, b] = ps.e1_range(r);
      const std::int64_t n1 = b >= a ? b - a + 1 : 0;
      int hit = -1;
      const int n2 = ps.count_e2(r, 2, &hit);
      if (n1 + n2 >= 2) throw NumericalError("internal: a 1.1-dilate holds two points of E");
      if (n1 == 1) {
        s.type = SquareType::I;
        s.z = a;
        s.w = a + 1 < ps.e1_count() ? a + 1 : a - 1;
      } else if (n2 == 1) {
        s.type = SquareType::II;
        s.xq = hit;
        s.z = anchors[static_cast<std::size_t>(hit)].z;
        s.w = anchors[static_cast<std::size_t>(hit)].w;
      } else {
        s.type = SquareType::III;
        s.z = ps.nearest_e1_index(q.center());
        const auto off = std::max<std::int64_t>(1, std::llround(q.side() / ps.delta()));
        s.w = pick_offset_partner(s.z, off, ps.e1_count());
      }
      if (s.boundary) {
        s.z = 0;
        s.w = ps.e1_count() - 1;
      }
      wd.qtree_[static_cast<std::size_t>(node)].leaf = static_cast<int>(wd.squares_.size());
      wd.squares_.push_back(s);
      wd.max_level_ = std::max(wd.max_level_, q.level);
    } else {
      if (q.level >= 60) throw NumericalError("dyadic refinement exceeded 60 levels");
      if (over) {
        for (int k = 3; k >= 0; --k) stack.push_back({-1, q.child(k)});
        continue;
      }
      const int first = static_cast<int>(wd.qtree_.size());
      wd.qtree_[static_cast<std::size_t>(node)].first_child = first;
      wd.qtree_.resize(wd.qtree_.size() + 4);
      for (int k = 3; k >= 0; --k) stack.push_back({first + k, q.child(k)});
    }
  }
  if (over) {
    throw CapacityError("Whitney decomposition needs " + std::string(leaves > abandon ? "more than " : "") +
                            std::to_string(leaves) + " squares; the cap is " + std::to_string(opts.max_squares),
                        leaves);
  }
  auto [off, idx] = wd.build_neighbors(opts.exec);
  wd.nbr_offset_ = std::move(off);
  wd.nbr_index_ = std::move(idx);
  return wd;
}

template <class F>
void WhitneyDecomposition::for_each_touching(const Rect& r, F&& f) const {
  // Every leaf below a node A has its 1.1-dilate inside A widened by
  // 0.05 delta_A, so nodes whose widened region misses r are pruned.
  struct Item {
    int node;
    DyadicSquare q;
  };
  Item stack[4 * 64];
  int top = 0;
  stack[top++] = {0, DyadicSquare{}};
  while (top > 0) {
    const Item it = stack[--top];
    const QNode& n = qtree_[static_cast<std::size_t>(it.node)];
    if (n.leaf >= 0) {
      if (it.q.dilate(1.1).intersects(r)) f(n.leaf);
      continue;
    }
    if (!it.q.closure().expanded((0.05 + kDilateTol) * it.q.side()).intersects(r)) continue;
    for (int k = 3; k >= 0; --k) stack[top++] = {n.first_child + k, it.q.child(k)};
  }
}

std::pair<std::vector<std::int64_t>, std::vector<int>> WhitneyDecomposition::build_neighbors(Exec exec) const {
  const auto n = static_cast<std::int64_t>(squares_.size());
  std::vector<std::int64_t> offset(static_cast<std::size_t>(n) + 1, 0);
  auto count_one = [this, &offset](std::int64_t i) {
    std::int64_t c = 0;
    for_each_touching(squares_[static_cast<std::size_t>(i)].sq.dilate(1.1), [&c](int) { ++c; });
    offset[static_cast<std::size_t>(i) + 1] = c;
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 512)
    for (std::int64_t i = 0; i < n; ++i) count_one(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) count_one(i);
  }
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) offset[i + 1] += offset[i];
  std::vector<int> index(static_cast<std::size_t>(offset.back()));
  auto fill_one = [this, &offset, &index](std::int64_t i) {
    auto pos = offset[static_cast<std::size_t>(i)];
    const auto begin = pos;
    for_each_touching(squares_[static_cast<std::size_t>(i)].sq.dilate(1.1),
                      [&](int j) { index[static_cast<std::size_t>(pos++)] = j; });
    std::sort(index.begin() + begin, index.begin() + pos);
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 512)
    for (std::int64_t i = 0; i < n; ++i) fill_one(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) fill_one(i);
  }
  return {std::move(offset), std::move(index)};
}

int WhitneyDecomposition::locate(Point x) const {
  if (!(x.x1 >= kQ0Lo && x.x1 < kQ0Lo + kQ0Side && x.x2 >= kQ0Lo && x.x2 < kQ0Lo + kQ0Side)) return -1;
  int node = 0;
  DyadicSquare q;
  while (qtree_[static_cast<std::size_t>(node)].leaf < 0) {
    const double h = 0.5 * q.side();
    const int k = (x.x1 >= q.lo1() + h ? 1 : 0) + (x.x2 >= q.lo2() + h ? 2 : 0);
    node = qtree_[static_cast<std::size_t>(node)].first_child + k;
    q = q.child(k);
  }
  return qtree_[static_cast<std::size_t>(node)].leaf;
}

int WhitneyDecomposition::find(const DyadicSquare& target) const {
  if (target.level < 0 || target.level > max_level_) return -1;
  const std::int64_t lim = std::int64_t{1} << target.level;
  if (target.ix < 0 || target.iy < 0 || target.ix >= lim || target.iy >= lim) return -1;
  int node = 0;
  for (int l = 0; l < target.level; ++l) {
    const QNode& n = qtree_[static_cast<std::size_t>(node)];
    if (n.leaf >= 0) return -1;
    const int shift = target.level - l - 1;
    const int k = static_cast<int>((target.ix >> shift) & 1) + 2 * static_cast<int>((target.iy >> shift) & 1);
    node = n.first_child + k;
  }
  return qtree_[static_cast<std::size_t>(node)].leaf;
}

void WhitneyDecomposition::pou_terms(Point x, int containing, std::vector<PouTerm>& out, int order) const {
  out.clear();
  Jet2 sum;
  for (int j : neighbors(static_cast<std::size_t>(containing))) {
    const Jet2 b = bump(squares_[static_cast<std::size_t>(j)].sq, x);
    if (b.value == 0.0 && b.grad[0] == 0.0 && b.grad[1] == 0.0) continue;
    out.push_back({j, b});
    sum.value += b.value;
    for (int k = 0; k < 2; ++k) sum.grad[k] += b.grad[k];
    for (int k = 0; k < 3; ++k) sum.hess[k] += b.hess[k];
  }
  // theta = psi / S with quotient-rule derivatives.
  const double inv = 1.0 / sum.value;
  for (auto& t : out) {
    const Jet2 b = t.theta;
    Jet2 th;
    th.value = b.value * inv;
    if (order >= 1) {
      th.grad = {(b.grad[0] - th.value * sum.grad[0]) * inv, (b.grad[1] - th.value * sum.grad[1]) * inv};
    }
    if (order >= 2) {
      th.hess[0] = (b.hess[0] - 2.0 * th.grad[0] * sum.grad[0] - th.value * sum.hess[0]) * inv;
      th.hess[1] =
          (b.hess[1] - th.grad[0] * sum.grad[1] - th.grad[1] * sum.grad[0] - th.value * sum.hess[1]) * inv;
      th.hess[2] = (b.hess[2] - 2.0 * th.grad[1] * sum.grad[1] - th.value * sum.hess[2]) * inv;
    }
    t.theta = th;
  }
}

Jet2 WhitneyDecomposition::pou_eval(std::size_t q, Point x, int order) const {
  const int c = locate(x);
  if (c < 0) throw InputError("point outside Q0");
  std::vector<PouTerm> terms;
  pou_terms(x, c, terms, order);
  for (const auto& t : terms)
    if (static_cast<std::size_t>(t.square) == q) return t.theta;
  return {};
}

double dist_rect_e1(const PlanarSet& ps, const Rect& r) {
  const double dy = std::max({0.0, r.lo2, -r.hi2});
  const auto [a, b] = ps.e1_range({r.lo1, r.hi1, 0.0, 0.0});
  double dx = 0.0;
  if (b < a) {
    const double l = ps.e1_x(ps.nearest_e1_index({r.lo1, 0.0}));
    const double h = ps.e1_x(ps.nearest_e1_index({r.hi1, 0.0}));
    auto gap = [&r](double g) { return std::max({0.0, r.lo1 - g, g - r.hi1}); };
    dx = std::min(gap(l), gap(h));
  }
  return std::hypot(dx, dy);
}

double dist_rect_e2(const PlanarSet& ps, const Rect& r) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& x : ps.e2()) d = std::min(d, distance(r, x));
  return d;
}

WhitneyReport verify_whitney(const WhitneyDecomposition& wd, const PlanarSet& ps, double k0_dilate,
                             std::size_t pou_samples) {
  WhitneyReport rep;
  const auto& sq = wd.squares();
  rep.squares = sq.size();
  rep.max_level = wd.max_level();
  const double inf = std::numeric_limits<double>::infinity();
  rep.min_side_over_delta = inf;
  rep.type3_ratio_min = inf;
  rep.dist_bd_min = inf;
  rep.basepoint_gap_min = inf;

  // Partition: areas add up exactly and no square lies inside another.
  using u128 = unsigned __int128;
  u128 area = 0;
  std::unordered_set<DyadicSquare, KeyHash> keys;
  keys.reserve(sq.size() * 2);
  for (const auto& s : sq) {
    area += u128{1} << (2 * (rep.max_level - s.sq.level));
    keys.insert(s.sq);
  }
  if (area != (u128{1} << (2 * rep.max_level)) || keys.size() != sq.size()) rep.partition_exact = false;
  for (const auto& s : sq) {
    for (DyadicSquare a = s.sq; a.level > 0 && rep.partition_exact;) {
      a = a.parent();
      if (keys.contains(a)) rep.partition_exact = false;
    }
  }

  const double delta = ps.delta();
  std::vector<PouTerm> terms;
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const WhitneySquare& s = sq[i];
    const double side = s.sq.side();
    ++rep.type_count[static_cast<int>(s.type)];
    if (s.boundary) {
      ++rep.boundary_count;
      if (side < 1.0) rep.boundary_side = false;
      if (s.type != SquareType::III) rep.boundary_type = false;
    }
    rep.min_side_over_delta = std::min(rep.min_side_over_delta, side / delta);
    if (side < delta / 20.0) rep.min_side = false;

    const Rect r11 = s.sq.dilate(1.1);
    if (ps.count_e1(r11) + ps.count_e2(r11, 2) > 1) rep.cz1 = false;
    if (s.sq.level == 0) {
      rep.cz1 = false;
    } else {
      const Rect r3 = s.sq.parent().dilate(3.0);
      if (ps.count_e1(r3) + ps.count_e2(r3, 2) < 2) rep.cz1 = false;
    }

    const auto nb = wd.neighbors(i);
    rep.max_neighbors = std::max(rep.max_neighbors, static_cast<int>(nb.size()) - 1);
    bool self = false;
    for (int j : nb) {
      if (static_cast<std::size_t>(j) == i) {
        self = true;
        continue;
      }
      const auto& o = sq[static_cast<std::size_t>(j)].sq;
      if (std::abs(o.level - s.sq.level) > 1 || !closures_touch(o, s.sq)) rep.cz2 = false;
      const auto back = wd.neighbors(static_cast<std::size_t>(j));
      if (!std::binary_search(back.begin(), back.end(), static_cast<int>(i))) rep.neighbors_symmetric = false;
    }
    if (!self) rep.neighbors_symmetric = false;

    // Cover multiplicity sampled at the centre and near the corners.
    const Point c = s.sq.center();
    const double h = 0.5 * side * (1.0 - 1e-9);
    for (const Point x : {c, Point{c.x1 - h, c.x2 - h}, Point{c.x1 + h, c.x2 - h}, Point{c.x1 - h, c.x2 + h},
                          Point{c.x1 + h, c.x2 + h}}) {
      int m = 0;
      for (int j : nb) m += sq[static_cast<std::size_t>(j)].sq.dilate(1.1).contains(x) ? 1 : 0;
      rep.max_multiplicity = std::max(rep.max_multiplicity, m);
    }

    const double d1 = dist_rect_e1(ps, s.sq.closure());
    rep.dist_bd_min = std::min(rep.dist_bd_min, side / (delta + d1));
    rep.dist_bd_max = std::max(rep.dist_bd_max, side / (delta + d1));
    if (s.type == SquareType::III && !s.boundary) {
      const double d = std::min(d1, dist_rect_e2(ps, s.sq.closure()));
      rep.type3_ratio_min = std::min(rep.type3_ratio_min, side / d);
      rep.type3_ratio_max = std::max(rep.type3_ratio_max, side / d);
    }

    for (std::int64_t k : {s.z, s.w}) {
      const Point p = ps.e1_point(k);
      const double kk = 2.0 * std::max(std::abs(p.x1 - c.x1), std::abs(p.x2 - c.x2)) / side;
      rep.basepoint_k0_max = std::max(rep.basepoint_k0_max, kk);
    }
    const double gap = std::abs(ps.e1_x(s.z) - ps.e1_x(s.w)) / side;
    rep.basepoint_gap_min = std::min(rep.basepoint_gap_min, gap);
    rep.basepoint_gap_max = std::max(rep.basepoint_gap_max, gap);
  }
  rep.basepoints_in_k0q = rep.basepoint_k0_max <= k0_dilate * (1.0 + kDilateTol);

  // POU derivative bounds on an evenly spread sample of squares.
  if (!sq.empty() && pou_samples > 0) {
    const std::size_t stride = std::max<std::size_t>(1, sq.size() / pou_samples);
    for (std::size_t i = 0; i < sq.size(); i += stride) {
      const auto& s = sq[i].sq;
      const double side = s.side();
      const Point c = s.center();
      for (int a = 0; a < 9; ++a) {
        for (int b = 0; b < 9; ++b) {
          const Point x{c.x1 + side * 0.55 * (a - 4) / 4.0 * 0.999, c.x2 + side * 0.55 * (b - 4) / 4.0 * 0.999};
          const int at = wd.locate(x);
          if (at < 0) continue;
          wd.pou_terms(x, at, terms);
          for (const auto& t : terms) {
            if (static_cast<std::size_t>(t.square) != i) continue;
            rep.pou_deriv_max[0] = std::max(rep.pou_deriv_max[0], std::abs(t.theta.value));
            rep.pou_deriv_max[1] = std::max(rep.pou_deriv_max[1], side * std::hypot(t.theta.grad[0], t.theta.grad[1]));
            rep.pou_deriv_max[2] = std::max(rep.pou_deriv_max[2], side * side * hessian_norm(t.theta));
          }
        }
      }
    }
  }
  return rep;
}

}  // namespace sobext
