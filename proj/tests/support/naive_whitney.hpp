#pragma once

#include <map>
#include <tuple>
#include <vector>

#include "sobext/embedding.hpp"
#include "sobext/whitney.hpp"

namespace sobext::oracle {

using SquareKey = std::tuple<int, std::int64_t, std::int64_t>;

// Materialises E and recurses with brute-force counting.
struct NaiveWhitney {
  std::vector<Point> e1, e2;
  std::map<SquareKey, SquareType> out;

  int count(const Rect& r, const std::vector<Point>& pts) const {
    int n = 0;
    for (const auto& p : pts) n += r.contains(p) ? 1 : 0;
    return n;
  }

  void run(const DyadicSquare& q) {
    const Rect r3 = q.dilate(3.0);
    if (count(r3, e1) + count(r3, e2) <= 1) {
      const Rect r = q.dilate(1.1);
      SquareType t = SquareType::III;
      if (count(r, e1) == 1) t = SquareType::I;
      else if (count(r, e2) == 1) t = SquareType::II;
      out[{q.level, q.ix, q.iy}] = t;
      return;
    }
    for (int k = 0; k < 4; ++k) run(q.child(k));
  }
};

inline NaiveWhitney naive_whitney(const PlanarSet& ps) {
  NaiveWhitney n;
  for (std::int64_t k = 0; k < ps.e1_count(); ++k) n.e1.push_back(ps.e1_point(k));
  n.e2 = ps.e2();
  n.run(DyadicSquare{});
  return n;
}

// Same squares and types as the naive enumerator.
inline bool matches_naive(const WhitneyDecomposition& wd, const PlanarSet& ps) {
  const NaiveWhitney ref = naive_whitney(ps);
  if (ref.out.size() != wd.size()) return false;
  for (const auto& s : wd.squares()) {
    const auto it = ref.out.find({s.sq.level, s.sq.ix, s.sq.iy});
    if (it == ref.out.end() || it->second != s.type) return false;
  }
  return true;
}

// Trees with Delta >= 1/64.
inline std::vector<WeightedTree> coarse_trees() {
  std::vector<WeightedTree> v;
  v.push_back(WeightedTree::build(2, 0.05, {{"", 1.0}, {"0", 0.03}, {"1", 0.02}}));
  v.push_back(WeightedTree::build(3, 0.1, {{"", 1.0}, {"0", 0.02}, {"1", 0.1}, {"2", 0.05}}));
  v.push_back(WeightedTree::build(2, 0.15, {{"", 1.0}, {"0", 0.15}, {"1", 0.12}, {"00", 0.0225}, {"01", 0.02}}));
  v.push_back(WeightedTree::build(3, 0.2, {{"", 1.0}, {"0", 0.2}, {"2", 0.16}, {"00", 0.03}, {"02", 0.025}, {"20", 0.02},
                                           {"21", 0.03}}));
  return v;
}

}  // namespace sobext::oracle
