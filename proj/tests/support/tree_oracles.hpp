#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "sobext/tree.hpp"
#include "sobext/tree_extension.hpp"

namespace sobext::oracle {

// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= m * a[k][j];
      b[i] -= m * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= a[k][j] * x[j];
    x[k] = s / a[k][k];
  }
  return x;
}

// Normal equations of sum (Phi(v) - Phi(parent))^2 assembled densely.
inline NodeFunction dense_harmonic(const WeightedTree& t, const LeafFunction& phi) {
  NodeFunction out = with_leaf_values(t, phi);
  auto interior = t.interior();
  std::vector<int> slot(t.size(), -1);
  for (std::size_t i = 0; i < interior.size(); ++i) slot[static_cast<std::size_t>(interior[i])] = static_cast<int>(i);
  const std::size_t n = interior.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  for (std::size_t v = 1; v < t.size(); ++v) {
    const int sv = slot[v];
    const int sp = slot[static_cast<std::size_t>(t.parent(static_cast<NodeIndex>(v)))];
    if (sv >= 0) a[sv][sv] += 1.0;
    if (sp >= 0) a[sp][sp] += 1.0;
    if (sv >= 0 && sp >= 0) {
      a[sv][sp] -= 1.0;
      a[sp][sv] -= 1.0;
    }
    if (sv < 0 && sp >= 0) b[sp] += out[static_cast<NodeIndex>(v)];
  }
  auto x = dense_solve(a, b);
  for (std::size_t i = 0; i < n; ++i) out[interior[i]] = x[i];
  return out;
}

inline WeightedTree star3(double w) { return WeightedTree::build(3, 0.5, {{"", 1.0}, {"0", w}, {"1", w}, {"2", w}}); }

// Trees with at most 4 interior nodes.
inline std::vector<WeightedTree> small_trees() {
  std::vector<WeightedTree> out;
  out.push_back(star3(0.2));
  out.push_back(perfect_tree(2, 2, 0.05));
  out.push_back(WeightedTree::build(3, 0.1, {{"", 1.0}, {"0", 0.1}, {"1", 0.04}, {"00", 0.002}, {"01", 0.01},
                                             {"02", 0.005}, {"10", 0.004}, {"12", 0.001}}));
  for (std::uint64_t s = 0; s < 6; ++s) {
    auto t = random_tree({.arity = 3, .depth = 2, .epsilon = 0.02, .early_leaf_probability = 0.4}, s);
    if (t.interior().size() <= 4) out.push_back(t);
  }
  return out;
}

}  // namespace sobext::oracle
