#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "sobext/errors.hpp"
#include "sobext/rng.hpp"
#include "sobext/tree_extension.hpp"
#include "support/tree_oracles.hpp"

using namespace sobext;
using oracle::dense_harmonic;
using oracle::small_trees;
using oracle::star3;

namespace {

// Independent 1-D oracle.
template <class F>
double golden_min(F f, double a, double b) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < 200; ++i) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (f(c) < f(d)) b = d; else a = c;
  }
  return 0.5 * (a + b);
}

LeafFunction random_leaves(const WeightedTree& t, Rng& rng) {
  LeafFunction phi{std::vector<double>(t.leaf_count())};
  for (double& v : phi.values) v = rng.normal();
  return phi;
}

}  // namespace

TEST_CASE("constant data extends to the constant") {
  auto t = perfect_tree(3, 2, 0.01);
  LeafFunction phi{std::vector<double>(t.leaf_count(), 2.5)};
  for (const auto& f : {optimal_extension(t, phi, 1.5), harmonic_extension_p2(t, phi), averaging_extension(t, phi),
                        brute_force_extension(perfect_tree(2, 1, 0.01), LeafFunction{{2.5, 2.5}}, 1.5, 1.0, 10)})
    for (double v : f.values) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(trace_seminorm(t, phi, 1.5) == 0.0);
  CHECK(trace_seminorm(t, LeafFunction{std::vector<double>(t.leaf_count(), 0.0)}, 1.25) == 0.0);
}

TEST_CASE("harmonic p=2 examples") {
  auto t = perfect_tree(2, 1, 0.01);
  auto f = harmonic_extension_p2(t, LeafFunction{{0.0, 1.0}});
  CHECK(f[0] == doctest::Approx(0.5).epsilon(1e-14));

  auto d2 = perfect_tree(2, 2, 0.01);
  auto g = harmonic_extension_p2(d2, LeafFunction{{0.0, 0.0, 1.0, 1.0}});
  CHECK(g[d2.index_of("")] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(g[d2.index_of("0")] == doctest::Approx(1.0 / 6.0).epsilon(1e-13));
  CHECK(g[d2.index_of("1")] == doctest::Approx(5.0 / 6.0).epsilon(1e-13));
  auto dense = dense_harmonic(d2, LeafFunction{{0.0, 0.0, 1.0, 1.0}});
  for (std::size_t i = 0; i < d2.size(); ++i) CHECK(g.values[i] == doctest::Approx(dense.values[i]).epsilon(1e-13));
}

TEST_CASE("harmonic p=2 matches dense solve on random trees") {
  Rng rng(3);
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto t = random_tree({.arity = 3, .depth = 4, .epsilon = 0.1, .early_leaf_probability = 0.3}, s);
    auto phi = random_leaves(t, rng);
    auto a = harmonic_extension_p2(t, phi);
    auto b = dense_harmonic(t, phi);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-11));
  }
}

TEST_CASE("optimal extension at p=2 matches the linear solve") {
  Rng rng(5);
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto t = random_tree({.arity = 3, .depth = 3, .epsilon = 0.02, .early_leaf_probability = 0.3}, s);
    auto phi = random_leaves(t, rng);
    auto a = optimal_extension(t, phi, 2.0);
    auto b = harmonic_extension_p2(t, phi);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(a.values[i] - b.values[i]) <= 1e-8);
  }
}

TEST_CASE("star tree against a golden-section oracle") {
  auto t = star3(0.2);
  const double p = 1.5;
  LeafFunction phi{{0.0, 0.0, 3.0}};
  SolveReport rep;
  auto f = optimal_extension(t, phi, p, {}, &rep);
  auto obj = [p](double x) { return 2.0 * std::pow(std::abs(x), p) + std::pow(std::abs(3.0 - x), p); };
  const double oracle = golden_min(obj, 0.0, 3.0);
  CHECK(f[0] == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(f[0] == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(rep.converged);
  const double expected = std::pow(obj(oracle) * std::pow(0.2, 2.0 - p), 1.0 / p);
  CHECK(trace_seminorm(t, phi, p) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("leaves are fixed exactly") {
  Rng rng(9);
  auto t = random_tree({.arity = 3, .depth = 3, .epsilon = 0.01}, 4);
  auto phi = random_leaves(t, rng);
  for (double p : {1.25, 1.5, 1.75}) {
    auto f = optimal_extension(t, phi, p);
    for (std::size_t i = 0; i < t.leaf_count(); ++i) CHECK(f[t.leaves()[i]] == phi[i]);
  }
}

TEST_CASE("single edge: the root absorbs the value") {
  auto t = WeightedTree::build(2, 0.5, {{"", 1.0}, {"0", 0.25}});
  CHECK(trace_seminorm(t, LeafFunction{{4.0}}, 1.5) == 0.0);
}

TEST_CASE("optimal extension beats brute force on small trees") {
  Rng rng(21);
  for (const auto& t : small_trees()) {
    for (double p : {1.25, 1.5, 1.75}) {
      auto phi = random_leaves(t, rng);
      const double opt = tree_energy(t, optimal_extension(t, phi, p), p);
      const double brute = tree_energy(t, brute_force_extension(t, phi, p, 0.5, 20), p);
      CHECK(opt <= brute + 1e-3);
      CHECK(brute <= opt + 1e-3);
    }
  }
}

TEST_CASE("brute force at p=2 matches the linear solve within grid resolution") {
  auto t = perfect_tree(2, 2, 0.05);
  LeafFunction phi{{0.3, -1.0, 2.0, 0.5}};
  auto a = brute_force_extension(t, phi, 2.0, 0.5, 20);
  auto b = harmonic_extension_p2(t, phi);
  for (NodeIndex v : t.interior()) CHECK(std::abs(a[v] - b[v]) < 5e-3);
  CHECK_THROWS_AS(brute_force_extension(perfect_tree(2, 3, 0.05), LeafFunction{std::vector<double>(8, 0.0)}, 1.5, 1, 4),
                  InputError);
}

TEST_CASE("trace seminorm lower-bounds every extension") {
  Rng rng(8);
  for (std::uint64_t s = 0; s < 15; ++s) {
    auto t = random_tree({.arity = 3, .depth = 3, .epsilon = 0.02, .early_leaf_probability = 0.2}, s);
    auto phi = random_leaves(t, rng);
    for (double p : {1.25, 1.5, 1.75}) {
      const double tr = trace_seminorm(t, phi, p);
      CHECK(tr <= seminorm_tree(t, averaging_extension(t, phi), p) * (1.0 + 1e-10));
      for (int k = 0; k < 5; ++k) {
        NodeFunction f = optimal_extension(t, phi, p);
        for (NodeIndex v : t.interior()) f[v] += 0.1 * rng.normal();
        CHECK(tr <= seminorm_tree(t, f, p) * (1.0 + 1e-10));
      }
    }
  }
}

TEST_CASE("minimiser is continuous as p approaches 2") {
  Rng rng(2);
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto t = random_tree({.arity = 2, .depth = 3, .epsilon = 0.02}, s);
    auto phi = random_leaves(t, rng);
    const auto [mn, mx] = std::minmax_element(phi.values.begin(), phi.values.end());
    auto near = optimal_extension(t, phi, 1.999);
    auto at2 = harmonic_extension_p2(t, phi);
    for (NodeIndex v : t.interior()) CHECK(std::abs(near[v] - at2[v]) <= 0.01 * (*mx - *mn));
    // Same point, same exponent: the p=1.999 minimiser can only do better.
    CHECK(tree_energy(t, near, 1.999) <= tree_energy(t, at2, 1.999) * (1.0 + 1e-12));
  }
}

TEST_CASE("averaging extension") {
  auto t = perfect_tree(2, 1, 0.01);
  CHECK(averaging_extension(t, LeafFunction{{0.0, 1.0}})[0] == 0.5);
  Rng rng(4);
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto tr = random_tree({.arity = 3, .depth = 3, .epsilon = 0.02, .early_leaf_probability = 0.3}, s);
    auto f1 = random_leaves(tr, rng), f2 = random_leaves(tr, rng);
    const double a = rng.normal(), b = rng.normal();
    LeafFunction mix{std::vector<double>(tr.leaf_count())};
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * f1[i] + b * f2[i];
    auto e1 = averaging_extension(tr, f1), e2 = averaging_extension(tr, f2), em = averaging_extension(tr, mix);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const double lin = a * e1.values[i] + b * e2.values[i];
      CHECK(std::abs(em.values[i] - lin) <= 1e-14 * std::max(1.0, std::abs(lin)) * 10);
    }
  }
}

TEST_CASE("operator norm estimates") {
  auto t = random_tree({.arity = 3, .depth = 2, .epsilon = 0.02}, 7);
  const double p = 1.5;
  auto opt = make_tree_backend(TreeBackend::Optimal, p);
  auto avg = make_tree_backend(TreeBackend::Averaging, p);
  auto e_opt = estimate_operator_norm(t, opt, p, 6, 99, 4);
  CHECK(e_opt.value <= 1.0 + 1e-8);
  CHECK(e_opt.value >= 1.0 - 1e-8);
  auto small = estimate_operator_norm(t, avg, p, 3, 99, 4);
  auto large = estimate_operator_norm(t, avg, p, 6, 99, 4);
  CHECK(large.value >= small.value);
  CHECK(small.value >= 1.0 - 1e-10);
  auto again = estimate_operator_norm(t, avg, p, 6, 99, 4);
  CHECK(again.value == large.value);

  // Two leaves of equal weight: the mean is the optimal root value.
  auto sym = perfect_tree(2, 1, 0.01);
  CHECK(estimate_operator_norm(sym, avg, p, 5, 1, 3).value == doctest::Approx(1.0).epsilon(1e-9));
  // A single edge has a fully degenerate trace space.
  auto edge = WeightedTree::build(2, 0.5, {{"", 1.0}, {"0", 0.25}});
  auto deg = estimate_operator_norm(edge, avg, p, 4, 1, 2);
  CHECK(deg.value == 1.0);
  CHECK(deg.valid_samples == 0);
  CHECK(deg.skipped == 4);
}

TEST_CASE("backend names") {
  CHECK(tree_backend_from_string("optimal") == TreeBackend::Optimal);
  CHECK(to_string(TreeBackend::Averaging) == "averaging");
  CHECK_THROWS_AS(tree_backend_from_string("magic"), InputError);
}
