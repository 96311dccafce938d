#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sobext/analysis.hpp"
#include "sobext/errors.hpp"

using namespace sobext;

namespace {

struct Fixture {
  WeightedTree tree;
  PlanarSet ps;
  std::shared_ptr<const WhitneyDecomposition> wd;
};

Fixture make_fixture(int arity, int depth, double eps, std::uint64_t seed) {
  Fixture f{random_tree({.arity = arity, .depth = depth, .epsilon = eps}, seed), {}, nullptr};
  f.ps = PlanarSet::build(f.tree);
  f.wd = std::make_shared<const WhitneyDecomposition>(WhitneyDecomposition::decompose(f.ps));
  return f;
}

// Labels 0 / 1 by which side of x1 = 1 the square centre lies on, 2 on the
// boundary of Q0. Only squares near the interface carry a nonzero Hessian.
std::vector<int> side_labels(const WhitneyDecomposition& wd) {
  std::vector<int> l(wd.size());
  for (std::size_t q = 0; q < wd.size(); ++q) {
    const auto& s = wd.square(q);
    l[q] = s.boundary ? 2 : (s.sq.center().x1 < 1.0 ? 0 : 1);
  }
  return l;
}

PatchedInterpolant labelled(const Fixture& f, const std::vector<int>& labels, const std::vector<AffinePolynomial>& by_label) {
  std::vector<AffinePolynomial> pieces(labels.size());
  for (std::size_t q = 0; q < labels.size(); ++q) pieces[q] = by_label[static_cast<std::size_t>(labels[q])];
  return PatchedInterpolant(f.wd, std::move(pieces), by_label[2]);
}

const Fixture& small() {
  static const Fixture f = make_fixture(2, 1, 0.05, 11);
  return f;
}

}  // namespace

TEST_CASE("Gauss-Legendre rule") {
  for (int n : {4, 12, 24}) {
    const GaussRule g = gauss_legendre(n);
    double w = 0.0, m = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      w += g.w[i];
      m += g.w[i] * std::pow(g.x[i], 2 * n - 2);
    }
    CHECK(w == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(m == doctest::Approx(2.0 / (2 * n - 1)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(gauss_legendre(0), InputError);
}

TEST_CASE("Hessian integral of x1^2 x2^2 on the unit square") {
  const Field f = [](Point x, int) {
    Jet2 j;
    j.hess = {2 * x.x2 * x.x2, 4 * x.x1 * x.x2, 2 * x.x1 * x.x1};
    return j;
  };
  CHECK(rect_hessian_integral(f, {0, 1, 0, 1}, 2.0, 6) == doctest::Approx(232.0 / 45.0).epsilon(1e-13));
}

TEST_CASE("planar seminorm of affine pieces is zero") {
  const auto& f = small();
  const AffinePolynomial a{1.0, -2.0, 0.5};
  const PatchedInterpolant F(f.wd, std::vector<AffinePolynomial>(f.wd->size(), a), a);
  SeminormStats st;
  const auto r = planar_seminorms(F, {1.5, 2.0}, {}, &st);
  CHECK(r[0].value <= 1e-10);
  CHECK(r[1].value <= 1e-10);
  CHECK(st.squares_integrated == 0);
}

TEST_CASE("planar seminorm homogeneity and affine invariance") {
  const auto& f = small();
  const auto labels = side_labels(*f.wd);
  const std::vector<AffinePolynomial> base{{0.2, 1.0, -0.3}, {-0.4, 0.5, 0.7}, {0.1, 0.0, 0.2}};
  const PatchedInterpolant F = labelled(f, labels, base);
  const double v = planar_seminorm(F, 1.5).value;
  CHECK(v > 0.0);

  std::vector<AffinePolynomial> scaled, shifted;
  const AffinePolynomial g{3.0, -7.0, 11.0};
  for (const auto& b : base) {
    scaled.push_back(b * -2.5);
    shifted.push_back(b + g);
  }
  CHECK(planar_seminorm(labelled(f, labels, scaled), 1.5).value == doctest::Approx(2.5 * v).epsilon(1e-10));
  CHECK(planar_seminorm(labelled(f, labels, shifted), 1.5).value == doctest::Approx(v).epsilon(1e-10));
}

TEST_CASE("planar seminorm serial and parallel agree") {
  const auto& f = small();
  const auto labels = side_labels(*f.wd);
  const PatchedInterpolant F = labelled(f, labels, {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  SeminormStats a, b;
  const auto s = planar_seminorms(F, {1.25, 1.75}, {.exec = Exec::Serial}, &a);
  const auto p = planar_seminorms(F, {1.25, 1.75}, {.exec = Exec::Parallel}, &b);
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(p[k].value == doctest::Approx(s[k].value).epsilon(1e-12));
  CHECK(a.squares_integrated == b.squares_integrated);
  CHECK(a.panels == b.panels);
}

TEST_CASE("quadrature discrepancy shrinks as the order doubles") {
  const auto& f = small();
  const auto labels = side_labels(*f.wd);
  const PatchedInterpolant F = labelled(f, labels, {{0, 0, 1}, {0, 0, -1}, {0, 0, 0.5}});
  for (double p : {1.25, 1.5, 1.75}) {
    const double e4 = planar_seminorm(F, p, {.order = 4}).error_estimate;
    const double e8 = planar_seminorm(F, p, {.order = 8}).error_estimate;
    const auto r12 = planar_seminorm(F, p, {.order = 12});
    CHECK(e8 < e4);
    CHECK(r12.error_estimate <= 0.01 * r12.value);
    CHECK(r12.within_tol);
  }
}

TEST_CASE("planar seminorm input checks") {
  const auto& f = small();
  const PatchedInterpolant F(f.wd, std::vector<AffinePolynomial>(f.wd->size()), {});
  CHECK_THROWS_AS(planar_seminorm(F, 0.5), InputError);
  CHECK_THROWS_AS(planar_seminorm(F, 1.5, {.order = 2}), InputError);
}

TEST_CASE("vertical field quadrature matches the generic path") {
  const auto f = make_fixture(3, 1, 0.03, 12);
  const auto labels = side_labels(*f.wd);
  const VerticalFieldQuadrature vq(f.wd, labels, 3, 2);
  const std::vector<double> ps{1.25, 1.5, 2.0};
  for (const std::vector<double>& c : {std::vector<double>{1.0, -0.5, 0.25}, std::vector<double>{0.0, 2.0, 2.0}}) {
    const PatchedInterpolant F = labelled(f, labels, {{0, 0, c[0]}, {0, 0, c[1]}, {0, 0, c[2]}});
    SeminormStats st;
    const auto direct = planar_seminorms(F, ps, {}, &st);
    const auto fast = vq.seminorms(c, ps);
    for (std::size_t k = 0; k < ps.size(); ++k) {
      CHECK(fast[k].value == doctest::Approx(direct[k].value).epsilon(1e-11));
      CHECK(fast[k].coarse == doctest::Approx(direct[k].coarse).epsilon(1e-11));
    }
    const Field field = as_field(F);
    for (Point y : {Point{1.0, 0.0}, Point{0.5, 0.3}, Point{1.9, -0.7}}) {
      for (double r : {0.05, 0.4, 6.0}) {
        const auto a = vq.ball_average_weights(y, r, 16, 64);
        double lin = 0.0;
        for (std::size_t l = 0; l < 3; ++l) lin += a[l] * c[l];
        CHECK(lin == doctest::Approx(ball_average(field, y, r, 2, 16, 64)).epsilon(1e-11));
      }
    }
  }
  CHECK(vq.stats().squares_integrated > 0);
  CHECK_THROWS_AS(vq.seminorms({1.0}, ps), InputError);
  CHECK_THROWS_AS(VerticalFieldQuadrature(f.wd, {0, 1}, 3, 2), InputError);
}

TEST_CASE("ball averages of simple fields") {
  const Field x2 = [](Point, int) {
    Jet2 j;
    j.grad = {0.0, 1.0};
    return j;
  };
  const Field x1x2 = [](Point x, int) {
    Jet2 j;
    j.value = x.x1 * x.x2;
    j.grad = {x.x2, x.x1};
    return j;
  };
  Rng rng(21);
  for (int k = 0; k < 10; ++k) {
    const Point c{rng.normal(), rng.normal()};
    const double r = rng.uniform(0.01, 3.0);
    CHECK(ball_average(x2, c, r, 2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ball_average(x1x2, c, r, 2, 4, 4) == doctest::Approx(c.x1).epsilon(1e-12).scale(1.0));
    CHECK(ball_average(x1x2, c, r, 1, 8, 16) == doctest::Approx(c.x2).epsilon(1e-12).scale(1.0));
  }
  CHECK_THROWS_AS(ball_average(x2, {0, 0}, 1.0, 3), InputError);
  CHECK_THROWS_AS(ball_average(x2, {0, 0}, 1.0, 2, 3, 8), InputError);
  CHECK_THROWS_AS(ball_average(x2, {0, 0}, 0.0, 2), InputError);
}

TEST_CASE("ball average of an affine interpolant is exact") {
  const auto& f = small();
  const AffinePolynomial a{0.7, -1.1, 2.3};
  const PatchedInterpolant F(f.wd, std::vector<AffinePolynomial>(f.wd->size(), a), a);
  const Field field = as_field(F);
  Rng rng(22);
  for (int k = 0; k < 5; ++k) {
    const Point c{rng.uniform(-1, 3), rng.uniform(-1, 1)};
    const double r = rng.uniform(0.01, 4.0);
    const int rings = 4 + static_cast<int>(rng.below(10)), angles = 4 + static_cast<int>(rng.below(30));
    CHECK(std::abs(ball_average(field, c, r, 2, rings, angles) - 2.3) <= 1e-12 * 2.3);
    CHECK(std::abs(ball_average(field, c, r, 1, rings, angles) + 1.1) <= 1e-12 * 1.1);
  }
}

TEST_CASE("ball average agrees with Monte Carlo") {
  const auto& f = small();
  const auto labels = side_labels(*f.wd);
  const PatchedInterpolant F = labelled(f, labels, {{0, 0.3, 1.0}, {0.2, -0.1, 2.0}, {0, 0, 1.5}});
  const Field field = as_field(F);
  const Point c{1.0, 0.02};
  const double r = 0.3;
  Rng rng(23);
  double sum = 0.0;
  const int n = 1'000'000;
  for (int k = 0; k < n;) {
    const double u = rng.uniform(-1, 1), v = rng.uniform(-1, 1);
    if (u * u + v * v > 1.0) continue;
    sum += F.evaluate({c.x1 + r * u, c.x2 + r * v}, 1).grad[1];
    ++k;
  }
  const double mc = sum / n;
  const double quad = ball_average(field, c, r, 2);
  CHECK(std::abs(quad - mc) <= 5e-3 * std::abs(mc));
}

TEST_CASE("disk Hessian integral of a quadratic") {
  const Field q = [](Point, int) {
    Jet2 j;
    j.hess = {2.0, 0.0, 0.0};
    return j;
  };
  CHECK(disk_hessian_integral(q, {0.3, 0.1}, 0.7, 1.5) ==
        doctest::Approx(std::pow(2.0, 1.5) * std::numbers::pi * 0.49).epsilon(1e-12));
}

TEST_CASE("ball estimate sums") {
  const auto t = random_tree({.arity = 2, .depth = 2, .epsilon = 0.002}, 5);
  const auto ps = PlanarSet::build(t);
  const auto ct = ClusterTree::build(t, ps);

  const Field affine = [](Point x, int) {
    Jet2 j;
    j.value = 1.0 + 2.0 * x.x1 - 3.0 * x.x2;
    j.grad = {2.0, -3.0};
    return j;
  };
  const auto s0 = ball_estimate_sums(ct, ps, affine, 1.5);
  CHECK(s0.sum1 <= 1e-12);
  CHECK(s0.sum2 <= 1e-12);

  // G = x2^2: the ball average of d2 G = 2 x2 is twice the centre height,
  // and the jet at a leaf point x has slope x2 along the vertical.
  const Field sq = [](Point x, int) {
    Jet2 j;
    j.value = x.x2 * x.x2;
    j.grad = {0.0, 2.0 * x.x2};
    j.hess = {0.0, 0.0, 2.0};
    return j;
  };
  const double p = 1.5;
  double sum1 = 0.0, sum2 = 0.0;
  for (std::size_t v = 0; v < t.size(); ++v) {
    const auto& n = t.node(static_cast<NodeIndex>(v));
    if (n.parent < 0) continue;
    const double h = ps.e2()[static_cast<std::size_t>(n.first_leaf)].x2;
    const double hp = ps.e2()[static_cast<std::size_t>(t.node(n.parent).first_leaf)].x2;
    sum1 += std::pow(std::abs(2 * h - 2 * hp), p) * std::pow(n.weight, 2 - p);
  }
  for (const auto& x : ps.e2()) sum2 += x.x2 * x.x2;
  const auto s = ball_estimate_sums(ct, ps, sq, p);
  CHECK(s.sum1 == doctest::Approx(sum1).epsilon(1e-9));
  CHECK(s.sum2 == doctest::Approx(sum2).epsilon(1e-9));
}

TEST_CASE("Gaussian field derivatives") {
  Rng rng(24);
  const GaussianField g = random_gaussian_field(rng, 5, {0, 2, -1, 1}, 0.1, 0.5);
  const double h = 1e-5;
  for (int k = 0; k < 50; ++k) {
    const Point x{rng.uniform(0, 2), rng.uniform(-1, 1)};
    const Jet2 j = g(x);
    const Jet2 a = g({x.x1 + h, x.x2}), b = g({x.x1 - h, x.x2});
    const Jet2 c = g({x.x1, x.x2 + h}), d = g({x.x1, x.x2 - h});
    CHECK(j.grad[0] == doctest::Approx((a.value - b.value) / (2 * h)).epsilon(1e-6).scale(1.0));
    CHECK(j.grad[1] == doctest::Approx((c.value - d.value) / (2 * h)).epsilon(1e-6).scale(1.0));
    CHECK(j.hess[0] == doctest::Approx((a.grad[0] - b.grad[0]) / (2 * h)).epsilon(1e-5).scale(1.0));
    CHECK(j.hess[1] == doctest::Approx((c.grad[0] - d.grad[0]) / (2 * h)).epsilon(1e-5).scale(1.0));
    CHECK(j.hess[2] == doctest::Approx((c.grad[1] - d.grad[1]) / (2 * h)).epsilon(1e-5).scale(1.0));
  }
}
