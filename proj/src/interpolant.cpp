#include "sobext/interpolant.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "sobext/errors.hpp"

namespace sobext {

AffinePolynomial affine_through(Point p1, Point p2, Point p3, double v1, double v2, double v3) {
  // Solve in coordinates relative to p1 by Cramer's rule.
  const double u1 = p2.x1 - p1.x1, u2 = p2.x2 - p1.x2;
  const double w1 = p3.x1 - p1.x1, w2 = p3.x2 - p1.x2;
  const double det = u1 * w2 - u2 * w1;
  const double scale = std::max({u1 * u1 + u2 * u2, w1 * w1 + w2 * w2, (w1 - u1) * (w1 - u1) + (w2 - u2) * (w2 - u2)});
  if (!(std::abs(det) > 1e-14 * scale)) throw InputError("affine_through: points are colinear");
  const double d2 = v2 - v1, d3 = v3 - v1;
  const double b = (d2 * w2 - d3 * u2) / det;
  const double c = (u1 * d3 - w1 * d2) / det;
  return {v1 - b * p1.x1 - c * p1.x2, b, c};
}

AffinePolynomial horizontal_affine(Point z, Point w, double fz, double fw) {
  if (z.x1 == w.x1) throw InputError("horizontal_affine: coincident first coordinates");
  const double b = (fz - fw) / (z.x1 - w.x1);
  return {fz - b * z.x1, b, 0.0};
}

double sup_norm(const AffinePolynomial& p, const DyadicSquare& q) {
  const Rect r = q.closure();
  double m = 0.0;
  for (double a : {r.lo1, r.hi1})
    for (double b : {r.lo2, r.hi2}) m = std::max(m, std::abs(p({a, b})));
  return m;
}

Jet2 affine_jet(const AffinePolynomial& p, Point x) {
  Jet2 j;
  j.value = p(x);
  j.grad = {p.b, p.c};
  return j;
}

PatchedInterpolant::PatchedInterpolant(std::shared_ptr<const WhitneyDecomposition> wd,
                                       std::vector<AffinePolynomial> pieces, AffinePolynomial tail)
    : wd_(std::move(wd)), pieces_(std::move(pieces)), tail_(tail) {
  if (pieces_.size() != wd_->size()) throw InputError("one piece per Whitney square is required");
}

bool PatchedInterpolant::locally_affine(std::size_t q) const {
  for (int j : wd_->neighbors(q))
    if (!(pieces_[static_cast<std::size_t>(j)] == pieces_[q])) return false;
  return true;
}

Jet2 PatchedInterpolant::evaluate(Point x, int order) const {
  const int q = wd_->locate(x);
  if (q < 0) return affine_jet(tail_, x);
  return evaluate_in(static_cast<std::size_t>(q), x, order);
}

Jet2 PatchedInterpolant::evaluate_in(std::size_t q, Point x, int order) const {
  const AffinePolynomial& ref = pieces_[q];
  Jet2 out = affine_jet(ref, x);
  if (locally_affine(q)) return out;
  thread_local std::vector<PouTerm> terms;
  wd_->pou_terms(x, static_cast<int>(q), terms, order);
  for (const auto& t : terms) {
    const AffinePolynomial d = pieces_[static_cast<std::size_t>(t.square)] - ref;
    if (d.a == 0.0 && d.b == 0.0 && d.c == 0.0) continue;
    const double dv = d(x);
    const auto& th = t.theta;
    out.value += th.value * dv;
    if (order >= 1) {
      out.grad[0] += th.grad[0] * dv + th.value * d.b;
      out.grad[1] += th.grad[1] * dv + th.value * d.c;
    }
    if (order >= 2) {
      out.hess[0] += th.hess[0] * dv + 2.0 * th.grad[0] * d.b;
      out.hess[1] += th.hess[1] * dv + th.grad[0] * d.c + th.grad[1] * d.b;
      out.hess[2] += th.hess[2] * dv + 2.0 * th.grad[1] * d.c;
    }
  }
  return out;
}

double patching_sum(const PatchedInterpolant& f, double p, Exec exec) { return patching_sum_over(f, {}, p, exec); }

double patching_sum_over(const PatchedInterpolant& f, std::span<const std::size_t> squares, double p, Exec exec) {
  const auto& wd = f.decomposition();
  const bool all = squares.empty();
  const auto n = static_cast<std::int64_t>(all ? wd.size() : squares.size());
  double total = 0.0;
  auto one = [&](std::int64_t i) {
    const std::size_t q = all ? static_cast<std::size_t>(i) : squares[static_cast<std::size_t>(i)];
    const auto& sq = wd.square(q).sq;
    const double scale = std::pow(sq.side(), 2.0 - 2.0 * p);
    double s = 0.0;
    for (int j : wd.neighbors(q)) {
      if (static_cast<std::size_t>(j) == q) continue;
      const double m = sup_norm(f.pieces()[q] - f.pieces()[static_cast<std::size_t>(j)], sq);
      if (m > 0.0) s += std::pow(m, p) * scale;
    }
    return s;
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static) reduction(+ : total)
    for (std::int64_t i = 0; i < n; ++i) total += one(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) total += one(i);
  }
  return total;
}

void write_samples_csv(std::ostream& os, const PatchedInterpolant& f, const Rect& r, int nx, int ny) {
  os << "x1,x2,F,d1F,d2F\n";
  os.precision(17);
  for (int j = 0; j < ny; ++j) {
    const double x2 = ny > 1 ? r.lo2 + (r.hi2 - r.lo2) * j / (ny - 1) : r.lo2;
    for (int i = 0; i < nx; ++i) {
      const double x1 = nx > 1 ? r.lo1 + (r.hi1 - r.lo1) * i / (nx - 1) : r.lo1;
      const Jet2 v = f.evaluate({x1, x2}, 1);
      os << x1 << ',' << x2 << ',' << v.value << ',' << v.grad[0] << ',' << v.grad[1] << '\n';
    }
  }
}

}  // namespace sobext
