#include "sobext/analysis.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sobext/errors.hpp"

namespace sobext {

GaussRule gauss_legendre(int n) {
  if (n < 1) throw InputError("Gauss-Legendre order must be positive");
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n));
  if (t == nullptr) throw NumericalError("cannot build Gauss-Legendre table");
  GaussRule r;
  r.x.resize(static_cast<std::size_t>(n));
  r.w.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) gsl_integration_glfixed_point(-1.0, 1.0, i, &r.x[i], &r.w[i], t);
  gsl_integration_glfixed_table_free(t);
  return r;
}

namespace {

// Sorted breakpoints of the bumps overlapping [lo, hi] along one axis.
void axis_breaks(const WhitneyDecomposition& wd, std::size_t q, int axis, std::vector<double>& out) {
  const auto& sq = wd.square(q).sq;
  const double lo = axis == 0 ? sq.lo1() : sq.lo2();
  const double hi = lo + sq.side();
  const double eps = 1e-12 * sq.side();
  out.clear();
  out.push_back(lo);
  out.push_back(hi);
  for (int j : wd.neighbors(q)) {
    const auto& o = wd.square(static_cast<std::size_t>(j)).sq;
    const double c = axis == 0 ? o.center().x1 : o.center().x2;
    for (double h : {0.5, 0.55})
      for (double sgn : {-1.0, 1.0}) {
        const double b = c + sgn * h * o.side();
        if (b > lo + eps && b < hi - eps) out.push_back(b);
      }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [eps](double a, double b) { return b - a <= eps; }), out.end());
}

// True if every partition function alive on the panel carries the same piece.
bool panel_affine(const PatchedInterpolant& f, std::size_t q, Point mid) {
  thread_local std::vector<PouTerm> terms;
  f.decomposition().pou_terms(mid, static_cast<int>(q), terms, 0);
  const auto& pieces = f.pieces();
  for (const auto& t : terms)
    if (!(pieces[static_cast<std::size_t>(t.square)] == pieces[q])) return false;
  return true;
}

struct SquareSums {
  std::vector<double> coarse, fine;
  std::size_t panels = 0;
};

void integrate_square(const PatchedInterpolant& f, std::size_t q, const std::vector<double>& ps, const GaussRule& gc,
                      const GaussRule& gf, SquareSums& acc) {
  thread_local std::vector<double> b1, b2;
  const auto& wd = f.decomposition();
  axis_breaks(wd, q, 0, b1);
  axis_breaks(wd, q, 1, b2);
  const std::size_t np = ps.size();
  for (std::size_t i = 0; i + 1 < b1.size(); ++i) {
    const double a1 = b1[i], h1 = 0.5 * (b1[i + 1] - b1[i]), m1 = a1 + h1;
    for (std::size_t j = 0; j + 1 < b2.size(); ++j) {
      const double a2 = b2[j], h2 = 0.5 * (b2[j + 1] - b2[j]), m2 = a2 + h2;
      if (panel_affine(f, q, {m1, m2})) continue;
      ++acc.panels;
      const double jac = h1 * h2;
      auto run = [&](const GaussRule& g, std::vector<double>& sums) {
        for (std::size_t u = 0; u < g.x.size(); ++u)
          for (std::size_t v = 0; v < g.x.size(); ++v) {
            const Point x{m1 + h1 * g.x[u], m2 + h2 * g.x[v]};
            const double h = hessian_norm(f.evaluate_in(q, x, 2));
            if (h == 0.0) continue;
            const double w = g.w[u] * g.w[v] * jac;
            for (std::size_t k = 0; k < np; ++k) sums[k] += w * std::pow(h, ps[k]);
          }
      };
      run(gc, acc.coarse);
      run(gf, acc.fine);
    }
  }
}

}  // namespace

std::vector<SeminormResult> planar_seminorms(const PatchedInterpolant& f, const std::vector<double>& ps,
                                             const QuadOptions& opts, SeminormStats* stats) {
  return planar_seminorms_over(f, {}, ps, opts, stats);
}

std::vector<SeminormResult> planar_seminorms_over(const PatchedInterpolant& f, std::span<const std::size_t> squares,
                                                  const std::vector<double>& ps, const QuadOptions& opts,
                                                  SeminormStats* stats) {
  if (opts.order < 4) throw InputError("quadrature order must be at least 4");
  for (double p : ps)
    if (!(p >= 1.0)) throw InputError("seminorm exponent must be at least 1");
  const GaussRule gc = gauss_legendre(opts.order);
  const GaussRule gf = gauss_legendre(2 * opts.order);
  const auto& wd = f.decomposition();
  for (std::size_t q : squares)
    if (q >= wd.size()) throw InputError("square index out of range");
  const bool all = squares.empty();
  const auto n = static_cast<std::int64_t>(all ? wd.size() : squares.size());
  const std::size_t np = ps.size();
  std::vector<double> coarse(np, 0.0), fine(np, 0.0);
  std::size_t integrated = 0, panels = 0;

  auto body = [&](SquareSums& acc, std::size_t& sq_count, std::int64_t i) {
    const std::size_t q = all ? static_cast<std::size_t>(i) : squares[static_cast<std::size_t>(i)];
    if (f.locally_affine(q)) return;
    ++sq_count;
    integrate_square(f, q, ps, gc, gf, acc);
  };
  auto merge = [&](const SquareSums& acc, std::size_t sq_count) {
    for (std::size_t k = 0; k < np; ++k) {
      coarse[k] += acc.coarse[k];
      fine[k] += acc.fine[k];
    }
    integrated += sq_count;
    panels += acc.panels;
  };
  if (opts.exec == Exec::Parallel) {
#pragma omp parallel
    {
      SquareSums acc{std::vector<double>(np, 0.0), std::vector<double>(np, 0.0)};
      std::size_t sq_count = 0;
#pragma omp for schedule(dynamic, 256) nowait
      for (std::int64_t i = 0; i < n; ++i) body(acc, sq_count, i);
#pragma omp critical
      merge(acc, sq_count);
    }
  } else {
    SquareSums acc{std::vector<double>(np, 0.0), std::vector<double>(np, 0.0)};
    std::size_t sq_count = 0;
    for (std::int64_t i = 0; i < n; ++i) body(acc, sq_count, i);
    merge(acc, sq_count);
  }

  std::vector<SeminormResult> out(np);
  for (std::size_t k = 0; k < np; ++k) {
    auto& r = out[k];
    r.p = ps[k];
    r.value = std::pow(fine[k], 1.0 / ps[k]);
    r.coarse = std::pow(coarse[k], 1.0 / ps[k]);
    r.error_estimate = std::abs(r.value - r.coarse);
    r.within_tol = r.error_estimate <= opts.refine_tol * r.value;
  }
  if (stats != nullptr) *stats = {integrated, panels};
  return out;
}

SeminormResult planar_seminorm(const PatchedInterpolant& f, double p, const QuadOptions& opts) {
  return planar_seminorms(f, {p}, opts).front();
}

double rect_hessian_integral(const Field& f, const Rect& r, double p, int order) {
  const GaussRule g = gauss_legendre(order);
  const double h1 = 0.5 * r.width(), h2 = 0.5 * r.height();
  const Point m = r.center();
  double s = 0.0;
  for (std::size_t u = 0; u < g.x.size(); ++u)
    for (std::size_t v = 0; v < g.x.size(); ++v) {
      const double h = hessian_norm(f({m.x1 + h1 * g.x[u], m.x2 + h2 * g.x[v]}, 2));
      if (h > 0.0) s += g.w[u] * g.w[v] * std::pow(h, p);
    }
  return s * h1 * h2;
}

Field as_field(const PatchedInterpolant& f) {
  return [&f](Point x, int order) { return f.evaluate(x, order); };
}

namespace {

template <class G>
double disk_sum(Point center, double radius, int rings, int angles, G&& g) {
  if (rings < 4 || angles < 4) throw InputError("disk quadrature needs at least 4 rings and 4 angles");
  if (!(radius > 0.0)) throw InputError("disk radius must be positive");
  const GaussRule gr = gauss_legendre(rings);
  const double dt = 2.0 * std::numbers::pi / angles;
  double total = 0.0;
  for (std::size_t i = 0; i < gr.x.size(); ++i) {
    const double rho = 0.5 * radius * (1.0 + gr.x[i]);
    const double wr = 0.5 * radius * gr.w[i] * rho * dt;
    double ring = 0.0;
    for (int k = 0; k < angles; ++k) {
      const double t = (k + 0.5) * dt;
      ring += g(Point{center.x1 + rho * std::cos(t), center.x2 + rho * std::sin(t)});
    }
    total += wr * ring;
  }
  return total;
}

}  // namespace

double ball_average(const Field& f, Point center, double radius, int deriv, int rings, int angles) {
  if (deriv != 1 && deriv != 2) throw InputError("ball_average: derivative index must be 1 or 2");
  const std::size_t k = static_cast<std::size_t>(deriv - 1);
  const double s = disk_sum(center, radius, rings, angles, [&](Point x) { return f(x, 1).grad[k]; });
  return s / (std::numbers::pi * radius * radius);
}

double disk_hessian_integral(const Field& f, Point center, double radius, double p, int rings, int angles) {
  return disk_sum(center, radius, rings, angles, [&](Point x) {
    const double h = hessian_norm(f(x, 2));
    return h == 0.0 ? 0.0 : std::pow(h, p);
  });
}

BallEstimateSums ball_estimate_sums(const ClusterTree& ct, const PlanarSet& ps, const Field& g, double p, int rings,
                                    int angles) {
  const auto n = static_cast<std::int64_t>(ct.size());
  std::vector<double> avg(ct.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t c = 0; c < n; ++c) {
    const auto& cl = ct.cluster(static_cast<int>(c));
    avg[static_cast<std::size_t>(c)] = ball_average(g, cl.y, cl.radius, 2, rings, angles);
  }
  BallEstimateSums s;
  for (std::size_t c = 1; c < ct.size(); ++c) {
    const auto& cl = ct.cluster(static_cast<int>(c));
    s.sum1 += std::pow(std::abs(avg[c] - avg[static_cast<std::size_t>(cl.parent)]), p) * std::pow(cl.weight, 2.0 - p);
  }
  for (std::size_t i = 0; i < ps.e2_count(); ++i) {
    const Point x = ps.e2()[i];
    const E2Anchor an = e2_anchor(ps, i);
    const Point z = ps.e1_point(an.z), w = ps.e1_point(an.w);
    const AffinePolynomial t = affine_through(x, z, w, g(x, 0).value, g(z, 0).value, g(w, 0).value);
    const auto c = static_cast<std::size_t>(ct.leaf_cluster(i));
    s.sum2 += std::pow(std::abs(t.c - avg[c]), p) * std::pow(ct.cluster(static_cast<int>(c)).weight, 2.0 - p);
  }
  return s;
}

VerticalFieldQuadrature::VerticalFieldQuadrature(std::shared_ptr<const WhitneyDecomposition> wd,
                                                 std::vector<int> labels, int n_labels, int outside_label,
                                                 const QuadOptions& opts)
    : wd_(std::move(wd)), labels_(std::move(labels)), n_labels_(n_labels), outside_(outside_label), opts_(opts) {
  if (!wd_) throw InputError("no decomposition");
  if (labels_.size() != wd_->size()) throw InputError("one label per square is required");
  for (int l : labels_)
    if (l < 0 || l >= n_labels_) throw InputError("square label out of range");
  if (outside_ < 0 || outside_ >= n_labels_) throw InputError("outside label out of range");
  if (opts_.order < 4) throw InputError("quadrature order must be at least 4");
  const WhitneyDecomposition& wd_ref = *wd_;
  const GaussRule gc = gauss_legendre(opts_.order);
  const GaussRule gf = gauss_legendre(2 * opts_.order);

  // Squares whose neighbours carry more than one label.
  std::vector<std::size_t> active;
  for (std::size_t q = 0; q < wd_ref.size(); ++q)
    for (int j : wd_ref.neighbors(q))
      if (labels_[static_cast<std::size_t>(j)] != labels_[q]) {
        active.push_back(q);
        break;
      }
  squares_.resize(active.size());
  active_ = active;

  std::size_t panels = 0;
  const auto na = static_cast<std::int64_t>(active.size());
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : panels)
  for (std::int64_t k = 0; k < na; ++k) {
    const std::size_t q = active[static_cast<std::size_t>(k)];
    const int ref = labels_[q];
    thread_local std::vector<double> b1, b2;
    thread_local std::vector<PouTerm> terms;
    axis_breaks(wd_ref, q, 0, b1);
    axis_breaks(wd_ref, q, 1, b2);
    SquareData& sd = squares_[static_cast<std::size_t>(k)];
    for (Rule* r : {&sd.coarse, &sd.fine}) r->off.push_back(0);
    for (std::size_t i = 0; i + 1 < b1.size(); ++i) {
      const double h1 = 0.5 * (b1[i + 1] - b1[i]), m1 = b1[i] + h1;
      for (std::size_t j = 0; j + 1 < b2.size(); ++j) {
        const double h2 = 0.5 * (b2[j + 1] - b2[j]), m2 = b2[j] + h2;
        wd_ref.pou_terms({m1, m2}, static_cast<int>(q), terms, 0);
        bool mixed = false;
        for (const auto& t : terms) mixed = mixed || labels_[static_cast<std::size_t>(t.square)] != ref;
        if (!mixed) continue;
        ++panels;
        const double jac = h1 * h2;
        auto run = [&](const GaussRule& g, Rule& r) {
          for (std::size_t u = 0; u < g.x.size(); ++u)
            for (std::size_t v = 0; v < g.x.size(); ++v) {
              const Point x{m1 + h1 * g.x[u], m2 + h2 * g.x[v]};
              wd_ref.pou_terms(x, static_cast<int>(q), terms, 2);
              const std::size_t start = r.label.size();
              for (const auto& t : terms) {
                const int l = labels_[static_cast<std::size_t>(t.square)];
                if (l == ref) continue;
                // Hessian of x2 theta.
                const Jet2& th = t.theta;
                const std::array<double, 3> h{x.x2 * th.hess[0], th.grad[0] + x.x2 * th.hess[1],
                                              2.0 * th.grad[1] + x.x2 * th.hess[2]};
                std::size_t e = start;
                while (e < r.label.size() && r.label[e] != l) ++e;
                if (e == r.label.size()) {
                  r.label.push_back(l);
                  r.hess.push_back(h);
                } else {
                  for (int c = 0; c < 3; ++c) r.hess[e][c] += h[c];
                }
              }
              if (r.label.size() == start) continue;
              r.w.push_back(g.w[u] * g.w[v] * jac);
              r.off.push_back(static_cast<std::uint32_t>(r.label.size()));
            }
        };
        run(gc, sd.coarse);
        run(gf, sd.fine);
      }
    }
  }
  stats_ = {active.size(), panels};
}

std::size_t VerticalFieldQuadrature::stored_points() const {
  std::size_t n = 0;
  for (const auto& sd : squares_) n += sd.coarse.w.size() + sd.fine.w.size();
  return n;
}

std::vector<SeminormResult> VerticalFieldQuadrature::seminorms(const std::vector<double>& c,
                                                               const std::vector<double>& ps) const {
  if (c.size() != static_cast<std::size_t>(n_labels_)) throw InputError("one coefficient per label is required");
  for (double p : ps)
    if (!(p >= 1.0)) throw InputError("seminorm exponent must be at least 1");
  const std::size_t np = ps.size();
  std::vector<double> coarse(np, 0.0), fine(np, 0.0);
  auto rule_sum = [&](const Rule& r, double cref, std::vector<double>& acc) {
    for (std::size_t k = 0; k < r.w.size(); ++k) {
      double h0 = 0.0, h1 = 0.0, h2 = 0.0;
      for (std::uint32_t e = r.off[k]; e < r.off[k + 1]; ++e) {
        const double a = c[static_cast<std::size_t>(r.label[e])] - cref;
        h0 += a * r.hess[e][0];
        h1 += a * r.hess[e][1];
        h2 += a * r.hess[e][2];
      }
      const double h = std::sqrt(h0 * h0 + 2.0 * h1 * h1 + h2 * h2);
      if (h == 0.0) continue;
      for (std::size_t j = 0; j < np; ++j) acc[j] += r.w[k] * std::pow(h, ps[j]);
    }
  };
  const auto n = static_cast<std::int64_t>(squares_.size());
  auto one = [&](std::int64_t k, std::vector<double>& ac, std::vector<double>& af) {
    const double cref = c[static_cast<std::size_t>(labels_[active_[static_cast<std::size_t>(k)]])];
    rule_sum(squares_[static_cast<std::size_t>(k)].coarse, cref, ac);
    rule_sum(squares_[static_cast<std::size_t>(k)].fine, cref, af);
  };
  if (opts_.exec == Exec::Parallel) {
#pragma omp parallel
    {
      std::vector<double> ac(np, 0.0), af(np, 0.0);
#pragma omp for schedule(dynamic, 64) nowait
      for (std::int64_t k = 0; k < n; ++k) one(k, ac, af);
#pragma omp critical
      for (std::size_t j = 0; j < np; ++j) {
        coarse[j] += ac[j];
        fine[j] += af[j];
      }
    }
  } else {
    for (std::int64_t k = 0; k < n; ++k) one(k, coarse, fine);
  }
  std::vector<SeminormResult> out(np);
  for (std::size_t j = 0; j < np; ++j) {
    auto& r = out[j];
    r.p = ps[j];
    r.value = std::pow(fine[j], 1.0 / ps[j]);
    r.coarse = std::pow(coarse[j], 1.0 / ps[j]);
    r.error_estimate = std::abs(r.value - r.coarse);
    r.within_tol = r.error_estimate <= opts_.refine_tol * r.value;
  }
  return out;
}

std::vector<double> VerticalFieldQuadrature::ball_average_weights(Point center, double radius, int rings,
                                                                  int angles) const {
  std::vector<double> a(static_cast<std::size_t>(n_labels_), 0.0);
  thread_local std::vector<PouTerm> terms;
  // d2 (x2 sum theta_Q c_Q) = sum_Q c_Q (theta_Q + x2 d2 theta_Q); the disk
  // rule is linear, so accumulate per label.
  if (rings < 4 || angles < 4) throw InputError("disk quadrature needs at least 4 rings and 4 angles");
  if (!(radius > 0.0)) throw InputError("disk radius must be positive");
  const GaussRule gr = gauss_legendre(rings);
  const double dt = 2.0 * std::numbers::pi / angles;
  for (std::size_t i = 0; i < gr.x.size(); ++i) {
    const double rho = 0.5 * radius * (1.0 + gr.x[i]);
    const double wr = 0.5 * radius * gr.w[i] * rho * dt;
    for (int k = 0; k < angles; ++k) {
      const double t = (k + 0.5) * dt;
      const Point x{center.x1 + rho * std::cos(t), center.x2 + rho * std::sin(t)};
      const int q = wd_->locate(x);
      if (q < 0) {
        a[static_cast<std::size_t>(outside_)] += wr;
        continue;
      }
      wd_->pou_terms(x, q, terms, 1);
      for (const auto& term : terms)
        a[static_cast<std::size_t>(labels_[static_cast<std::size_t>(term.square)])] +=
            wr * (term.theta.value + x.x2 * term.theta.grad[1]);
    }
  }
  const double area = std::numbers::pi * radius * radius;
  for (auto& v : a) v /= area;
  return a;
}

Jet2 GaussianField::operator()(Point x, int order) const {
  Jet2 j;
  for (const auto& b : bumps) {
    const double d1 = x.x1 - b.c.x1, d2 = x.x2 - b.c.x2;
    const double is2 = 1.0 / (b.s * b.s);
    const double g = b.a * std::exp(-0.5 * (d1 * d1 + d2 * d2) * is2);
    j.value += g;
    if (order >= 1) {
      j.grad[0] -= d1 * is2 * g;
      j.grad[1] -= d2 * is2 * g;
    }
    if (order >= 2) {
      j.hess[0] += (d1 * d1 * is2 - 1.0) * is2 * g;
      j.hess[1] += d1 * d2 * is2 * is2 * g;
      j.hess[2] += (d2 * d2 * is2 - 1.0) * is2 * g;
    }
  }
  return j;
}

GaussianField random_gaussian_field(Rng& rng, int n, const Rect& r, double s_lo, double s_hi) {
  GaussianField f;
  for (int i = 0; i < n; ++i) {
    GaussianField::Bump b;
    b.c = {rng.uniform(r.lo1, r.hi1), rng.uniform(r.lo2, r.hi2)};
    b.s = rng.uniform(s_lo, s_hi);
    b.a = rng.normal();
    f.bumps.push_back(b);
  }
  return f;
}

}  // namespace sobext
