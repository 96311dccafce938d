#include "sobext/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sobext/errors.hpp"

namespace sobext {

bool VerifyReport::exact_ok() const { return failures().empty(); }

bool VerifyReport::constants_ok() const {
  if (psi.k_measured > 10.0 || whitney.max_neighbors > 12) return false;
  for (const auto& e : exponents)
    if (e.patching.spread() >= 3.0) return false;
  return true;
}

std::vector<std::string> VerifyReport::failures() const {
  std::vector<std::string> out;
  auto need = [&](bool ok, const char* what) {
    if (!ok) out.emplace_back(what);
  };
  need(tree_violations.empty(), "tree invariants");
  need(psi.order_preserving, "psi order preservation");
  need(sep.inside_box, "separation part 1 (E in the unit box)");
  need(sep.separated && sep.height_bounds, "separation part 2 (Delta separation, height bounds)");
  need(sep.e2_spacing, "separation part 3 (E2 spacing)");
  need(whitney.partition_exact, "Whitney partition");
  need(whitney.cz1, "Whitney part 1 (1.1Q and 3Q counts)");
  need(whitney.cz2, "Whitney part 2 (neighbour sizes)");
  need(whitney.neighbors_symmetric, "Whitney neighbour symmetry");
  need(whitney.min_side, "Whitney lower side bound");
  need(whitney.boundary_side, "boundary squares have side >= 1");
  need(whitney.boundary_type, "boundary squares are Type III");
  need(balls.mirrors_tree, "clusters mirror the tree");
  need(balls.b1, "(B1)");
  need(balls.b2, "(B2)");
  need(balls.b3, "(B3)");
  need(balls.b4, "(B4)");
  need(balls.b5, "(B5)");
  need(balls.b6, "(B6)");
  need(balls.q0_in_root_ball, "Q0 inside the root ball");
  need(cluster_lemma.a_violations == 0, "cluster lemma (A)");
  need(cluster_lemma.b_violations == 0, "cluster lemma (B)");
  need(cluster_lemma.c_violations == 0, "cluster lemma (C)");
  need(cluster_lemma.ambiguous == 0, "cluster map well defined");
  return out;
}

std::vector<std::size_t> sample_squares(std::size_t total, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count >= total) return idx;
  Rng rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<double> patching_constants(const PatchedInterpolant& f, const std::vector<std::size_t>& squares,
                                       const std::vector<double>& ps, const QuadOptions& quad) {
  const auto r = planar_seminorms_over(f, squares, ps, quad);
  std::vector<double> out(ps.size(), 0.0);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const double rhs = patching_sum_over(f, squares, ps[k], quad.exec);
    out[k] = rhs > 0.0 ? std::pow(r[k].value, ps[k]) / rhs : 0.0;
  }
  return out;
}

namespace {

RangeStat range_of(const std::vector<double>& v) {
  if (v.empty()) return {};
  const auto [a, b] = std::minmax_element(v.begin(), v.end());
  return {*a, *b};
}

}  // namespace

VerifyReport verify_instance(const Instance& inst, const VerifyOptions& opts) {
  VerifyReport rep;
  rep.tree_violations = validate(inst.tree);
  rep.psi = verify_lemma_psi(inst.tree, inst.ps);
  rep.sep = verify_lemma_sep(inst.ps);
  rep.whitney = verify_whitney(*inst.wd, inst.ps, inst.ct.k0());
  rep.balls = inst.ct.ball_report();
  rep.k1 = inst.ct.k1();
  const PairSets pairs = pair_sets(inst.ct, *inst.wd, inst.as);
  rep.cluster_lemma = verify_cluster_lemma(inst.ct, *inst.wd, inst.as, pairs);

  const std::size_t np = opts.ps.size();
  rep.exponents.resize(np);
  for (std::size_t k = 0; k < np; ++k) {
    rep.exponents[k].p = opts.ps[k];
    const auto rc = pair_ratios(inst.ct, *inst.wd, pairs, opts.ps[k]);
    rep.exponents[k].max_pair_ratio = rc.empty() ? 0.0 : *std::max_element(rc.begin(), rc.end());
  }

  // Patching constant over random affine families.
  const auto& wd = *inst.wd;
  const auto sample = sample_squares(wd.size(), opts.patching_squares, opts.seed);
  std::vector<std::vector<double>> cmeas(np);
  for (int fam = 0; fam < opts.patching_families; ++fam) {
    Rng rng = Rng::derived(opts.seed, static_cast<std::uint64_t>(fam));
    const AffinePolynomial tail{rng.normal(), rng.normal(), rng.normal()};
    std::vector<AffinePolynomial> pieces(wd.size());
    for (std::size_t q = 0; q < wd.size(); ++q)
      pieces[q] = wd.square(q).boundary ? tail : AffinePolynomial{rng.normal(), rng.normal(), rng.normal()};
    const PatchedInterpolant F(inst.wd, std::move(pieces), tail);
    const auto c = patching_constants(F, sample, opts.ps, opts.quad);
    for (std::size_t k = 0; k < np; ++k) cmeas[k].push_back(c[k]);
  }

  // Ball estimate against the seminorm of G over the root ball.
  const auto& root = inst.ct.cluster(inst.ct.root());
  std::vector<std::vector<double>> best(np);
  for (int g = 0; g < opts.ball_fields; ++g) {
    Rng rng = Rng::derived(opts.seed + 1, static_cast<std::uint64_t>(g));
    const GaussianField G = random_gaussian_field(rng, 5, {0.0, 2.0, 0.0, 1.0}, 0.2, 1.0);
    const Field field = [&G](Point x, int order) { return G(x, order); };
    for (std::size_t k = 0; k < np; ++k) {
      const auto s = ball_estimate_sums(inst.ct, inst.ps, field, opts.ps[k], opts.ball.rings, opts.ball.angles);
      const double norm = disk_hessian_integral(field, root.y, root.radius, opts.ps[k], 256, 1024);
      best[k].push_back(norm > 0.0 ? (s.sum1 + s.sum2) / norm : 0.0);
    }
  }
  for (std::size_t k = 0; k < np; ++k) {
    rep.exponents[k].patching = range_of(cmeas[k]);
    rep.exponents[k].ball_estimate = range_of(best[k]);
  }
  return rep;
}

}  // namespace sobext
