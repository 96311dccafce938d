#include "sobext/operators.hpp"

#include <algorithm>
#include <cmath>

#include "sobext/errors.hpp"

namespace sobext {

double PlanarData::e1(std::int64_t k, const PlanarSet& ps) const {
  if (!e1_overrides.empty()) {
    auto it = e1_overrides.find(k);
    if (it != e1_overrides.end()) return it->second;
  }
  return e1_rule ? e1_rule(ps.e1_x(k)) : 0.0;
}

PlanarData PlanarData::from_affine(const AffinePolynomial& a, const PlanarSet& ps) {
  PlanarData f;
  f.e1_rule = [a](double x1) { return a(Point{x1, 0.0}); };
  for (const auto& x : ps.e2()) f.e2.push_back(a(x));
  return f;
}

PlanarData PlanarData::from_leaf_values(const LeafFunction& phi, const PlanarSet& ps) {
  if (phi.size() != ps.e2_count()) throw InputError("leaf data size differs from the number of leaves");
  PlanarData f;
  f.e2.resize(ps.e2_count());
  for (std::size_t i = 0; i < ps.e2_count(); ++i) f.e2[i] = phi[i] * ps.e2()[i].x2;
  return f;
}

Instance Instance::build(WeightedTree tree, const InstanceOptions& opts) {
  Instance inst{std::move(tree), {}, {}, {}, {}, {}};
  inst.ps = PlanarSet::build(inst.tree);
  inst.wd = std::make_shared<const WhitneyDecomposition>(WhitneyDecomposition::decompose(inst.ps, opts.whitney));
  inst.ct = ClusterTree::build(inst.tree, inst.ps, opts.clusters);
  inst.as = assign_clusters(inst.ct, *inst.wd, opts.whitney.exec);
  inst.anchors.reserve(inst.ps.e2_count());
  for (std::size_t i = 0; i < inst.ps.e2_count(); ++i) inst.anchors.push_back(e2_anchor(inst.ps, i));
  return inst;
}

std::vector<AffinePolynomial> e2_jets(const Instance& inst, const PlanarData& f) {
  const auto& ps = inst.ps;
  if (f.e2.size() != ps.e2_count()) throw InputError("planar data lacks values on E2");
  std::vector<AffinePolynomial> out(ps.e2_count());
  for (std::size_t i = 0; i < ps.e2_count(); ++i) {
    const auto& an = inst.anchors[i];
    out[i] = affine_through(ps.e2()[i], ps.e1_point(an.z), ps.e1_point(an.w), f.e2[i], f.e1(an.z, ps), f.e1(an.w, ps));
  }
  return out;
}

PatchedInterpolant planar_extend(const Instance& inst, const PlanarData& f, const TreeExtensionOp& backend) {
  const auto& ps = inst.ps;
  const auto jets = e2_jets(inst, f);
  LeafFunction phi;
  phi.values.resize(jets.size());
  for (std::size_t i = 0; i < jets.size(); ++i) phi[i] = jets[i].c;
  const NodeFunction Phi = backend(inst.tree, phi);

  const auto& wd = *inst.wd;
  const auto n = static_cast<std::int64_t>(wd.size());
  std::vector<AffinePolynomial> pieces(wd.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& s = wd.square(static_cast<std::size_t>(i));
    AffinePolynomial p = horizontal_affine(ps.e1_point(s.z), ps.e1_point(s.w), f.e1(s.z, ps), f.e1(s.w, ps));
    p.c = Phi[inst.as.cluster[static_cast<std::size_t>(i)]];
    pieces[static_cast<std::size_t>(i)] = p;
  }
  const std::int64_t w0 = ps.e1_count() - 1;
  AffinePolynomial tail = horizontal_affine(ps.e1_point(0), ps.e1_point(w0), f.e1(0, ps), f.e1(w0, ps));
  tail.c = Phi[inst.tree.root()];
  return PatchedInterpolant(inst.wd, std::move(pieces), tail);
}

PlanarExtensionOp make_planar_backend(const Instance& inst, TreeExtensionOp tree_backend) {
  return [&inst, tree_backend = std::move(tree_backend)](const PlanarData& f) {
    return planar_extend(inst, f, tree_backend);
  };
}

NodeFunction tree_extend_from_extension(const Instance& inst, const LeafFunction& phi, const PatchedInterpolant& F,
                                        const BallQuad& quad) {
  const auto& t = inst.tree;
  if (phi.size() != t.leaf_count()) throw InputError("leaf data size differs from the number of leaves");
  NodeFunction out = with_leaf_values(t, phi);
  const auto interior = t.interior();
  const auto n = static_cast<std::int64_t>(interior.size());
  const Field field = as_field(F);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < n; ++k) {
    const NodeIndex v = interior[static_cast<std::size_t>(k)];
    const auto& c = inst.ct.cluster(v);
    const double a = ball_average(field, c.y, c.radius, 2, quad.rings, quad.angles);
    out[v] = a;
  }
  for (NodeIndex v : interior)
    if (!std::isfinite(out[v]))
      throw NumericalError("ball average is not finite on cluster \"" + t.node(v).id + "\"");
  return out;
}

NodeFunction tree_extend_from_planar(const Instance& inst, const LeafFunction& phi, const PlanarExtensionOp& planar,
                                     const BallQuad& quad) {
  const PatchedInterpolant F = planar(PlanarData::from_leaf_values(phi, inst.ps));
  return tree_extend_from_extension(inst, phi, F, quad);
}

RestrictionCheck check_restriction(const Instance& inst, const PatchedInterpolant& F, const PlanarData& f,
                                   int e1_samples, std::uint64_t seed) {
  const auto& ps = inst.ps;
  std::vector<std::int64_t> ks{0, ps.e1_count() - 1};
  Rng rng(seed);
  for (int i = 0; i < e1_samples; ++i) ks.push_back(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(ps.e1_count()))));
  std::vector<double> e1v(ks.size());
  double scale = 0.0;
  for (double v : f.e2) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < ks.size(); ++i) {
    e1v[i] = f.e1(ks[i], ps);
    scale = std::max(scale, std::abs(e1v[i]));
  }
  if (scale == 0.0) scale = 1.0;
  RestrictionCheck rc;
  for (std::size_t i = 0; i < ps.e2_count(); ++i) {
    const double d = std::abs(F.evaluate(ps.e2()[i], 0).value - f.e2[i]);
    rc.max_rel_e2 = std::max(rc.max_rel_e2, d / std::max(std::abs(f.e2[i]), scale));
  }
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double d = std::abs(F.evaluate(ps.e1_point(ks[i]), 0).value - e1v[i]);
    rc.max_rel_e1 = std::max(rc.max_rel_e1, d / std::max(std::abs(e1v[i]), scale));
  }
  return rc;
}

ExperimentEngine::ExperimentEngine(const Instance& inst, const QuadOptions& quad, const BallQuad& ball)
    : inst_(&inst),
      vq_(inst.wd, inst.as.cluster, static_cast<int>(inst.tree.size()), inst.tree.root(), quad) {
  const auto interior = inst.tree.interior();
  ball_rows_.resize(inst.tree.size());
  const auto n = static_cast<std::int64_t>(interior.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < n; ++k) {
    const NodeIndex v = interior[static_cast<std::size_t>(k)];
    const auto& c = inst.ct.cluster(v);
    ball_rows_[static_cast<std::size_t>(v)] = vq_.ball_average_weights(c.y, c.radius, ball.rings, ball.angles);
  }
}

std::vector<SeminormResult> ExperimentEngine::plane_seminorms(const NodeFunction& Phi,
                                                              const std::vector<double>& ps) const {
  return vq_.seminorms(Phi.values, ps);
}

NodeFunction ExperimentEngine::tree_values(const LeafFunction& phi, const NodeFunction& Phi) const {
  const auto& t = inst_->tree;
  if (phi.size() != t.leaf_count()) throw InputError("leaf data size differs from the number of leaves");
  NodeFunction out = with_leaf_values(t, phi);
  for (NodeIndex v : t.interior()) {
    const auto& row = ball_rows_[static_cast<std::size_t>(v)];
    double a = 0.0;
    for (std::size_t l = 0; l < row.size(); ++l) a += row[l] * Phi.values[l];
    if (!std::isfinite(a)) throw NumericalError("ball average is not finite on cluster \"" + t.node(v).id + "\"");
    out[v] = a;
  }
  return out;
}

LeafFunction random_leaf_data(std::size_t leaves, std::uint64_t seed, int trial) {
  Rng rng = Rng::derived(seed, static_cast<std::uint64_t>(trial));
  LeafFunction phi;
  phi.values.resize(leaves);
  double mean = 0.0;
  for (auto& v : phi.values) {
    v = rng.normal();
    mean += v;
  }
  mean /= static_cast<double>(leaves);
  for (auto& v : phi.values) v -= mean;
  return phi;
}

RatioSummary summarize(std::vector<double> v) {
  if (v.empty()) return {};
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  const double med = v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  return {v.front(), med, v.back()};
}

namespace {

ExperimentReport run_experiment(const Instance& inst, const ExperimentEngine* engine, const ExperimentOptions& opts) {
  if (opts.trials < 1) throw InputError("at least one trial is required");
  const auto& t = inst.tree;
  if (t.leaf_count() < 2) throw InputError("a tree with one leaf has no nonconstant boundary data");
  ExperimentReport rep;
  rep.arity = t.arity();
  rep.depth = t.height();
  rep.epsilon = t.epsilon();
  rep.p = opts.p;
  rep.backend = to_string(opts.backend);
  const TreeExtensionOp backend = make_tree_backend(opts.backend, opts.p, opts.solver);

  std::vector<double> plane, tree;
  // Streams past the trial count are used for resampling.
  int next_stream = opts.trials;
  for (int trial = 0; trial < opts.trials; ++trial) {
    int stream = trial;
    LeafFunction phi = random_leaf_data(t.leaf_count(), opts.seed, stream);
    double trace = trace_seminorm(t, phi, opts.p, opts.solver);
    while (!(trace > 1e-12)) {
      ++rep.resampled;
      stream = next_stream++;
      phi = random_leaf_data(t.leaf_count(), opts.seed, stream);
      trace = trace_seminorm(t, phi, opts.p, opts.solver);
    }
    SeminormResult sn;
    NodeFunction Phi;
    if (engine != nullptr) {
      const NodeFunction ext = backend(t, phi);
      sn = engine->plane_seminorms(ext, {opts.p}).front();
      Phi = engine->tree_values(phi, ext);
    } else {
      const PatchedInterpolant F = planar_extend(inst, PlanarData::from_leaf_values(phi, inst.ps), backend);
      sn = planar_seminorm(F, opts.p, opts.quad);
      Phi = tree_extend_from_extension(inst, phi, F, opts.ball);
    }
    ExperimentRow row;
    row.seed = opts.seed;
    row.trial = trial;
    row.trace = trace;
    row.plane_norm = sn.value;
    row.tree_norm = seminorm_tree(t, Phi, opts.p);
    row.rho_plane = sn.value / trace;
    row.rho_tree = row.tree_norm / trace;
    row.quad_error = sn.error_estimate;
    rep.max_quad_rel_error = std::max(rep.max_quad_rel_error, sn.value > 0.0 ? sn.error_estimate / sn.value : 0.0);
    plane.push_back(row.rho_plane);
    tree.push_back(row.rho_tree);
    rep.rows.push_back(row);
  }
  rep.plane = summarize(plane);
  rep.tree = summarize(tree);
  return rep;
}

}  // namespace

ExperimentReport norm_ratio_experiment(const Instance& inst, const ExperimentOptions& opts) {
  if (!opts.linearized) return run_experiment(inst, nullptr, opts);
  const ExperimentEngine engine(inst, opts.quad, opts.ball);
  return run_experiment(inst, &engine, opts);
}

ExperimentReport norm_ratio_experiment(const ExperimentEngine& engine, const ExperimentOptions& opts) {
  return run_experiment(engine.instance(), &engine, opts);
}

}  // namespace sobext
