#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "sobext/analysis.hpp"
#include "sobext/clusters.hpp"
#include "sobext/embedding.hpp"
#include "sobext/interpolant.hpp"
#include "sobext/tree.hpp"
#include "sobext/tree_extension.hpp"
#include "sobext/whitney.hpp"

namespace sobext {

/// Data f on E: an E1 rule (zero when empty) with explicit overrides, and
/// one value per E2 point.
struct PlanarData {
  std::function<double(double x1)> e1_rule;
  std::unordered_map<std::int64_t, double> e1_overrides;
  std::vector<double> e2;

  double e1(std::int64_t k, const PlanarSet& ps) const;

  /// f = A on E.
  static PlanarData from_affine(const AffinePolynomial& a, const PlanarSet& ps);
  /// f = 0 on E1, phi(x) W_x on E2.
  static PlanarData from_leaf_values(const LeafFunction& phi, const PlanarSet& ps);
};

struct InstanceOptions {
  WhitneyOptions whitney;
  ClusterOptions clusters;
};

/// Everything the two constructions read, built once per tree.
struct Instance {
  WeightedTree tree;
  PlanarSet ps;
  std::shared_ptr<const WhitneyDecomposition> wd;
  ClusterTree ct;
  Assignment as;
  std::vector<E2Anchor> anchors;  // (z_x, w_x) per E2 point

  static Instance build(WeightedTree tree, const InstanceOptions& opts = {});
};

/// Jets P_x through (x, z_x, w_x) for every E2 point.
std::vector<AffinePolynomial> e2_jets(const Instance& inst, const PlanarData& f);

/// The planar extension of f built from a tree extension operator.
PatchedInterpolant planar_extend(const Instance& inst, const PlanarData& f, const TreeExtensionOp& backend);

using PlanarExtensionOp = std::function<PatchedInterpolant(const PlanarData&)>;

PlanarExtensionOp make_planar_backend(const Instance& inst, TreeExtensionOp tree_backend);

struct BallQuad {
  int rings = 64;
  int angles = 256;
};

/// Phi = phi on leaves, ball average of d2 F over B_C elsewhere, where F is
/// the planar extension of the data built from phi.
NodeFunction tree_extend_from_planar(const Instance& inst, const LeafFunction& phi, const PlanarExtensionOp& planar,
                                     const BallQuad& quad = {});

/// Same, given F = T f_phi already computed.
NodeFunction tree_extend_from_extension(const Instance& inst, const LeafFunction& phi, const PatchedInterpolant& F,
                                        const BallQuad& quad = {});

struct RestrictionCheck {
  double max_rel_e2 = 0.0;
  double max_rel_e1 = 0.0;
  bool ok(double tol) const { return max_rel_e2 <= tol && max_rel_e1 <= tol; }
};

/// Relative error |F - f| / max(|f|, scale) at every E2 point and at n
/// sampled E1 points (always including both ends), with scale the largest
/// |f| seen.
RestrictionCheck check_restriction(const Instance& inst, const PatchedInterpolant& F, const PlanarData& f,
                                   int e1_samples, std::uint64_t seed);

/// Precomputed linear structure of the extension of data vanishing on E1.
/// Such data give pieces x2 Phi(C_Q), so the planar seminorm and the ball
/// averages of F depend linearly on the node vector Phi and are tabulated
/// once per instance with the rules of planar_seminorms and ball_average.
class ExperimentEngine {
 public:
  explicit ExperimentEngine(const Instance& inst, const QuadOptions& quad = {}, const BallQuad& ball = {});

  const Instance& instance() const { return *inst_; }

  /// Planar seminorms of the extension with node values Phi.
  std::vector<SeminormResult> plane_seminorms(const NodeFunction& Phi, const std::vector<double>& ps) const;

  /// phi on leaves, ball averages of d2 F elsewhere, F built from Phi.
  NodeFunction tree_values(const LeafFunction& phi, const NodeFunction& Phi) const;

  const SeminormStats& stats() const { return vq_.stats(); }

 private:
  const Instance* inst_;
  VerticalFieldQuadrature vq_;
  std::vector<std::vector<double>> ball_rows_;  // per node, empty for leaves
};

struct ExperimentOptions {
  double p = 1.5;
  int trials = 50;
  std::uint64_t seed = 0;
  TreeBackend backend = TreeBackend::Averaging;
  QuadOptions quad;
  BallQuad ball;
  SolverOptions solver;
  bool linearized = true;  // use ExperimentEngine instead of building F per trial
};

struct ExperimentRow {
  std::uint64_t seed = 0;
  int trial = 0;
  double rho_plane = 0.0;
  double rho_tree = 0.0;
  double quad_error = 0.0;   // |fine - coarse| of the planar seminorm
  double trace = 0.0;
  double plane_norm = 0.0;
  double tree_norm = 0.0;
};

struct RatioSummary {
  double min = 0.0, median = 0.0, max = 0.0;
};

struct ExperimentReport {
  int arity = 0, depth = 0;
  double epsilon = 0.0;
  double p = 0.0;
  std::string backend;
  std::vector<ExperimentRow> rows;
  RatioSummary plane, tree;
  double max_quad_rel_error = 0.0;
  int resampled = 0;
};

/// Random de-meaned standard normal leaf data, one stream per trial.
LeafFunction random_leaf_data(std::size_t leaves, std::uint64_t seed, int trial);

ExperimentReport norm_ratio_experiment(const Instance& inst, const ExperimentOptions& opts);
/// Same, reusing a tabulated engine (opts.quad and opts.ball are those of the engine).
ExperimentReport norm_ratio_experiment(const ExperimentEngine& engine, const ExperimentOptions& opts);

RatioSummary summarize(std::vector<double> v);

}  // namespace sobext
