#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include "sobext/tree.hpp"

namespace sobext {

struct SolverOptions {
  double tol = 1e-10;            // relative objective tolerance
  int max_newton_per_stage = 200;
  double mu_decay = 10.0;        // continuation factor mu -> mu / mu_decay
  double mu_final = 1e-10;       // relative to the data scale
  int max_sweeps = 20000;        // coordinate-descent fallback cap
};

struct SolveReport {
  int newton_iterations = 0;
  int sweeps = 0;
  bool used_fallback = false;
  bool converged = false;
  double residual = 0.0;         // max |gradient| of the unsmoothed objective at interior nodes with nonzero differences
  double energy = 0.0;           // sum |dPhi|^p W^(2-p)
};

/// Raised when neither Newton nor the fallback reaches the tolerance. Carries
/// the best iterate found.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, NodeFunction best, SolveReport report)
      : std::runtime_error(what), best_(std::move(best)), report_(report) {}
  const NodeFunction& best() const { return best_; }
  const SolveReport& report() const { return report_; }

 private:
  NodeFunction best_;
  SolveReport report_;
};

/// Lifts leaf values onto a full node function with the leaves fixed and the
/// interior zero-initialised.
NodeFunction with_leaf_values(const WeightedTree& tree, const LeafFunction& phi);

/// Energy-minimising extension of leaf data for 1 < p <= 2.
///
/// Minimises sum_v ((d_v^2 + mu^2)^(p/2) - mu^p) W_v^(2-p) over the interior
/// node values by damped Newton steps (tree-structured elimination, O(n) per
/// step) under the continuation mu -> mu/10 down to mu_final * scale. Falls
/// back to cyclic coordinate descent with golden-section line search when
/// Newton stalls.
NodeFunction optimal_extension(const WeightedTree& tree, const LeafFunction& phi, double p,
                               const SolverOptions& opts = {}, SolveReport* report = nullptr);

/// Exact minimiser of sum (Phi(v) - Phi(parent v))^2 (all coefficients 1).
NodeFunction harmonic_extension_p2(const WeightedTree& tree, const LeafFunction& phi);

/// Infimum of the tree seminorm over extensions of phi.
double trace_seminorm(const WeightedTree& tree, const LeafFunction& phi, double p,
                      const SolverOptions& opts = {});

/// Phi(v) = mean of phi over the shadow of v. Exactly linear in phi.
NodeFunction averaging_extension(const WeightedTree& tree, const LeafFunction& phi);

/// Nested exhaustive grid search over interior values (at most 4 interior
/// nodes). Independent oracle for optimal_extension.
NodeFunction brute_force_extension(const WeightedTree& tree, const LeafFunction& phi, double p,
                                   double grid_radius, int grid_steps);

enum class TreeBackend { Optimal, Averaging };

std::string to_string(TreeBackend b);
TreeBackend tree_backend_from_string(const std::string& s);

using TreeExtensionOp = std::function<NodeFunction(const WeightedTree&, const LeafFunction&)>;

TreeExtensionOp make_tree_backend(TreeBackend kind, double p, const SolverOptions& opts = {});

struct OperatorNormEstimate {
  double value = 0.0;   // lower bound on the operator norm
  int valid_samples = 0;
  int skipped = 0;      // samples with zero trace seminorm
};

/// max over sampled phi of seminorm(op(phi)) / trace_seminorm(phi). Each
/// sample is a de-meaned Gaussian vector refined by a short seeded random
/// ascent; sample k depends only on (seed, k), so the estimate is
/// nondecreasing in n_samples. A tree whose trace space is entirely
/// degenerate (every sample has zero trace seminorm) reports 1.
OperatorNormEstimate estimate_operator_norm(const WeightedTree& tree, const TreeExtensionOp& op, double p,
                                            int n_samples, std::uint64_t seed, int ascent_steps = 8,
                                            const SolverOptions& opts = {});

}  // namespace sobext
