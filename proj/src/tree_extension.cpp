#include "sobext/tree_extension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sobext/errors.hpp"
#include "sobext/rng.hpp"

namespace sobext {

namespace {

void check_leaf_data(const WeightedTree& tree, const LeafFunction& phi) {
  if (phi.size() != tree.leaf_count()) throw InputError("leaf function size does not match the number of leaves");
  for (double v : phi.values)
    if (!std::isfinite(v)) throw InputError("leaf data must be finite");
}

void check_p(double p) {
  if (!(p > 1.0 && p <= 2.0)) throw InputError("p must lie in (1, 2]");
}

// Smoothed edge potential h(d) = (d^2 + mu^2)^(p/2) - mu^p and derivatives.
struct Smoothed {
  double p;
  double mu;
  double value(double d) const { return std::pow(d * d + mu * mu, 0.5 * p) - std::pow(mu, p); }
  double first(double d) const {
    if (p == 2.0) return 2.0 * d;
    return p * d * std::pow(d * d + mu * mu, 0.5 * p - 1.0);
  }
  double second(double d) const {
    if (p == 2.0) return 2.0;
    const double s = d * d + mu * mu;
    return p * std::pow(s, 0.5 * p - 2.0) * ((p - 1.0) * d * d + mu * mu);
  }
};

/// Newton machinery on a fixed tree with fixed leaf values. Works on
/// normalised data (leaf values in [0, 1]).
class TreeProblem {
 public:
  TreeProblem(const WeightedTree& tree, double p) : tree_(tree), p_(p) {
    edge_weight_.assign(tree.size(), 0.0);
    for (std::size_t v = 1; v < tree.size(); ++v)
      edge_weight_[v] = std::pow(tree.weight(static_cast<NodeIndex>(v)), 2.0 - p);
  }

  double energy(const NodeFunction& x, const Smoothed& h) const {
    double e = 0.0;
    for (std::size_t v = 1; v < tree_.size(); ++v) {
      const auto vi = static_cast<NodeIndex>(v);
      e += edge_weight_[v] * h.value(x[vi] - x[tree_.parent(vi)]);
    }
    return e;
  }

  // Solves H s = -g over interior nodes; returns the Newton decrement
  // -g.s and fills step (zero on leaves) and the gradient max-norm.
  double newton_step(const NodeFunction& x, const Smoothed& h, std::vector<double>& step, double& grad_inf) const {
    const std::size_t n = tree_.size();
    std::vector<double> grad(n, 0.0), diag(n, 0.0), off(n, 0.0);
    for (std::size_t v = 1; v < n; ++v) {
      const auto vi = static_cast<NodeIndex>(v);
      const auto pi = static_cast<std::size_t>(tree_.parent(vi));
      const double d = x[vi] - x[static_cast<NodeIndex>(pi)];
      const double w = edge_weight_[v];
      const double g1 = w * h.first(d);
      const double g2 = w * h.second(d);
      grad[v] += g1;
      grad[pi] -= g1;
      diag[v] += g2;
      diag[pi] += g2;
      off[v] = -g2;
    }
    grad_inf = 0.0;
    std::vector<double> rhs(n, 0.0);
    for (NodeIndex v : tree_.interior()) {
      rhs[static_cast<std::size_t>(v)] = -grad[static_cast<std::size_t>(v)];
      grad_inf = std::max(grad_inf, std::abs(grad[static_cast<std::size_t>(v)]));
    }
    // Eliminate children into parents (reverse preorder), then substitute.
    auto interior = tree_.interior();
    for (auto it = interior.rbegin(); it != interior.rend(); ++it) {
      const auto v = static_cast<std::size_t>(*it);
      if (*it == tree_.root()) continue;
      const auto pi = static_cast<std::size_t>(tree_.parent(*it));
      diag[pi] -= off[v] * off[v] / diag[v];
      rhs[pi] -= off[v] * rhs[v] / diag[v];
    }
    step.assign(n, 0.0);
    for (NodeIndex vi : interior) {
      const auto v = static_cast<std::size_t>(vi);
      double r = rhs[v];
      if (vi != tree_.root()) r -= off[v] * step[static_cast<std::size_t>(tree_.parent(vi))];
      step[v] = r / diag[v];
    }
    double dec = 0.0;
    for (NodeIndex vi : interior) dec -= grad[static_cast<std::size_t>(vi)] * step[static_cast<std::size_t>(vi)];
    return dec;
  }

  // One cyclic sweep of exact coordinate minimisation of the unsmoothed
  // objective; returns the largest coordinate change.
  double coordinate_sweep(NodeFunction& x) const {
    double max_change = 0.0;
    for (NodeIndex v : tree_.interior()) {
      std::vector<std::pair<double, double>> terms;  // (anchor value, weight)
      if (v != tree_.root()) terms.emplace_back(x[tree_.parent(v)], edge_weight_[static_cast<std::size_t>(v)]);
      for (NodeIndex c : tree_.node(v).children) terms.emplace_back(x[c], edge_weight_[static_cast<std::size_t>(c)]);
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (auto [a, w] : terms) {
        lo = std::min(lo, a);
        hi = std::max(hi, a);
      }
      auto f = [&](double t) {
        double s = 0.0;
        for (auto [a, w] : terms) s += w * std::pow(std::abs(t - a), p_);
        return s;
      };
      // Golden-section search: the minimiser of a sum of |t - a|^p lies in
      // the hull of the anchors.
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double a = lo, b = hi;
      double c = b - g * (b - a), d = a + g * (b - a);
      double fc = f(c), fd = f(d);
      while (b - a > 1e-15 * std::max(1.0, std::abs(a) + std::abs(b))) {
        if (fc < fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - g * (b - a);
          fc = f(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + g * (b - a);
          fd = f(d);
        }
      }
      const double t = 0.5 * (a + b);
      max_change = std::max(max_change, std::abs(t - x[v]));
      x[v] = t;
    }
    return max_change;
  }

 private:
  const WeightedTree& tree_;
  double p_;
  std::vector<double> edge_weight_;
};

}  // namespace

NodeFunction with_leaf_values(const WeightedTree& tree, const LeafFunction& phi) {
  check_leaf_data(tree, phi);
  NodeFunction out{std::vector<double>(tree.size(), 0.0)};
  for (std::size_t i = 0; i < tree.leaf_count(); ++i) out[tree.leaves()[i]] = phi[i];
  return out;
}

NodeFunction averaging_extension(const WeightedTree& tree, const LeafFunction& phi) {
  check_leaf_data(tree, phi);
  NodeFunction out{std::vector<double>(tree.size(), 0.0)};
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto& n = tree.node(static_cast<NodeIndex>(i));
    double s = 0.0;
    for (int k = n.first_leaf; k < n.end_leaf; ++k) s += phi[static_cast<std::size_t>(k)];
    out.values[i] = n.children.empty() ? phi[static_cast<std::size_t>(n.leaf_ordinal)] : s / (n.end_leaf - n.first_leaf);
  }
  return out;
}

NodeFunction harmonic_extension_p2(const WeightedTree& tree, const LeafFunction& phi) {
  NodeFunction x = with_leaf_values(tree, phi);
  if (tree.interior().empty()) return x;
  // The quadratic objective is its own smoothing: one exact Newton step.
  TreeProblem prob(tree, 2.0);
  const Smoothed quad{2.0, 0.0};
  std::vector<double> step;
  double gi = 0.0;
  prob.newton_step(x, quad, step, gi);
  for (NodeIndex v : tree.interior()) x[v] += step[static_cast<std::size_t>(v)];
  return x;
}

NodeFunction optimal_extension(const WeightedTree& tree, const LeafFunction& phi, double p,
                               const SolverOptions& opts, SolveReport* report) {
  check_p(p);
  if (!(opts.tol > 0.0)) throw InputError("solver tolerance must be positive");
  NodeFunction raw = with_leaf_values(tree, phi);
  SolveReport rep;
  const auto [mn_it, mx_it] = std::minmax_element(phi.values.begin(), phi.values.end());
  const double lo = phi.values.empty() ? 0.0 : *mn_it;
  const double range = phi.values.empty() ? 0.0 : *mx_it - lo;
  if (tree.interior().empty() || range == 0.0) {
    for (NodeIndex v : tree.interior()) raw[v] = lo;
    rep.converged = true;
    if (report) *report = rep;
    return raw;
  }

  // Normalise leaf data to [0, 1]; start from the shadow averages.
  LeafFunction unit{phi.values};
  for (double& v : unit.values) v = (v - lo) / range;
  NodeFunction x = averaging_extension(tree, unit);
  TreeProblem prob(tree, p);

  bool newton_ok = true;
  double mu = 1.0;
  std::vector<double> step;
  while (newton_ok) {
    const Smoothed h{p, mu};
    bool stage_done = false;
    for (int it = 0; it < opts.max_newton_per_stage; ++it) {
      double grad_inf = 0.0;
      const double dec = prob.newton_step(x, h, step, grad_inf);
      ++rep.newton_iterations;
      rep.residual = grad_inf;
      if (!std::isfinite(dec)) break;
      const double e0 = prob.energy(x, h);
      if (dec <= 1e-15 * std::max(e0, 1e-300) || grad_inf == 0.0) {
        stage_done = true;
        break;
      }
      double t = 1.0;
      NodeFunction trial = x;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        for (NodeIndex v : tree.interior()) trial[v] = x[v] + t * step[static_cast<std::size_t>(v)];
        const double e1 = prob.energy(trial, h);
        if (e1 <= e0 - 1e-4 * t * dec) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) {
        // Decrement at rounding level: no representable improvement left.
        stage_done = dec <= 1e-10 * std::max(e0, 1e-300);
        break;
      }
      double max_step = 0.0;
      for (NodeIndex v : tree.interior()) max_step = std::max(max_step, std::abs(t * step[static_cast<std::size_t>(v)]));
      x = std::move(trial);
      if (max_step <= 1e-15) {
        stage_done = true;
        break;
      }
    }
    if (!stage_done) {
      newton_ok = false;
      break;
    }
    if (mu <= opts.mu_final) break;
    mu = std::max(mu / opts.mu_decay, opts.mu_final);
  }

  if (!newton_ok) {
    rep.used_fallback = true;
    double change = 1.0;
    while (rep.sweeps < opts.max_sweeps && change > 1e-14) {
      change = prob.coordinate_sweep(x);
      ++rep.sweeps;
    }
    if (change > 1e-14) {
      NodeFunction best{x.values};
      for (double& v : best.values) v = lo + range * v;
      rep.energy = tree_energy(tree, best, p);
      throw ConvergenceError("tree extension solver did not converge", std::move(best), rep);
    }
  }

  rep.converged = true;
  for (NodeIndex v : tree.interior()) raw[v] = lo + range * x[v];
  rep.energy = tree_energy(tree, raw, p);
  if (report) *report = rep;
  return raw;
}

double trace_seminorm(const WeightedTree& tree, const LeafFunction& phi, double p, const SolverOptions& opts) {
  return seminorm_tree(tree, optimal_extension(tree, phi, p, opts), p);
}

NodeFunction brute_force_extension(const WeightedTree& tree, const LeafFunction& phi, double p, double grid_radius,
                                   int grid_steps) {
  check_p(p);
  const auto interior = tree.interior();
  if (interior.size() > 4) throw InputError("brute-force extension supports at most 4 interior nodes");
  if (grid_steps < 2) throw InputError("grid_steps must be at least 2");
  NodeFunction x = with_leaf_values(tree, phi);
  if (interior.empty()) return x;
  const auto [mn, mx] = std::minmax_element(phi.values.begin(), phi.values.end());
  std::vector<double> lo(interior.size(), *mn - grid_radius), hi(interior.size(), *mx + grid_radius);
  NodeFunction best = x;
  double best_e = std::numeric_limits<double>::infinity();
  for (int round = 0; round < 4; ++round) {
    std::vector<int> idx(interior.size(), 0);
    const std::size_t dims = interior.size();
    while (true) {
      for (std::size_t k = 0; k < dims; ++k)
        x[interior[k]] = lo[k] + (hi[k] - lo[k]) * idx[k] / grid_steps;
      const double e = tree_energy(tree, x, p);
      if (e < best_e) {
        best_e = e;
        best = x;
      }
      std::size_t k = 0;
      while (k < dims && ++idx[k] > grid_steps) idx[k++] = 0;
      if (k == dims) break;
    }
    for (std::size_t k = 0; k < dims; ++k) {
      const double h = (hi[k] - lo[k]) / grid_steps;
      lo[k] = best[interior[k]] - 2.0 * h;
      hi[k] = best[interior[k]] + 2.0 * h;
    }
  }
  return best;
}

std::string to_string(TreeBackend b) { return b == TreeBackend::Optimal ? "optimal" : "averaging"; }

TreeBackend tree_backend_from_string(const std::string& s) {
  if (s == "optimal") return TreeBackend::Optimal;
  if (s == "averaging") return TreeBackend::Averaging;
  throw InputError("unknown tree backend '" + s + "' (expected optimal|averaging)");
}

TreeExtensionOp make_tree_backend(TreeBackend kind, double p, const SolverOptions& opts) {
  if (kind == TreeBackend::Averaging)
    return [](const WeightedTree& t, const LeafFunction& phi) { return averaging_extension(t, phi); };
  return [p, opts](const WeightedTree& t, const LeafFunction& phi) { return optimal_extension(t, phi, p, opts); };
}

OperatorNormEstimate estimate_operator_norm(const WeightedTree& tree, const TreeExtensionOp& op, double p,
                                            int n_samples, std::uint64_t seed, int ascent_steps,
                                            const SolverOptions& opts) {
  check_p(p);
  OperatorNormEstimate est;
  const std::size_t m = tree.leaf_count();
  auto ratio = [&](const LeafFunction& phi, bool& degenerate) {
    const auto [mn, mx] = std::minmax_element(phi.values.begin(), phi.values.end());
    const double tr = trace_seminorm(tree, phi, p, opts);
    degenerate = !(tr > 1e-13 * (*mx - *mn));
    return degenerate ? 0.0 : seminorm_tree(tree, op(tree, phi), p) / tr;
  };
  for (int k = 0; k < n_samples; ++k) {
    Rng rng = Rng::derived(seed, static_cast<std::uint64_t>(k));
    LeafFunction phi{std::vector<double>(m)};
    for (double& v : phi.values) v = rng.normal();
    const double mean = std::accumulate(phi.values.begin(), phi.values.end(), 0.0) / static_cast<double>(m);
    for (double& v : phi.values) v -= mean;
    bool degenerate = false;
    double r = ratio(phi, degenerate);
    if (degenerate) {
      ++est.skipped;
      continue;
    }
    ++est.valid_samples;
    for (int s = 0; s < ascent_steps; ++s) {
      LeafFunction trial = phi;
      for (double& v : trial.values) v += 0.25 * rng.normal();
      bool deg = false;
      const double rt = ratio(trial, deg);
      if (!deg && rt > r) {
        r = rt;
        phi = std::move(trial);
      }
    }
    est.value = std::max(est.value, r);
  }
  if (est.valid_samples == 0) est.value = 1.0;
  return est;
}

}  // namespace sobext
