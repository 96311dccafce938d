#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sobext/operators.hpp"

namespace sobext {

struct VerifyOptions {
  InstanceOptions instance;
  std::vector<double> ps{1.25, 1.5, 1.75};
  /// Random affine families for the patching constant, and the squares
  /// (sampled once per instance) over which both sides are summed.
  int patching_families = 3;
  std::size_t patching_squares = 300;
  /// Gaussian-bump fields for the ball estimate.
  int ball_fields = 10;
  std::uint64_t seed = 0;
  QuadOptions quad;
  BallQuad ball;
};

struct RangeStat {
  double min = 0.0, max = 0.0;
  double spread() const { return min > 0.0 ? max / min : 0.0; }
};

/// Measured constants at one exponent.
struct ExponentReport {
  double p = 0.0;
  double max_pair_ratio = 0.0;  // max over C of R_C
  RangeStat patching;           // C_meas over the affine families
  RangeStat ball_estimate;      // (sum1 + sum2) / ||G||^p over the fields
};

struct VerifyReport {
  std::vector<TreeViolation> tree_violations;
  PsiReport psi;
  SepReport sep;
  WhitneyReport whitney;
  BallReport balls;
  ClusterLemmaReport cluster_lemma;
  double k1 = 0.0;
  std::vector<ExponentReport> exponents;

  /// Every zero-tolerance check.
  bool exact_ok() const;
  /// K <= 10, at most 12 neighbours, C_meas within a factor 3 across families.
  bool constants_ok() const;
  /// One line per failed exact check.
  std::vector<std::string> failures() const;
};

/// Patching constant for one family: quadrature of |Hessian|^p over the
/// sampled squares divided by the patching sum over the same squares.
std::vector<double> patching_constants(const PatchedInterpolant& f, const std::vector<std::size_t>& squares,
                                       const std::vector<double>& ps, const QuadOptions& quad);

/// Seeded sample of `count` distinct square indices (all when fewer exist).
std::vector<std::size_t> sample_squares(std::size_t total, std::size_t count, std::uint64_t seed);

/// Runs every lemma verifier on a built instance and measures the constants.
VerifyReport verify_instance(const Instance& inst, const VerifyOptions& opts = {});

}  // namespace sobext
