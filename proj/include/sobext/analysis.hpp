#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "sobext/clusters.hpp"
#include "sobext/embedding.hpp"
#include "sobext/geometry.hpp"
#include "sobext/interpolant.hpp"
#include "sobext/rng.hpp"

namespace sobext {

/// n-point Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};
GaussRule gauss_legendre(int n);

struct QuadOptions {
  int order = 12;           // coarse points per panel per axis; fine uses twice this
  double refine_tol = 0.01;
  Exec exec = Exec::Parallel;
};

struct SeminormResult {
  double p = 0.0;
  double value = 0.0;           // fine integral ^ (1/p)
  double coarse = 0.0;          // coarse integral ^ (1/p)
  double error_estimate = 0.0;  // |value - coarse|
  bool within_tol = true;       // error_estimate <= refine_tol * value
};

struct SeminormStats {
  std::size_t squares_integrated = 0;  // squares on which F is not a single affine piece
  std::size_t panels = 0;              // panels with a nonzero Hessian
};

/// ||F||_{L^{2,p}(Q0)} for several p at once: per-square tensor Gauss
/// quadrature of |Hessian|_F^p over panels cut at the partition-of-unity band
/// edges. Squares and panels on which F is one affine piece are skipped
/// (their contribution is exactly zero).
std::vector<SeminormResult> planar_seminorms(const PatchedInterpolant& f, const std::vector<double>& ps,
                                             const QuadOptions& opts = {}, SeminormStats* stats = nullptr);

/// Same, integrating only over the listed squares (all of Q0 when empty).
std::vector<SeminormResult> planar_seminorms_over(const PatchedInterpolant& f, std::span<const std::size_t> squares,
                                                  const std::vector<double>& ps, const QuadOptions& opts = {},
                                                  SeminormStats* stats = nullptr);

SeminormResult planar_seminorm(const PatchedInterpolant& f, double p, const QuadOptions& opts = {});

using Field = std::function<Jet2(Point, int)>;

/// Tensor Gauss-Legendre integral of |Hessian|_F^p over a rectangle.
double rect_hessian_integral(const Field& f, const Rect& r, double p, int order);

Field as_field(const PatchedInterpolant& f);

/// Mean of d_{deriv} F over the closed disk, by Gauss-Legendre rings in the
/// radius (area weighted) times uniform angles. deriv is 1 or 2.
double ball_average(const Field& f, Point center, double radius, int deriv, int rings = 64, int angles = 256);

/// integral over the disk of |Hessian|_F^p, same rule as ball_average.
double disk_hessian_integral(const Field& f, Point center, double radius, double p, int rings = 64, int angles = 256);

struct BallEstimateSums {
  double sum1 = 0.0;  // sum over C0 of |avg_C - avg_parent|^p W_C^(2-p)
  double sum2 = 0.0;  // sum over leaves of |d2 T_x(G) - avg_C|^p W_C^(2-p)
};

BallEstimateSums ball_estimate_sums(const ClusterTree& ct, const PlanarSet& ps, const Field& g, double p,
                                    int rings = 64, int angles = 256);

/// Quadrature for fields F = x2 sum_Q theta_Q c[label_Q] on Q0 and
/// x2 c[outside] elsewhere, which are linear in the coefficient vector c.
/// The per-label Hessians at every quadrature point with a nonzero
/// contribution are stored once, so the seminorm and ball averages of any c
/// are cheap sums. Uses the same panels and points as planar_seminorms.
class VerticalFieldQuadrature {
 public:
  VerticalFieldQuadrature(std::shared_ptr<const WhitneyDecomposition> wd, std::vector<int> labels, int n_labels,
                          int outside_label, const QuadOptions& opts = {});

  std::vector<SeminormResult> seminorms(const std::vector<double>& c, const std::vector<double>& ps) const;

  /// Weights a with (d2 F)_B = sum_l a[l] c[l] over the disk rule of ball_average.
  std::vector<double> ball_average_weights(Point center, double radius, int rings = 64, int angles = 256) const;

  const SeminormStats& stats() const { return stats_; }
  std::size_t stored_points() const;

 private:
  struct Rule {
    std::vector<double> w;
    std::vector<std::uint32_t> off;  // entries of point k: [off[k], off[k+1])
    std::vector<int> label;
    std::vector<std::array<double, 3>> hess;
  };
  struct SquareData {
    Rule coarse, fine;
  };
  std::shared_ptr<const WhitneyDecomposition> wd_;
  std::vector<int> labels_;
  int n_labels_ = 0;
  int outside_ = 0;
  QuadOptions opts_;
  std::vector<std::size_t> active_;  // squares with mixed neighbour labels
  std::vector<SquareData> squares_;  // parallel to active_
  SeminormStats stats_;
};

/// Sum of Gaussian bumps a exp(-|x - c|^2 / (2 s^2)) with exact derivatives.
struct GaussianField {
  struct Bump {
    Point c;
    double s = 1.0;
    double a = 0.0;
  };
  std::vector<Bump> bumps;
  Jet2 operator()(Point x, int order = 2) const;
};

/// n bumps with centres uniform in r, widths uniform in [s_lo, s_hi],
/// amplitudes standard normal.
GaussianField random_gaussian_field(Rng& rng, int n, const Rect& r, double s_lo, double s_hi);

}  // namespace sobext
