#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "sobext/geometry.hpp"
#include "sobext/whitney.hpp"

namespace sobext {

/// P(x) = a + b x1 + c x2.
struct AffinePolynomial {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  double operator()(Point x) const { return a + b * x.x1 + c * x.x2; }
  AffinePolynomial operator-(const AffinePolynomial& o) const { return {a - o.a, b - o.b, c - o.c}; }
  AffinePolynomial operator+(const AffinePolynomial& o) const { return {a + o.a, b + o.b, c + o.c}; }
  AffinePolynomial operator*(double s) const { return {a * s, b * s, c * s}; }
  bool operator==(const AffinePolynomial&) const = default;
};

/// Affine polynomial taking values v at the three points. Throws InputError
/// when the points are colinear (twice the triangle area below 1e-14 times
/// the squared largest side).
AffinePolynomial affine_through(Point p1, Point p2, Point p3, double v1, double v2, double v3);

/// Affine polynomial with P(z) = fz, P(w) = fw and no x2 dependence. Throws
/// InputError if z and w share their first coordinate.
AffinePolynomial horizontal_affine(Point z, Point w, double fz, double fw);

/// sup of |P| over the closed square, attained at a corner.
double sup_norm(const AffinePolynomial& p, const DyadicSquare& q);

/// F = sum_Q P_Q theta_Q on Q0 and the tail polynomial outside.
class PatchedInterpolant {
 public:
  PatchedInterpolant(std::shared_ptr<const WhitneyDecomposition> wd, std::vector<AffinePolynomial> pieces,
                     AffinePolynomial tail);

  /// Value and derivatives up to `order` at any point of the plane. Inside
  /// Q0 the sum is rewritten as P_ref + sum theta_Q (P_Q - P_ref) with P_ref
  /// the piece of the square containing x.
  Jet2 evaluate(Point x, int order = 2) const;
  /// Same, given the index of the square containing x.
  Jet2 evaluate_in(std::size_t q, Point x, int order = 2) const;

  const WhitneyDecomposition& decomposition() const { return *wd_; }
  const std::shared_ptr<const WhitneyDecomposition>& decomposition_ptr() const { return wd_; }
  const std::vector<AffinePolynomial>& pieces() const { return pieces_; }
  const AffinePolynomial& tail() const { return tail_; }

  /// True if every neighbour of Q carries exactly the piece of Q, in which
  /// case F = P_Q on Q and the Hessian vanishes there.
  bool locally_affine(std::size_t q) const;

 private:
  std::shared_ptr<const WhitneyDecomposition> wd_;
  std::vector<AffinePolynomial> pieces_;
  AffinePolynomial tail_;
};

/// Jet of an affine polynomial.
Jet2 affine_jet(const AffinePolynomial& p, Point x);

/// sum over ordered neighbour pairs Q != Q' of ||P_Q - P_Q'||^p_{L^inf(Q)} delta_Q^(2-2p).
double patching_sum(const PatchedInterpolant& f, double p, Exec exec = Exec::Parallel);
/// Same, with Q restricted to the listed squares (all when empty).
double patching_sum_over(const PatchedInterpolant& f, std::span<const std::size_t> squares, double p,
                         Exec exec = Exec::Parallel);

/// CSV rows "x1,x2,F,d1F,d2F" on an nx-by-ny grid over r, with header.
void write_samples_csv(std::ostream& os, const PatchedInterpolant& f, const Rect& r, int nx, int ny);

}  // namespace sobext
