#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sobext/embedding.hpp"
#include "sobext/errors.hpp"
#include "sobext/geometry.hpp"

namespace sobext {

/// Q0 = [-3, 5) x [-3, 5).
inline constexpr double kQ0Lo = -3.0;
inline constexpr double kQ0Side = 8.0;
/// Outward tolerance of every closed dilate, relative to the side length.
inline constexpr double kDilateTol = 1e-12;

namespace detail {
inline constexpr auto kSideTable = [] {
  std::array<double, 64> t{};
  double s = kQ0Side;
  for (auto& v : t) {
    v = s;
    s *= 0.5;
  }
  return t;
}();
}  // namespace detail

/// Dyadic square of Q0 in exact integer coordinates.
struct DyadicSquare {
  int level = 0;
  std::int64_t ix = 0;
  std::int64_t iy = 0;

  double side() const { return detail::kSideTable[static_cast<std::size_t>(level)]; }
  double lo1() const { return kQ0Lo + static_cast<double>(ix) * side(); }
  double lo2() const { return kQ0Lo + static_cast<double>(iy) * side(); }
  Point center() const { return {lo1() + 0.5 * side(), lo2() + 0.5 * side()}; }
  /// Closure of the square.
  Rect closure() const { return {lo1(), lo1() + side(), lo2(), lo2() + side()}; }
  /// Closed concentric dilate c*Q, widened by the outward tolerance.
  Rect dilate(double c) const {
    const Point m = center();
    const double h = 0.5 * c * side() + kDilateTol * side();
    return {m.x1 - h, m.x1 + h, m.x2 - h, m.x2 + h};
  }
  DyadicSquare parent() const { return {level - 1, ix >> 1, iy >> 1}; }
  DyadicSquare child(int k) const { return {level + 1, 2 * ix + (k & 1), 2 * iy + (k >> 1)}; }
  bool on_boundary() const {
    const std::int64_t last = (std::int64_t{1} << level) - 1;
    return ix == 0 || iy == 0 || ix == last || iy == last;
  }
  bool operator==(const DyadicSquare&) const = default;
};

/// True if the closures of two dyadic squares meet (exact integer test).
bool closures_touch(const DyadicSquare& a, const DyadicSquare& b);

enum class SquareType : std::uint8_t { I, II, III };
const char* to_string(SquareType t);

struct WhitneySquare {
  DyadicSquare sq;
  SquareType type = SquareType::III;
  bool boundary = false;
  /// Basepoints as E1 grid indices.
  std::int64_t z = 0;
  std::int64_t w = 0;
  /// For Type II, the E2 index of the unique point of 1.1Q n E2; else -1.
  int xq = -1;
};

/// Anchors (z_x, w_x) of an E2 point, as E1 grid indices.
struct E2Anchor {
  std::int64_t z = 0;
  std::int64_t w = 0;
};

/// z_x = nearest E1 point to x; w_x = nearest E1 point to (x1 + x2, 0), or
/// to (x1 - x2, 0) if x1 + x2 leaves [0, 2). Throws NumericalError if the
/// three pairwise distances are not within a factor 4 of x2.
E2Anchor e2_anchor(const PlanarSet& ps, std::size_t i);

enum class Exec { Serial, Parallel };

struct WhitneyOptions {
  std::size_t max_squares = 5'000'000;
  Exec exec = Exec::Parallel;
};

/// Raised when the decomposition would exceed the square cap.
class CapacityError : public InputError {
 public:
  CapacityError(const std::string& what, std::size_t required) : InputError(what), required_(required) {}
  /// Squares needed (a lower bound if the count was abandoned).
  std::size_t required() const { return required_; }

 private:
  std::size_t required_;
};

/// One nonzero partition-of-unity function at a point.
struct PouTerm {
  int square = 0;
  Jet2 theta;
};

/// Whitney decomposition of Q0 relative to E.
class WhitneyDecomposition {
 public:
  static WhitneyDecomposition decompose(const PlanarSet& ps, const WhitneyOptions& opts = {});

  std::size_t size() const { return squares_.size(); }
  const WhitneySquare& square(std::size_t i) const { return squares_[i]; }
  const std::vector<WhitneySquare>& squares() const { return squares_; }
  int max_level() const { return max_level_; }

  /// Neighbours (1.1-dilates meet), including the square itself.
  std::span<const int> neighbors(std::size_t i) const {
    return {nbr_index_.data() + nbr_offset_[i], nbr_index_.data() + nbr_offset_[i + 1]};
  }

  /// Index of the square containing x, or -1 if x is outside Q0.
  int locate(Point x) const;

  /// Index of the square with the given coordinates, or -1.
  int find(const DyadicSquare& q) const;

  /// theta_Q at x with derivatives up to `order`. Throws InputError if x is
  /// outside Q0.
  Jet2 pou_eval(std::size_t q, Point x, int order = 2) const;

  /// All theta_Q that do not vanish at x, given the square containing x.
  void pou_terms(Point x, int containing, std::vector<PouTerm>& out, int order = 2) const;

  /// Neighbour lists rebuilt from scratch with the given execution policy.
  std::pair<std::vector<std::int64_t>, std::vector<int>> build_neighbors(Exec exec) const;

 private:
  struct QNode {
    int first_child = -1;  // children at first_child .. first_child + 3
    int leaf = -1;         // square index for leaves
  };
  template <class F>
  void for_each_touching(const Rect& r, F&& f) const;

  std::vector<WhitneySquare> squares_;
  std::vector<QNode> qtree_;
  std::vector<std::int64_t> nbr_offset_;
  std::vector<int> nbr_index_;
  int max_level_ = 0;
};

/// Profile g of the bump: 1 on [0, 0.5], 0 beyond 0.55, quintic blend.
/// Returns g, g', g'' at u (even in u).
std::array<double, 3> bump_profile(double u);

/// psi_Q at x with derivatives.
Jet2 bump(const DyadicSquare& q, Point x);

struct WhitneyReport {
  bool partition_exact = true;
  bool cz1 = true;             // #(1.1Q n E) <= 1 and #(3Q+ n E) >= 2
  bool cz2 = true;             // neighbour sizes within factor 2 and closures touch
  bool min_side = true;        // delta_Q >= Delta / 20
  bool boundary_side = true;   // delta_Q >= 1 on boundary squares
  bool boundary_type = true;   // boundary squares are Type III
  bool neighbors_symmetric = true;
  bool basepoints_in_k0q = true;
  std::size_t squares = 0;
  std::size_t type_count[3] = {0, 0, 0};
  std::size_t boundary_count = 0;
  int max_level = 0;
  int max_neighbors = 0;        // excluding the square itself
  int max_multiplicity = 0;     // sampled cover multiplicity of {1.1Q}
  double min_side_over_delta = 0.0;
  double type3_ratio_min = 0.0;  // delta_Q / dist(Q, E), Type III non-boundary
  double type3_ratio_max = 0.0;
  double dist_bd_min = 0.0;      // delta_Q / (Delta + dist(Q, E1))
  double dist_bd_max = 0.0;
  double basepoint_k0_max = 0.0;  // smallest K with z_Q, w_Q in K Q
  double basepoint_gap_min = 0.0;  // |z_Q - w_Q| / delta_Q
  double basepoint_gap_max = 0.0;
  double pou_deriv_max[3] = {0.0, 0.0, 0.0};  // sampled sup delta^|a| |d^a theta|
  bool exact_ok() const {
    return partition_exact && cz1 && cz2 && min_side && boundary_side && boundary_type && neighbors_symmetric;
  }
};

/// Checks the decomposition lemmas exactly and measures the soft constants.
/// `pou_samples` squares (spread evenly) are probed for the derivative bounds.
WhitneyReport verify_whitney(const WhitneyDecomposition& wd, const PlanarSet& ps, double k0_dilate = 50.0,
                             std::size_t pou_samples = 2000);

/// Distance from a closed rectangle to E1.
double dist_rect_e1(const PlanarSet& ps, const Rect& r);
/// Distance from a closed rectangle to E2.
double dist_rect_e2(const PlanarSet& ps, const Rect& r);

}  // namespace sobext
