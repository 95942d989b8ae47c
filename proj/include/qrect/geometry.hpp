#pragma once
// Geometric primitives: dyadic cubes, boxes, parabolic boxes, hyperplanes,
// line segments, affine maps and simplices, plus the metric and intersection
// operations the reconstruction pipeline relies on.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace qrect {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

// ---------------------------------------------------------------------------
// Boxes

/// Axis-aligned box given by its min-corner and per-axis side lengths.
struct Box {
  Vec lo;
  Vec side;

  Box() = default;
  Box(Vec lo_, Vec side_);

  static Box cube(const Vec& lo, double side);
  /// [a,b]^n
  static Box interval_power(double a, double b, std::size_t n);

  std::size_t dim() const { return lo.size(); }
  Vec center() const;
  Vec hi() const;
  double diameter() const;
  double volume() const;
  /// Concentric box with diameter scaled by `factor`.
  Box dilate(double factor) const;
  bool contains(std::span<const double> x, double tol = 0.0) const;
  /// All 2^n corners, bit k of the corner index selects hi on axis k.
  std::vector<Vec> corners() const;
};

/// Standard dyadic cube 2^{-level} (index + [0,1)^n).
struct DyadicCube {
  int level = 0;
  std::vector<std::int64_t> index;

  std::size_t dim() const { return index.size(); }
  double side() const;
  Vec lo() const;
  double diameter() const;
  double volume() const;
  Box box() const;
  /// The 2^n children at level + 1, ordered by bit mask.
  std::vector<DyadicCube> children() const;
};

// ---------------------------------------------------------------------------
// Parabolic space R^{n-1} x R. Points carry time as their last coordinate.

/// d((x,s),(y,t)) = |x - y| + |s - t|^{1/2}
double parabolic_distance(std::span<const double> p, std::span<const double> q);

/// I1 x I2 with I1 a cube of side `side` in R^{n-1} and I2 = [t0, t0 + duration].
struct ParabolicBox {
  Vec space_lo;
  double side = 1.0;
  double t0 = 0.0;
  double duration = 1.0;
  /// True when duration == side^2 (member of the dyadic parabolic family or
  /// any parabolic box); dilations relax this.
  bool parabolic = true;

  /// n = spatial dimension + 1.
  std::size_t dim() const { return space_lo.size() + 1; }
  std::size_t space_dim() const { return space_lo.size(); }
  /// Diameter in the metric d, measured between opposite corners.
  double diameter() const;
  /// Euclidean diameter of the spatial cube I1.
  double space_diameter() const;
  double volume() const;
  /// C*I1 x C*I2, both concentric.
  ParabolicBox dilate(double factor) const;
  /// The same region as a Euclidean box in R^n.
  Box as_box() const;
  bool contains(std::span<const double> p, double tol = 0.0) const;
};

/// Member of D_j: I1 in D^{n-1}_j, I2 in D^1_{2j}.
struct DyadicParabolicBox {
  int level = 0;
  std::vector<std::int64_t> space_index;
  std::int64_t time_index = 0;

  ParabolicBox box() const;
  /// 2^{n-1} spatial halvings times 4 time quarterings.
  std::vector<DyadicParabolicBox> children() const;
};

// ---------------------------------------------------------------------------
// Planes, lines, maps

/// V = {x : x.e = t} with |e| = 1.
struct Hyperplane {
  Vec normal;
  double offset = 0.0;

  /// Normalizes `normal` (must be nonzero) and scales the offset to match.
  static Hyperplane from(Vec normal, double offset);

  std::size_t dim() const { return normal.size(); }
  double signed_distance(std::span<const double> x) const;
  /// Sign fixed so the first nonzero normal component is positive.
  Hyperplane canonical() const;
  /// Projection of the origin onto V.
  Vec foot() const;
};

/// {base + s*dir : s in [s0, s1]}, dir a unit vector.
struct LineSeg {
  Vec base;
  Vec dir;
  double s0 = 0.0;
  double s1 = 0.0;

  Vec point(double s) const;
  double length() const { return s1 - s0; }
};

/// A(x) = grad.x + intercept.
struct AffineMap {
  Vec grad;
  double intercept = 0.0;

  double operator()(std::span<const double> x) const;
  double lipschitz() const { return norm(grad); }
  /// Constant map on R^dim.
  static AffineMap constant(std::size_t dim, double value);
};

struct Simplex {
  std::vector<Vec> vertices;

  std::size_t dim() const { return vertices.empty() ? 0 : vertices.front().size(); }
  double volume() const;
  /// Barycentric coordinates of x (sum to 1).
  Vec barycentric(std::span<const double> x) const;
  bool contains(std::span<const double> x, double tol = 1e-12) const;
};

// ---------------------------------------------------------------------------
// Operations

inline constexpr double kDegenerateDet = 1e-10;

/// Unique point of V1 ∩ ... ∩ Vn in R^n. Throws ParallelOrDegenerate when
/// |det(e1..en)| < 1e-10.
Vec intersect_hyperplanes(std::span<const Hyperplane> planes);

/// min over n-element subsets of |det(normals)|.
double transversality(std::span<const Hyperplane> planes);

/// min{|(e1,t1) - (e2,t2)|, |(e1,t1) + (e2,t2)|}
double plane_metric(const Hyperplane& a, const Hyperplane& b);

/// Simplex bounded by n+1 planes; vertex i is the intersection of all planes
/// except plane i, so face i lies on plane i. Throws DegenerateSimplex when
/// some n-subset has transversality <= 1e-8.
Simplex simplex_from_planes(std::span<const Hyperplane> planes);

/// Parameter interval of {p + s*dir} inside the closed box, if nonempty.
std::optional<std::pair<double, double>> clip_line(const Box& box, std::span<const double> p,
                                                   std::span<const double> dir);

/// Orthonormal basis (n-1 vectors) of e^perp, deterministic in e.
std::vector<Vec> orthonormal_complement(std::span<const double> e);

/// Points where the plane crosses the edges of the box (vertices of the
/// convex polytope V ∩ box, possibly with repeats). Empty if no crossing.
std::vector<Vec> plane_box_section(const Hyperplane& plane, const Box& box);

/// Range of x.e over the box.
std::pair<double, double> support_interval(const Box& box, std::span<const double> e);

}  // namespace qrect
