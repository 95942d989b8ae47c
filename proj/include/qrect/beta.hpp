#pragma once
// Euclidean beta coefficients: on boxes, restricted to hyperplanes and lines,
// integral-geometric averages over the affine Grassmannian, and Carleson
// packing sums over dyadic trees.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "qrect/fitting.hpp"
#include "qrect/funcmodel.hpp"
#include "qrect/geometry.hpp"

namespace qrect {

struct QuadratureSpec {
  /// Midpoint nodes per axis on boxes (odd, >= 3). Minimax fits use the
  /// closed grid with 2*nodes+1 points per axis, which contains the midpoints.
  std::size_t nodes = 33;
  /// Nodes per axis on plane patches and line segments.
  std::size_t patch_nodes = 33;
  /// Planes or lines per integral-geometric coefficient.
  std::size_t mc_samples = 4096;
  std::uint64_t seed = 7;

  /// Throws Config on even or too-small node counts.
  void validate() const;
};

enum class BetaKind { Cube, Restricted, RestrictedInf, IntegralGeometric };
std::string_view to_string(BetaKind kind);

struct BetaRecord {
  Box box;  // region the coefficient was evaluated on (after dilation)
  double dilation = 1.0;
  BetaKind kind = BetaKind::Cube;
  double p = 2.0;
  double q = 0.0;
  std::size_t m = 0;
  double value = 0.0;
  double stderr_ = 0.0;
  AffineMap fit;
  std::size_t nodes = 0;    // quadrature nodes per axis
  std::size_t samples = 0;  // accepted Monte Carlo planes/lines
  std::uint64_t seed = 0;
};

/// Stable hash of a box's bit pattern, used to key per-box random streams.
std::uint64_t box_key(const Box& b);

/// [ diam^-n int_Q (|f - A|/diam)^p ]^{1/p}, minimized over affine A
/// (|grad A| <= L when given). p = inf gives sup |f - A| / diam.
BetaRecord beta_p_cube(const Field& f, const Box& box, double p, const QuadratureSpec& quad,
                       std::optional<double> L = std::nullopt);

/// Coefficient of f restricted to box ∩ V, normalized by diam(box)^m with
/// m = n - 1. Throws EmptyIntersection when V misses the box.
BetaRecord beta_p_restricted(const Field& f, const Box& box, const Hyperplane& plane, double p,
                             const QuadratureSpec& quad, std::optional<double> L = std::nullopt);

/// Same on the line {line.base + s line.dir}; the stored interval is ignored
/// and recomputed by clipping. m = 1.
BetaRecord beta_p_restricted(const Field& f, const Box& box, const LineSeg& line, double p,
                             const QuadratureSpec& quad, std::optional<double> L = std::nullopt);

/// [ mean over V in A_m(box) of beta_p(box, V)^q ]^{1/q} for m in {1, n-1, n}.
/// m = n returns beta_p_cube. m = 1 samples lines, m = n - 1 hyperplanes.
BetaRecord beta_integralgeometric(const Field& f, const Box& box, std::size_t m, double p, double q,
                                  const QuadratureSpec& quad);

/// sqrt(beta^{n-1}_{2,2}(box)^2 + beta^1_{inf,2}(box)^2), n >= 2.
struct CombinedBeta {
  double value = 0.0;
  BetaRecord planes;  // beta^{n-1}_{2,2}
  BetaRecord lines;   // beta^1_{inf,2}
};
CombinedBeta combined_beta_parts(const Field& f, const Box& box, const QuadratureSpec& quad);

/// Upper bound K on beta_p(Q)/L over boxes for L-Lipschitz f, any n and p.
inline constexpr double kBetaLipschitzBound = 0.5;

enum class Selector { Beta2Cube, BetaInfLines, Beta22Planes, Combined };
std::string_view to_string(Selector s);
std::optional<Selector> selector_from_string(std::string_view s);

struct ScaleRow {
  int level = 0;
  std::size_t cubes = 0;
  double contribution = 0.0;  // sum over the level of value^power |Q|
  double cumulative = 0.0;
  double ratio = 0.0;  // cumulative / (lipschitz |Q0|)
};

struct CubeRow {
  int level = 0;
  std::vector<std::int64_t> index;
  double value = 0.0;
  double stderr_ = 0.0;
};

struct CarlesonReport {
  std::string selector;
  double dilation = 1.0;
  int depth = 0;
  double power = 2.0;
  double lipschitz = 0.0;
  double root_volume = 0.0;
  std::vector<ScaleRow> scales;
  std::vector<CubeRow> cubes;
  double total = 0.0;
  double ratio = 0.0;
};

/// Sum of selector(C Q)^2 |Q| over dyadic Q in Q0 down to level(Q0) + J.
/// The Lipschitz constant defaults to lipschitz_estimate over C Q0.
CarlesonReport carleson_sum(const Field& f, const DyadicCube& q0, double C, int J, Selector sel,
                            const QuadratureSpec& quad, std::optional<double> lipschitz = std::nullopt);

void write_scales_csv(std::ostream& out, const CarlesonReport& r);
void write_cubes_csv(std::ostream& out, const CarlesonReport& r);

}  // namespace qrect
