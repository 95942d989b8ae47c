#pragma once
// Monte Carlo sampling of the translation-invariant measures on the affine
// Grassmannians A_1 (lines) and A_{n-1} (hyperplanes).
//
// Planes are parametrized by (e, t) with e uniform on S^{n-1}; lines by
// (e, v) with v in e^perp. The normalizing constants are fixed in closed form
// by requiring that the planes (lines) meeting the open unit ball have measure
// one. With that calibration, a hyperplane with normal e drawn among those
// meeting a region K carries weight width_e(K) / 2 and a line with direction e
// carries weight |pi_e(K)| / omega_{n-1}, so (1/N) sum(weight * g) estimates
// the integral of g over the planes (lines) meeting K.

#include <cstdint>
#include <vector>

#include "qrect/geometry.hpp"

namespace qrect {

struct WeightedPlane {
  Hyperplane plane;
  double weight = 0.0;
};

struct WeightedLine {
  LineSeg line;  // already clipped to the sampling region
  double weight = 0.0;
};

struct MeasureEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

/// H^{n-1}(S^{n-1}) = 2 pi^{n/2} / Gamma(n/2)
double sphere_area(std::size_t n);
/// Lebesgue measure of the unit ball in R^m (omega_0 = 1).
double unit_ball_volume(std::size_t m);
/// H^{n-1} of the orthogonal projection of the box onto e^perp.
double shadow_area(const Box& box, std::span<const double> e);

std::vector<WeightedPlane> sample_hyperplanes(const Box& region, std::size_t count,
                                              std::uint64_t seed);
std::vector<WeightedLine> sample_lines(const Box& region, std::size_t count, std::uint64_t seed);

/// eta_{n-1}(A_{n-1}(region)) and eta_1(A_1(region)).
MeasureEstimate hyperplane_measure(const Box& region, std::size_t count, std::uint64_t seed);
MeasureEstimate line_measure(const Box& region, std::size_t count, std::uint64_t seed);

/// Hit-or-miss estimate of eta(A(B(center, radius))) using planes (lines)
/// drawn from an enclosing box.
MeasureEstimate hyperplane_measure_of_ball(const Vec& center, double radius, const Box& enclosing,
                                           std::size_t count, std::uint64_t seed);
MeasureEstimate line_measure_of_ball(const Vec& center, double radius, const Box& enclosing,
                                     std::size_t count, std::uint64_t seed);

}  // namespace qrect
