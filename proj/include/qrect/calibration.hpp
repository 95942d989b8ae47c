#pragma once
// Constants frozen from tools/calibrate (default seeds and quadrature).
// Regenerate with `calibrate --write include/qrect/calibration.hpp`.

namespace qrect::calibration {

// plane-search acceptance multipliers
inline constexpr double kKappaB = 6.4;
inline constexpr double kKappaC = 89.0;
// S(J) / (L |Q0|) bounds for the ridge packing runs
inline constexpr double kCarleson1D = 0.06;
inline constexpr double kCarleson2D = 0.015;
// beta_inf^L(Q) <= kHolder beta_2^L(2Q)^{2/5}; kHolderFitted is the raw fit
inline constexpr double kHolder = 1.09;
inline constexpr double kHolderFitted = 1.0849818823273971;
// beta_2(cQ) <= kRec beta(CQ)
inline constexpr double kRec2 = 1.3;
inline constexpr double kRec3 = 4.7;

}  // namespace qrect::calibration
