#pragma once
// Coefficients of functions on parabolic space R^{n-1} x R: horizontal
// affinity, vertical oscillation, space-only affine beta_2 and beta_inf, the
// time difference-quotient integral, Carleson sums over the parabolic dyadic
// tree, the Hoelder-exponent comparison and a pointwise differentiability probe.
//
// All box integrals use the midpoint tensor rule with quad.nodes points per
// axis in space and in time; sup norms use the closed rule with
// 2*quad.nodes+1 points per axis.

#include <optional>
#include <ostream>
#include <vector>

#include "qrect/beta.hpp"

namespace qrect {

/// A(Q): time average of the best per-slice affine L2 error over I1, divided
/// by diam(I1)^2, square-rooted. L bounds the slice gradients.
double horizontal_affinity(const Field& psi, const ParabolicBox& box, const QuadratureSpec& quad,
                           std::optional<double> L = std::nullopt);

/// osc(Q): space average of the time variance at each x, divided by |I2|.
double vertical_osc(const Field& psi, const ParabolicBox& box, const QuadratureSpec& quad);

/// [ diam^{-(n+1)} int_Q (|psi - A(x)|/diam)^2 ]^{1/2}, one space-only affine
/// A over the whole box, diam in the metric d.
double parabolic_beta2(const Field& psi, const ParabolicBox& box, const QuadratureSpec& quad,
                       std::optional<double> L = std::nullopt);

/// The space-only L2 fit behind parabolic_beta2 (residual_sq is the mean
/// square over the midpoint cloud).
AffineFit parabolic_space_fit(const Field& psi, const ParabolicBox& box, const QuadratureSpec& quad,
                              std::optional<double> L = std::nullopt);

/// inf_A sup_Q |psi - A(x)| / diam.
double parabolic_beta_inf(const Field& psi, const ParabolicBox& box, const QuadratureSpec& quad,
                          std::optional<double> L = std::nullopt);

struct AffineCombination {
  AffineMap A;       // time average of the slice fits
  double residual_sq = 0.0;  // mean over Q of |psi - A(x)|^2
  double beta_h = 0.0;       // mean over t of the best slice L2 error
  double beta_v = 0.0;       // mean over x of the time variance
  double bound = 0.0;        // 6 beta_h + 4 beta_v
  /// residual_sq normalized like parabolic_beta2.
  double normalized = 0.0;
  bool holds = false;        // residual_sq <= bound + 1e-10
};

AffineCombination combine_affine_bound(const Field& psi, const ParabolicBox& box, const QuadratureSpec& quad,
                                       std::optional<double> L = std::nullopt);

struct DtQuotient {
  double value = 0.0;    // off-diagonal part + band
  double offdiag = 0.0;  // pairs of distinct time nodes
  double band = 0.0;     // diagonal cells, filled from neighbouring pairs
};

/// (1/|Q|) int_{I1} iint_{I2 x I2} |psi(x,t) - psi(x,s)|^2 / |s - t|^2.
DtQuotient dt_carleson_quotient(const Field& psi, const ParabolicBox& box, const QuadratureSpec& quad);

struct ParabolicCoefficients {
  ParabolicBox box;
  double affinity = 0.0;
  double affinity_L = 0.0;
  double osc = 0.0;
  double beta2 = 0.0;
  double beta2_L = 0.0;
  double beta_inf = 0.0;
  double beta_inf_L = 0.0;
  DtQuotient dt;
  double L = 0.0;
  std::size_t nodes = 0;
};

ParabolicCoefficients parabolic_coefficients(const Field& psi, const ParabolicBox& box,
                                             const QuadratureSpec& quad, double L);

void write_parabolic_coefficients_csv(std::ostream& out, const std::vector<ParabolicCoefficients>& rows);

enum class ParabolicSelector { Beta2, Beta2L, Affinity, AffinityL, Osc, BetaInf };
std::string_view to_string(ParabolicSelector s);
std::optional<ParabolicSelector> parabolic_selector_from_string(std::string_view s);

/// Sum of selector(C Q)^power |Q| over the parabolic dyadic tree below Q0,
/// power = 2 except n+3 for BetaInf. The ratio column is normalized by |Q0|.
/// L is required for the restricted selectors. Cube rows list the spatial
/// index followed by the time index.
CarlesonReport parabolic_carleson_sum(const Field& psi, const DyadicParabolicBox& q0, double C, int J,
                                      ParabolicSelector sel, const QuadratureSpec& quad,
                                      std::optional<double> L = std::nullopt);

struct HolderRow {
  ParabolicBox box;
  double beta2_L_double = 0.0;  // beta_2^L(2Q)
  double beta_inf_L = 0.0;      // beta_inf^L(Q)
  double ratio = 0.0;           // beta_inf_L / beta2_L_double^{2/(n+3)}
  bool violation = false;
};

struct HolderReport {
  double exponent = 0.0;  // 2/(n+3)
  double constant = 0.0;  // constant the rows are checked against
  double fitted = 0.0;    // smallest constant with no violation
  std::size_t violations = 0;
  std::vector<HolderRow> rows;
};

HolderReport holder_exponent_check(const Field& psi, const std::vector<ParabolicBox>& boxes, double L,
                                   double constant, const QuadratureSpec& quad);

/// Parabolic boxes with lower-left corners in [lo, hi]^n, sides 2^{-k} for k
/// uniform in [kmin, kmax], durations side^2.
std::vector<ParabolicBox> random_parabolic_boxes(std::size_t n, std::size_t count, double lo, double hi,
                                                 int kmin, int kmax, std::uint64_t seed);

struct DifferentiabilityProbe {
  Vec point;
  Vec gradient;  // A_p
  std::vector<double> radii;
  std::vector<double> eps;  // eps_p(r)
  std::optional<double> slope;  // least-squares slope of log eps against log r
};

/// A_p is the gradient of the L2 affine fit on the horizontal slice through p
/// over the cube of half-width min(radii); eps_p(r) is the sampled max of
/// |psi(q) - psi(p) - A_p(y - x)| / d(p,q) over `directions` points with
/// d(p,q) = r, stratified from purely vertical to purely horizontal.
DifferentiabilityProbe rademacher_probe(const Field& psi, const Vec& p, const std::vector<double>& radii,
                                        const QuadratureSpec& quad, std::size_t directions = 256);

void write_probe_csv(std::ostream& out, const DifferentiabilityProbe& probe);

}  // namespace qrect
