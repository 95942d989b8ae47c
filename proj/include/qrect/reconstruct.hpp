#pragma once
// Global affine reconstruction on a cube: transversal plane selection with
// per-plane quasi-minimizers, the simplex-corner interpolant, and the
// comparison of beta_2(cQ) against the combined coefficient on CQ.

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "qrect/beta.hpp"
#include "qrect/calibration.hpp"
#include "qrect/errors.hpp"

namespace qrect {

/// sqrt(beta^{n-1}_{2,2}(box)^2 + beta^1_{inf,2}(box)^2)
double combined_beta(const Field& f, const Box& box, const QuadratureSpec& quad);

struct ReconstructParams {
  double c = 1.0 / 20.0;
  double C = 8.0;
  double eps = 0.05;
  /// Required transversality of the base planes; <= 0 takes the base simplex's own value.
  double tau = 0.0;
  double kappa_b = calibration::kKappaB;
  double kappa_c = calibration::kKappaC;
  std::size_t budget = 64;
  std::uint64_t seed = 7;
  /// Candidate line directions around e0 and lines per direction for the
  /// line-family integral.
  std::size_t directions = 8;
  std::size_t lines = 128;

  void validate(std::size_t n) const;
};

struct PlaneSelection {
  std::vector<Hyperplane> base;
  std::vector<Hyperplane> perturbed;
  /// beta_2(CQ, V'_j); fit maps act on frame coordinates of the plane
  /// (see plane_affine_at).
  std::vector<BetaRecord> fits;
  /// Vertex i of the simplex bounded by the perturbed planes (off plane i).
  std::vector<Vec> corners;
  /// |f(x_i) - A_j(x_i)| / diam(CQ), row i, column j (0 when j == i).
  std::vector<std::vector<double>> mismatch;
  double max_metric = 0.0;
  double max_beta = 0.0;
  double max_mismatch = 0.0;
  double tau_base = 0.0;
  double tau_perturbed = 0.0;
  /// beta^{n-1}_{2,2}(CQ) used as the acceptance reference.
  double reference = 0.0;
  std::size_t draw = 0;
  std::size_t draws_tried = 0;
  bool accepted = false;
};

class SelectionExhausted : public Error {
 public:
  explicit SelectionExhausted(PlaneSelection best)
      : Error(ErrorCode::BudgetExhausted, "no draw met the acceptance bounds"), best_(std::move(best)) {}
  const PlaneSelection& best() const noexcept { return best_; }

 private:
  PlaneSelection best_;
};

/// Regular simplex centred in `box` with circumradius side/4; facet i (plane
/// i) is opposite vertex i, normals point outward.
std::vector<Hyperplane> regular_simplex_planes(const Box& box);

/// Value of a restricted fit (frame coordinates of `plane`) at ambient x.
double plane_affine_at(const Hyperplane& plane, const AffineMap& fit, std::span<const double> x);

/// Randomized search for perturbed planes satisfying the metric, restricted
/// beta and corner-compatibility bounds. Throws SelectionExhausted with the
/// best draw when the budget runs out. `reference` skips recomputing
/// beta^{n-1}_{2,2}(CQ).
PlaneSelection select_transversal_planes(const Field& f, const Box& box, const ReconstructParams& par,
                                         const QuadratureSpec& quad,
                                         std::optional<double> reference = std::nullopt);

/// Affine map interpolating `values` at n+1 affinely independent corners.
AffineMap build_global_affine(std::span<const Vec> corners, std::span<const double> values);

struct LineFamilyEstimate {
  Vec direction;
  /// diam(cQ)^{1-n} int_{pi(cQ)} beta_inf(CQ, l_v)^2 dv
  double beta_integral = 0.0;
  /// same integral of (delta(v)/diam(CQ))^2, delta from the two boundary
  /// crossings of the simplex
  double delta_integral = 0.0;
  double shadow = 0.0;  // measure of pi(cQ)
  std::size_t lines = 0;
};

struct ReconstructionReport {
  AffineMap A;
  double beta2_direct = 0.0;       // beta_2(cQ), independent fit
  double beta2_constructed = 0.0;  // same normalization, residual of A
  double beta_combined = 0.0;      // beta(CQ)
  double beta22_planes = 0.0;
  double beta_inf2_lines = 0.0;
  double ratio = 0.0;  // beta2_direct / beta_combined, 0 when beta2_direct <= 1e-10
  double corner_residual = 0.0;
  LineFamilyEstimate family;
  std::optional<double> planar_beta2;  // n = 2 only
  std::optional<double> planar_gap;    // relative difference to beta2_direct
  ReconstructParams params;
  PlaneSelection selection;
  bool exhausted = false;
};

/// Full pipeline on `box`. When the plane search exhausts its budget the
/// report is still produced from the best draw and `exhausted` is set.
ReconstructionReport verify_form1(const Field& f, const Box& box, const ReconstructParams& par,
                                  const QuadratureSpec& quad);

void write_reconstruct_csv(std::ostream& out, const ReconstructionReport& r);
void write_planes_csv(std::ostream& out, const ReconstructionReport& r);

}  // namespace qrect
