#pragma once
// Best affine / constant approximation of weighted samples in L^2, L^p and
// discrete L^inf, optionally with the gradient norm bounded by L.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "qrect/geometry.hpp"

namespace qrect {

/// Structure-of-arrays sample cloud. Coordinates are column-major:
/// coords[k * size() + i] is axis k of sample i.
class SampleSet {
 public:
  SampleSet() = default;
  SampleSet(std::size_t dim, std::size_t count)
      : dim_(dim), n_(count), coords_(dim * count), values_(count), weights_(count, 1.0) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return n_; }

  double& x(std::size_t k, std::size_t i) { return coords_[k * n_ + i]; }
  double x(std::size_t k, std::size_t i) const { return coords_[k * n_ + i]; }
  double& value(std::size_t i) { return values_[i]; }
  double value(std::size_t i) const { return values_[i]; }
  double& weight(std::size_t i) { return weights_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

  void set(std::size_t i, std::span<const double> point, double value, double weight);
  Vec point(std::size_t i) const;

  std::span<const double> coords() const { return coords_; }
  std::span<const double> axis(std::size_t k) const { return {coords_.data() + k * n_, n_}; }
  std::span<const double> values() const { return values_; }
  std::span<const double> weights() const { return weights_; }

  /// Copy holding only the samples with positive weight.
  SampleSet support() const;

 private:
  std::size_t dim_ = 0;
  std::size_t n_ = 0;
  std::vector<double> coords_;
  std::vector<double> values_;
  std::vector<double> weights_;
};

enum class FitNorm { L2, Lp, Linf };

struct AffineFit {
  AffineMap map;
  /// L2: sum w r^2 / sum w.  Lp: sum w |r|^p / sum w.  Linf: max |r| over
  /// samples with positive weight.
  double residual_sq = 0.0;
  FitNorm norm = FitNorm::L2;
  double p = 2.0;
  std::optional<double> constraint;
};

struct ConstantFit {
  double c = 0.0;
  double residual_sq = 0.0;
};

double total_weight(const SampleSet& s);

/// Weighted residuals f_i - A(x_i).
std::vector<double> residuals(const SampleSet& s, const AffineMap& a);

/// sum w |r|^p / sum w for finite p, max |r| over positive weights for p = inf.
double lp_objective(const SampleSet& s, const AffineMap& a, double p);

/// Throws RankDeficient when the weighted design is singular (relative pivot
/// below 1e-12 after diagonal scaling).
AffineFit fit_affine_l2(const SampleSet& s);

/// Same objective subject to |a| <= L.
AffineFit fit_affine_l2_constrained(const SampleSet& s, double L);

ConstantFit fit_constant_l2(const SampleSet& s);

/// min_A max_i |f_i - A(x_i)| over samples with positive weight, optionally
/// with |a| <= L.
AffineFit fit_affine_minimax(const SampleSet& s, std::optional<double> L = std::nullopt);

/// min_A sum w |f - A|^p for p in [1, inf]; p = 2 and p = inf dispatch to the
/// dedicated solvers. The gradient constraint is supported for p in {2, inf}.
AffineFit fit_affine_lp(const SampleSet& s, double p, std::optional<double> L = std::nullopt);

}  // namespace qrect
