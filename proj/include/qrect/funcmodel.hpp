#pragma once
// Evaluable scalar fields on R^n or on parabolic space R^{n-1} x R (time is
// the last coordinate). Fields are immutable and cheap to copy.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qrect/geometry.hpp"

namespace qrect {

class FieldImpl {
 public:
  virtual ~FieldImpl() = default;
  virtual double eval(std::span<const double> x) const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string id() const = 0;
  /// Declared Euclidean Lipschitz constant over the region, if known.
  virtual std::optional<double> lipschitz(const Box& region) const = 0;
  /// Declared constant K with |psi(p) - psi(q)| <= K d(p,q) on the region.
  virtual std::optional<double> parabolic_lipschitz(const Box&) const { return std::nullopt; }
  /// Declared bound on |psi(x,t) - psi(y,t)| / |x - y|.
  virtual std::optional<double> horizontal_lipschitz(const Box&) const { return std::nullopt; }
  virtual bool parabolic() const { return false; }
  /// Evaluation hull; nullopt means the field is global.
  virtual std::optional<Box> domain() const { return std::nullopt; }
};

class Field {
 public:
  Field() = default;
  explicit Field(std::shared_ptr<const FieldImpl> impl) : impl_(std::move(impl)) {}

  /// Throws OutOfDomain outside the evaluation hull of grid fields.
  double operator()(std::span<const double> x) const;
  double operator()(std::initializer_list<double> x) const {
    return (*this)(std::span<const double>(x.begin(), x.size()));
  }

  std::size_t dim() const { return impl_->dim(); }
  std::string id() const { return impl_->id(); }
  bool parabolic() const { return impl_->parabolic(); }
  std::optional<double> lipschitz(const Box& region) const { return impl_->lipschitz(region); }
  std::optional<double> parabolic_lipschitz(const Box& region) const {
    return impl_->parabolic_lipschitz(region);
  }
  std::optional<double> horizontal_lipschitz(const Box& region) const {
    return impl_->horizontal_lipschitz(region);
  }
  std::optional<Box> domain() const { return impl_->domain(); }
  explicit operator bool() const { return static_cast<bool>(impl_); }

 private:
  std::shared_ptr<const FieldImpl> impl_;
};

namespace catalog {

Field affine(Vec grad, double intercept);
/// x -> g(u.x) with g the piecewise-linear interpolant of (knots, values),
/// extended linearly past the end knots.
Field piecewise_linear(Vec knots, Vec values, Vec direction);
/// Ridge along the first axis with `breakpoints` random knots in (0,1) and
/// slopes uniform in [-1,1].
Field random_piecewise_linear(std::size_t n, std::size_t breakpoints, std::uint64_t seed);
/// |x - center|
Field cone(Vec center);
/// min_k |x - p_k|
Field distance_to_points(std::vector<Vec> points);
/// height * exp(1 - 1/(1 - s^2)) for s = |x - center|/radius < 1, else 0.
Field bump(Vec center, double radius, double height = 1.0);
/// |x|^2
Field square(std::size_t n);

enum class TimeTerm { Zero, Sin, Linear };

/// psi(x,t) = g(x) + h(t), g a field on R^{n-1}.
Field separable(Field spatial, TimeTerm time);
/// psi(x,t) = a(t).x + b(t), a_k(t) = cos(t + k), b(t) = sin(2t)/2.
Field product(std::size_t n);

}  // namespace catalog

/// Multilinear interpolation on an axis-aligned lattice.
struct GridSpec {
  Vec origin;
  Vec step;
  std::vector<std::size_t> count;
};

Field make_grid_field(GridSpec spec, std::vector<double> values);

/// Grid CSV: first row "d, count_1..count_d, step_1..step_d[, origin_1..origin_d]",
/// then the row-major values (last axis fastest), comma or newline separated.
Field load_grid_csv(const std::filesystem::path& path);

enum class Metric { Euclidean, Parabolic };

/// Max difference quotient over random pairs in the region and over
/// adjacent nodes of a lattice covering it.
double lipschitz_estimate(const Field& f, const Box& region, std::size_t samples,
                          std::uint64_t seed, Metric metric = Metric::Euclidean);

}  // namespace qrect
