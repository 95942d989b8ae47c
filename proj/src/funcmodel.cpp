#include "qrect/funcmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "qrect/errors.hpp"
#include "qrect/rng.hpp"

namespace qrect {

double Field::operator()(std::span<const double> x) const { return impl_->eval(x); }

namespace {

double max_norm_over_box(const Box& b) {
  double m = 0.0;
  for (const Vec& c : b.corners()) m = std::max(m, norm(c));
  return m;
}

class AffineField final : public FieldImpl {
 public:
  AffineField(Vec g, double b) : map_{std::move(g), b} {}
  double eval(std::span<const double> x) const override { return map_(x); }
  std::size_t dim() const override { return map_.grad.size(); }
  std::string id() const override { return "affine"; }
  std::optional<double> lipschitz(const Box&) const override { return map_.lipschitz(); }

 private:
  AffineMap map_;
};

class PiecewiseLinearField final : public FieldImpl {
 public:
  PiecewiseLinearField(Vec knots, Vec values, Vec dir)
      : knots_(std::move(knots)), values_(std::move(values)), dir_(std::move(dir)) {
    if (knots_.size() < 2 || knots_.size() != values_.size())
      throw Error(ErrorCode::Config, "piecewise_linear needs >= 2 knots with matching values");
    if (!std::is_sorted(knots_.begin(), knots_.end()))
      throw Error(ErrorCode::Config, "piecewise_linear knots must be increasing");
    for (std::size_t k = 0; k + 1 < knots_.size(); ++k)
      slopes_.push_back((values_[k + 1] - values_[k]) / (knots_[k + 1] - knots_[k]));
  }
  double eval(std::span<const double> x) const override {
    const double u = dot(dir_, x);
    auto it = std::upper_bound(knots_.begin(), knots_.end(), u);
    std::size_t seg = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    seg = std::min(seg, slopes_.size() - 1);
    return values_[seg] + slopes_[seg] * (u - knots_[seg]);
  }
  std::size_t dim() const override { return dir_.size(); }
  std::string id() const override { return "piecewise_linear"; }
  std::optional<double> lipschitz(const Box&) const override {
    double m = 0.0;
    for (double s : slopes_) m = std::max(m, std::fabs(s));
    return m * norm(dir_);
  }

 private:
  Vec knots_, values_, dir_, slopes_;
};

class ConeField final : public FieldImpl {
 public:
  explicit ConeField(Vec c) : c_(std::move(c)) {}
  double eval(std::span<const double> x) const override {
    double s = 0.0;
    for (std::size_t k = 0; k < c_.size(); ++k) s += (x[k] - c_[k]) * (x[k] - c_[k]);
    return std::sqrt(s);
  }
  std::size_t dim() const override { return c_.size(); }
  std::string id() const override { return "cone"; }
  std::optional<double> lipschitz(const Box&) const override { return 1.0; }

 private:
  Vec c_;
};

class PointSetDistance final : public FieldImpl {
 public:
  explicit PointSetDistance(std::vector<Vec> pts) : pts_(std::move(pts)) {
    if (pts_.empty()) throw Error(ErrorCode::Config, "distance_to_points needs a point");
  }
  double eval(std::span<const double> x) const override {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& p : pts_) {
      double s = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) s += (x[k] - p[k]) * (x[k] - p[k]);
      best = std::min(best, s);
    }
    return std::sqrt(best);
  }
  std::size_t dim() const override { return pts_.front().size(); }
  std::string id() const override { return "distance_to_points"; }
  std::optional<double> lipschitz(const Box&) const override { return 1.0; }

 private:
  std::vector<Vec> pts_;
};

// profile g(s) = exp(1 - 1/(1 - s^2)) on [0,1)
double bump_profile(double s) { return s < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0; }

double bump_slope(double s) {
  if (s >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return bump_profile(s) * 2.0 * s / (q * q);
}

// max |g'| by golden-section on the unimodal slope
double bump_max_slope() {
  double a = 0.0, b = 1.0;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  for (int it = 0; it < 200; ++it) {
    if (bump_slope(c) > bump_slope(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - r * (b - a);
    d = a + r * (b - a);
  }
  return bump_slope(0.5 * (a + b));
}

class BumpField final : public FieldImpl {
 public:
  BumpField(Vec c, double r, double h) : c_(std::move(c)), r_(r), h_(h) {
    if (!(r_ > 0.0)) throw Error(ErrorCode::Config, "bump radius must be positive");
  }
  double eval(std::span<const double> x) const override {
    double s = 0.0;
    for (std::size_t k = 0; k < c_.size(); ++k) s += (x[k] - c_[k]) * (x[k] - c_[k]);
    return h_ * bump_profile(std::sqrt(s) / r_);
  }
  std::size_t dim() const override { return c_.size(); }
  std::string id() const override { return "bump"; }
  std::optional<double> lipschitz(const Box&) const override {
    static const double slope = bump_max_slope();
    return std::fabs(h_) / r_ * slope * (1.0 + 1e-12);
  }

 private:
  Vec c_;
  double r_, h_;
};

class SquareField final : public FieldImpl {
 public:
  explicit SquareField(std::size_t n) : n_(n) {}
  double eval(std::span<const double> x) const override {
    double s = 0.0;
    for (std::size_t k = 0; k < n_; ++k) s += x[k] * x[k];
    return s;
  }
  std::size_t dim() const override { return n_; }
  std::string id() const override { return "square"; }
  std::optional<double> lipschitz(const Box& region) const override {
    return 2.0 * max_norm_over_box(region);
  }

 private:
  std::size_t n_;
};

Box spatial_part(const Box& b) {
  Vec lo(b.lo.begin(), b.lo.end() - 1);
  Vec side(b.side.begin(), b.side.end() - 1);
  return Box(std::move(lo), std::move(side));
}

class SeparableField final : public FieldImpl {
 public:
  SeparableField(Field g, catalog::TimeTerm h) : g_(std::move(g)), h_(h) {}
  double eval(std::span<const double> x) const override {
    const std::size_t m = g_.dim();
    const double t = x[m];
    double ht = 0.0;
    switch (h_) {
      case catalog::TimeTerm::Zero: ht = 0.0; break;
      case catalog::TimeTerm::Sin: ht = std::sin(t); break;
      case catalog::TimeTerm::Linear: ht = t; break;
    }
    return g_(x.first(m)) + ht;
  }
  std::size_t dim() const override { return g_.dim() + 1; }
  std::string id() const override {
    static constexpr const char* names[] = {"", "+sin_t", "+t"};
    return "separable(" + g_.id() + ")" + names[static_cast<int>(h_)];
  }
  bool parabolic() const override { return true; }
  std::optional<double> lipschitz(const Box& region) const override {
    const auto lg = g_.lipschitz(spatial_part(region));
    if (!lg) return std::nullopt;
    const double lh = h_ == catalog::TimeTerm::Zero ? 0.0 : 1.0;
    return std::hypot(*lg, lh);
  }
  std::optional<double> horizontal_lipschitz(const Box& region) const override {
    return g_.lipschitz(spatial_part(region));
  }
  std::optional<double> parabolic_lipschitz(const Box& region) const override {
    const auto lg = g_.lipschitz(spatial_part(region));
    if (!lg) return std::nullopt;
    // |h(t)-h(s)| <= |t-s| <= sqrt(T) |t-s|^{1/2} on a time window of length T
    const double lh = h_ == catalog::TimeTerm::Zero ? 0.0 : std::sqrt(region.side.back());
    return std::max(*lg, lh);
  }

 private:
  Field g_;
  catalog::TimeTerm h_;
};

class ProductField final : public FieldImpl {
 public:
  explicit ProductField(std::size_t n) : n_(n) {
    if (n_ < 2) throw Error(ErrorCode::Config, "product field needs n >= 2");
  }
  double eval(std::span<const double> x) const override {
    const double t = x[n_ - 1];
    double v = 0.5 * std::sin(2.0 * t);
    for (std::size_t k = 0; k + 1 < n_; ++k) v += std::cos(t + static_cast<double>(k)) * x[k];
    return v;
  }
  std::size_t dim() const override { return n_; }
  std::string id() const override { return "product"; }
  bool parabolic() const override { return true; }
  std::optional<double> lipschitz(const Box& region) const override {
    const double ax = std::sqrt(static_cast<double>(n_ - 1));
    return std::hypot(ax, ax * max_norm_over_box(spatial_part(region)) + 1.0);
  }
  std::optional<double> horizontal_lipschitz(const Box&) const override {
    return std::sqrt(static_cast<double>(n_ - 1));
  }
  std::optional<double> parabolic_lipschitz(const Box& region) const override {
    const double ax = std::sqrt(static_cast<double>(n_ - 1));
    const double lt = ax * max_norm_over_box(spatial_part(region)) + 1.0;
    return std::max(ax, lt * std::sqrt(region.side.back()));
  }

 private:
  std::size_t n_;
};

class GridField final : public FieldImpl {
 public:
  GridField(GridSpec spec, std::vector<double> values) : spec_(std::move(spec)), values_(std::move(values)) {
    const std::size_t d = spec_.count.size();
    if (d == 0 || spec_.origin.size() != d || spec_.step.size() != d)
      throw Error(ErrorCode::Config, "grid spec dimensions disagree");
    std::size_t total = 1;
    for (std::size_t k = 0; k < d; ++k) {
      if (spec_.count[k] < 2) throw Error(ErrorCode::Config, "grid needs >= 2 nodes per axis");
      if (!(spec_.step[k] > 0.0)) throw Error(ErrorCode::Config, "grid steps must be positive");
      total *= spec_.count[k];
    }
    if (values_.size() != total)
      throw Error(ErrorCode::Config, "grid expects " + std::to_string(total) + " values, got " +
                                         std::to_string(values_.size()));
    strides_.assign(d, 1);
    for (std::size_t k = d - 1; k > 0; --k) strides_[k - 1] = strides_[k] * spec_.count[k];
    // largest adjacent difference quotient per axis
    axis_slope_.assign(d, 0.0);
    for (std::size_t i = 0; i < total; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        const std::size_t coord = (i / strides_[k]) % spec_.count[k];
        if (coord + 1 >= spec_.count[k]) continue;
        const double q = std::fabs(values_[i + strides_[k]] - values_[i]) / spec_.step[k];
        axis_slope_[k] = std::max(axis_slope_[k], q);
      }
    }
  }

  double eval(std::span<const double> x) const override {
    const std::size_t d = spec_.count.size();
    std::vector<std::size_t> cell(d);
    std::vector<double> frac(d);
    for (std::size_t k = 0; k < d; ++k) {
      const double u = (x[k] - spec_.origin[k]) / spec_.step[k];
      const double last = static_cast<double>(spec_.count[k] - 1);
      if (u < -1e-12 || u > last + 1e-12)
        throw Error(ErrorCode::OutOfDomain, "point outside grid lattice hull on axis " + std::to_string(k));
      const double uc = std::clamp(u, 0.0, last);
      std::size_t c = static_cast<std::size_t>(std::floor(uc));
      if (c + 1 >= spec_.count[k]) c = spec_.count[k] - 2;
      cell[k] = c;
      frac[k] = uc - static_cast<double>(c);
    }
    double v = 0.0;
    for (std::size_t m = 0; m < (std::size_t{1} << d); ++m) {
      double w = 1.0;
      std::size_t idx = 0;
      for (std::size_t k = 0; k < d; ++k) {
        const bool up = (m >> k) & 1U;
        w *= up ? frac[k] : 1.0 - frac[k];
        idx += (cell[k] + (up ? 1 : 0)) * strides_[k];
      }
      if (w != 0.0) v += w * values_[idx];
    }
    return v;
  }
  std::size_t dim() const override { return spec_.count.size(); }
  std::string id() const override { return "grid"; }
  std::optional<double> lipschitz(const Box&) const override {
    double s = 0.0;
    for (double q : axis_slope_) s += q * q;
    return std::sqrt(s);
  }
  std::optional<Box> domain() const override {
    Vec side(dim());
    for (std::size_t k = 0; k < dim(); ++k) side[k] = spec_.step[k] * static_cast<double>(spec_.count[k] - 1);
    return Box(spec_.origin, side);
  }

 private:
  GridSpec spec_;
  std::vector<double> values_;
  std::vector<std::size_t> strides_;
  Vec axis_slope_;
};

}  // namespace

namespace catalog {

Field affine(Vec grad, double intercept) {
  return Field(std::make_shared<AffineField>(std::move(grad), intercept));
}

Field piecewise_linear(Vec knots, Vec values, Vec direction) {
  return Field(std::make_shared<PiecewiseLinearField>(std::move(knots), std::move(values),
                                                      std::move(direction)));
}

Field random_piecewise_linear(std::size_t n, std::size_t breakpoints, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec inner(breakpoints);
  for (auto& k : inner) k = unit(rng);
  std::sort(inner.begin(), inner.end());
  Vec knots{-1e6};
  knots.insert(knots.end(), inner.begin(), inner.end());
  knots.push_back(1e6);
  // one slope per segment; values follow from integrating the slopes from 0
  Vec slopes(knots.size() - 1);
  for (auto& s : slopes) s = 2.0 * unit(rng) - 1.0;
  Vec values(knots.size());
  // anchor g(inner[0]) = 0
  values[1] = 0.0;
  values[0] = values[1] - slopes[0] * (knots[1] - knots[0]);
  for (std::size_t k = 1; k + 1 < knots.size(); ++k)
    values[k + 1] = values[k] + slopes[k] * (knots[k + 1] - knots[k]);
  Vec dir(n, 0.0);
  dir[0] = 1.0;
  return piecewise_linear(std::move(knots), std::move(values), std::move(dir));
}

Field cone(Vec center) { return Field(std::make_shared<ConeField>(std::move(center))); }

Field distance_to_points(std::vector<Vec> points) {
  return Field(std::make_shared<PointSetDistance>(std::move(points)));
}

Field bump(Vec center, double radius, double height) {
  return Field(std::make_shared<BumpField>(std::move(center), radius, height));
}

Field square(std::size_t n) { return Field(std::make_shared<SquareField>(n)); }

Field separable(Field spatial, TimeTerm time) {
  return Field(std::make_shared<SeparableField>(std::move(spatial), time));
}

Field product(std::size_t n) { return Field(std::make_shared<ProductField>(n)); }

}  // namespace catalog

Field make_grid_field(GridSpec spec, std::vector<double> values) {
  return Field(std::make_shared<GridField>(std::move(spec), std::move(values)));
}

Field load_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open grid file '" + path.string() + "'");
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorCode::Config, "grid file '" + path.string() + "' is empty");
  auto parse_row = [&](const std::string& text, std::size_t line_no) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto first = cell.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      try {
        std::size_t used = 0;
        out.push_back(std::stod(cell.substr(first), &used));
      } catch (const std::exception&) {
        throw Error(ErrorCode::Config, path.string() + ":" + std::to_string(line_no) +
                                           ": not a number: '" + cell + "'");
      }
    }
    return out;
  };
  const auto head = parse_row(header, 1);
  if (head.empty() || head[0] < 1 || head[0] != std::floor(head[0]))
    throw Error(ErrorCode::Config, path.string() + ":1: header must start with the dimension");
  const auto d = static_cast<std::size_t>(head[0]);
  if (head.size() != 1 + 2 * d && head.size() != 1 + 3 * d)
    throw Error(ErrorCode::Config, path.string() + ":1: header must hold d, d counts, d steps and optional d origins");
  GridSpec spec;
  for (std::size_t k = 0; k < d; ++k) spec.count.push_back(static_cast<std::size_t>(head[1 + k]));
  spec.step.assign(head.begin() + 1 + static_cast<long>(d), head.begin() + 1 + 2 * static_cast<long>(d));
  spec.origin = head.size() == 1 + 3 * d
                    ? Vec(head.begin() + 1 + 2 * static_cast<long>(d), head.end())
                    : Vec(d, 0.0);
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = parse_row(line, line_no);
    values.insert(values.end(), row.begin(), row.end());
  }
  return make_grid_field(std::move(spec), std::move(values));
}

double lipschitz_estimate(const Field& f, const Box& region, std::size_t samples,
                          std::uint64_t seed, Metric metric) {
  if (samples < 2) throw Error(ErrorCode::Config, "lipschitz_estimate needs >= 2 samples");
  const std::size_t n = region.dim();
  auto dist = [&](std::span<const double> p, std::span<const double> q) {
    if (metric == Metric::Parabolic) return parabolic_distance(p, q);
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += (p[k] - q[k]) * (p[k] - q[k]);
    return std::sqrt(s);
  };
  double best = 0.0;
  auto consider = [&](const Vec& p, const Vec& q) {
    const double d = dist(p, q);
    if (d > 1e-14) best = std::max(best, std::fabs(f(p) - f(q)) / d);
  };

  Rng rng(derive_seed(seed, {tag(StreamTag::Lipschitz)}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto random_point = [&] {
    Vec p(n);
    for (std::size_t k = 0; k < n; ++k) p[k] = region.lo[k] + region.side[k] * unit(rng);
    return p;
  };
  // long pairs sample directions, short pairs resolve kinks
  const double short_scale = 1e-3 * region.diameter();
  for (std::size_t i = 0; i < samples; ++i) {
    const Vec p = random_point();
    Vec q;
    if (i % 2 == 0) {
      q = random_point();
    } else {
      const Vec u = uniform_sphere(rng, n);
      q = p;
      const double r = short_scale * unit(rng);
      for (std::size_t k = 0; k < n; ++k)
        q[k] = std::clamp(p[k] + r * u[k], region.lo[k], region.lo[k] + region.side[k]);
    }
    consider(p, q);
  }

  const auto m = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(samples), 1.0 / static_cast<double>(n)))));
  std::vector<std::size_t> idx(n, 0);
  auto node = [&](const std::vector<std::size_t>& at) {
    Vec p(n);
    for (std::size_t k = 0; k < n; ++k)
      p[k] = region.lo[k] + region.side[k] * static_cast<double>(at[k]) / static_cast<double>(m - 1);
    return p;
  };
  while (true) {
    const Vec p = node(idx);
    for (std::size_t k = 0; k < n; ++k) {
      if (idx[k] + 1 >= m) continue;
      auto nb = idx;
      ++nb[k];
      consider(p, node(nb));
    }
    std::size_t k = 0;
    while (k < n && ++idx[k] == m) idx[k++] = 0;
    if (k == n) break;
  }
  return best;
}

}  // namespace qrect
