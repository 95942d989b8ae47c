#include "qrect/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qrect/errors.hpp"

namespace qrect {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// ---------------------------------------------------------------------------

Box::Box(Vec lo_, Vec side_) : lo(std::move(lo_)), side(std::move(side_)) {
  if (lo.size() != side.size())
    throw Error(ErrorCode::DegenerateBox, "corner and side dimensions differ");
  for (double s : side)
    if (!(s > 0.0)) throw Error(ErrorCode::DegenerateBox, "box side lengths must be positive");
}

Box Box::cube(const Vec& lo, double side) { return Box(lo, Vec(lo.size(), side)); }

Box Box::interval_power(double a, double b, std::size_t n) {
  return Box(Vec(n, a), Vec(n, b - a));
}

Vec Box::center() const {
  Vec c(dim());
  for (std::size_t k = 0; k < dim(); ++k) c[k] = lo[k] + 0.5 * side[k];
  return c;
}

Vec Box::hi() const {
  Vec h(dim());
  for (std::size_t k = 0; k < dim(); ++k) h[k] = lo[k] + side[k];
  return h;
}

double Box::diameter() const { return norm(side); }

double Box::volume() const {
  return std::accumulate(side.begin(), side.end(), 1.0, std::multiplies<>());
}

Box Box::dilate(double factor) const {
  const Vec c = center();
  Vec l(dim()), s(dim());
  for (std::size_t k = 0; k < dim(); ++k) {
    s[k] = side[k] * factor;
    l[k] = c[k] - 0.5 * s[k];
  }
  return Box(std::move(l), std::move(s));
}

bool Box::contains(std::span<const double> x, double tol) const {
  for (std::size_t k = 0; k < dim(); ++k)
    if (x[k] < lo[k] - tol || x[k] > lo[k] + side[k] + tol) return false;
  return true;
}

std::vector<Vec> Box::corners() const {
  const std::size_t n = dim();
  std::vector<Vec> out(std::size_t{1} << n, Vec(n));
  for (std::size_t m = 0; m < out.size(); ++m)
    for (std::size_t k = 0; k < n; ++k) out[m][k] = lo[k] + (((m >> k) & 1U) ? side[k] : 0.0);
  return out;
}

// ---------------------------------------------------------------------------

double DyadicCube::side() const { return std::ldexp(1.0, -level); }

Vec DyadicCube::lo() const {
  Vec x(dim());
  for (std::size_t k = 0; k < dim(); ++k) x[k] = static_cast<double>(index[k]) * side();
  return x;
}

double DyadicCube::diameter() const { return std::sqrt(static_cast<double>(dim())) * side(); }

double DyadicCube::volume() const { return std::ldexp(1.0, -level * static_cast<int>(dim())); }

Box DyadicCube::box() const { return Box::cube(lo(), side()); }

std::vector<DyadicCube> DyadicCube::children() const {
  const std::size_t n = dim();
  std::vector<DyadicCube> out;
  out.reserve(std::size_t{1} << n);
  for (std::size_t m = 0; m < (std::size_t{1} << n); ++m) {
    DyadicCube c{level + 1, index};
    for (std::size_t k = 0; k < n; ++k) c.index[k] = 2 * index[k] + static_cast<std::int64_t>((m >> k) & 1U);
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------

double parabolic_distance(std::span<const double> p, std::span<const double> q) {
  const std::size_t n = p.size();
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) s += (p[k] - q[k]) * (p[k] - q[k]);
  return std::sqrt(s) + std::sqrt(std::fabs(p[n - 1] - q[n - 1]));
}

double ParabolicBox::diameter() const {
  return space_diameter() + std::sqrt(duration);
}

double ParabolicBox::space_diameter() const {
  return side * std::sqrt(static_cast<double>(space_dim()));
}

double ParabolicBox::volume() const {
  return std::pow(side, static_cast<double>(space_dim())) * duration;
}

ParabolicBox ParabolicBox::dilate(double factor) const {
  ParabolicBox out = *this;
  const double new_side = side * factor;
  for (auto& x : out.space_lo) x = x + 0.5 * side - 0.5 * new_side;
  out.side = new_side;
  const double mid = t0 + 0.5 * duration;
  out.duration = duration * factor;
  out.t0 = mid - 0.5 * out.duration;
  out.parabolic = std::fabs(out.duration - out.side * out.side) <= 1e-12 * out.duration;
  return out;
}

Box ParabolicBox::as_box() const {
  Vec lo = space_lo;
  lo.push_back(t0);
  Vec sides(space_dim(), side);
  sides.push_back(duration);
  return Box(std::move(lo), std::move(sides));
}

bool ParabolicBox::contains(std::span<const double> p, double tol) const {
  return as_box().contains(p, tol);
}

ParabolicBox DyadicParabolicBox::box() const {
  ParabolicBox b;
  b.side = std::ldexp(1.0, -level);
  b.space_lo.resize(space_index.size());
  for (std::size_t k = 0; k < space_index.size(); ++k)
    b.space_lo[k] = static_cast<double>(space_index[k]) * b.side;
  b.duration = std::ldexp(1.0, -2 * level);
  b.t0 = static_cast<double>(time_index) * b.duration;
  b.parabolic = true;
  return b;
}

std::vector<DyadicParabolicBox> DyadicParabolicBox::children() const {
  const std::size_t m = space_index.size();
  std::vector<DyadicParabolicBox> out;
  out.reserve((std::size_t{1} << m) * 4);
  for (std::int64_t q = 0; q < 4; ++q) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
      DyadicParabolicBox c{level + 1, space_index, 4 * time_index + q};
      for (std::size_t k = 0; k < m; ++k)
        c.space_index[k] = 2 * space_index[k] + static_cast<std::int64_t>((mask >> k) & 1U);
      out.push_back(std::move(c));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Hyperplane Hyperplane::from(Vec normal, double offset) {
  const double len = norm(normal);
  if (!(len > 0.0)) throw Error(ErrorCode::ParallelOrDegenerate, "zero normal vector");
  for (auto& x : normal) x /= len;
  return Hyperplane{std::move(normal), offset / len};
}

double Hyperplane::signed_distance(std::span<const double> x) const { return dot(normal, x) - offset; }

Hyperplane Hyperplane::canonical() const {
  for (double c : normal) {
    if (c > 0.0) return *this;
    if (c < 0.0) {
      Hyperplane h{normal, -offset};
      for (auto& x : h.normal) x = -x;
      return h;
    }
  }
  return *this;
}

Vec Hyperplane::foot() const {
  Vec p = normal;
  for (auto& x : p) x *= offset;
  return p;
}

Vec LineSeg::point(double s) const {
  Vec p = base;
  for (std::size_t k = 0; k < p.size(); ++k) p[k] += s * dir[k];
  return p;
}

double AffineMap::operator()(std::span<const double> x) const { return dot(grad, x) + intercept; }

AffineMap AffineMap::constant(std::size_t dim, double value) { return AffineMap{Vec(dim, 0.0), value}; }

namespace {

double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t k = 2; k <= n; ++k) f *= static_cast<double>(k);
  return f;
}

Eigen::MatrixXd edge_matrix(const std::vector<Vec>& v) {
  const std::size_t n = v.front().size();
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = v[i + 1][k] - v[0][k];
  return m;
}

/// Visits every k-subset of {0..m-1} in lexicographic order.
template <class Fn>
void for_each_subset(std::size_t m, std::size_t k, Fn&& fn) {
  if (k > m) return;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    fn(std::span<const std::size_t>(idx));
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == m - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

double normal_det(std::span<const Hyperplane> planes, std::span<const std::size_t> which) {
  const std::size_t n = planes.front().dim();
  Eigen::MatrixXd m(n, n);
  for (std::size_t r = 0; r < which.size(); ++r)
    for (std::size_t c = 0; c < n; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = planes[which[r]].normal[c];
  return m.determinant();
}

}  // namespace

double Simplex::volume() const {
  const std::size_t n = dim();
  if (vertices.size() != n + 1) return 0.0;
  return std::fabs(edge_matrix(vertices).determinant()) / factorial(n);
}

Vec Simplex::barycentric(std::span<const double> x) const {
  const std::size_t n = dim();
  Eigen::MatrixXd m = edge_matrix(vertices);
  Eigen::VectorXd rhs(n);
  for (std::size_t k = 0; k < n; ++k) rhs(static_cast<Eigen::Index>(k)) = x[k] - vertices[0][k];
  const Eigen::VectorXd lam = m.partialPivLu().solve(rhs);
  Vec out(n + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i + 1] = lam(static_cast<Eigen::Index>(i));
    sum += out[i + 1];
  }
  out[0] = 1.0 - sum;
  return out;
}

bool Simplex::contains(std::span<const double> x, double tol) const {
  const Vec b = barycentric(x);
  return std::all_of(b.begin(), b.end(), [tol](double v) { return v >= -tol; });
}

Vec intersect_hyperplanes(std::span<const Hyperplane> planes) {
  if (planes.empty()) throw Error(ErrorCode::ParallelOrDegenerate, "no planes given");
  const std::size_t n = planes.front().dim();
  if (planes.size() != n)
    throw Error(ErrorCode::ParallelOrDegenerate, "need exactly n planes in R^n");
  Eigen::MatrixXd m(n, n);
  Eigen::VectorXd rhs(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = planes[r].normal[c];
    rhs(static_cast<Eigen::Index>(r)) = planes[r].offset;
  }
  const auto lu = m.partialPivLu();
  if (std::fabs(lu.determinant()) < kDegenerateDet)
    throw Error(ErrorCode::ParallelOrDegenerate, "normals are (nearly) linearly dependent");
  const Eigen::VectorXd x = lu.solve(rhs);
  return Vec(x.data(), x.data() + n);
}

double transversality(std::span<const Hyperplane> planes) {
  if (planes.empty()) return 0.0;
  const std::size_t n = planes.front().dim();
  double tau = std::numeric_limits<double>::infinity();
  for_each_subset(planes.size(), n, [&](std::span<const std::size_t> which) {
    tau = std::min(tau, std::fabs(normal_det(planes, which)));
  });
  return std::isfinite(tau) ? tau : 0.0;
}

double plane_metric(const Hyperplane& a, const Hyperplane& b) {
  double minus = (a.offset - b.offset) * (a.offset - b.offset);
  double plus = (a.offset + b.offset) * (a.offset + b.offset);
  for (std::size_t k = 0; k < a.dim(); ++k) {
    minus += (a.normal[k] - b.normal[k]) * (a.normal[k] - b.normal[k]);
    plus += (a.normal[k] + b.normal[k]) * (a.normal[k] + b.normal[k]);
  }
  return std::sqrt(std::min(minus, plus));
}

Simplex simplex_from_planes(std::span<const Hyperplane> planes) {
  if (planes.empty()) throw Error(ErrorCode::DegenerateSimplex, "no planes given");
  const std::size_t n = planes.front().dim();
  if (planes.size() != n + 1) throw Error(ErrorCode::DegenerateSimplex, "need n+1 planes in R^n");
  if (transversality(planes) <= 1e-8)
    throw Error(ErrorCode::DegenerateSimplex, "some n-subset of the planes is not transversal");
  Simplex s;
  s.vertices.reserve(n + 1);
  std::vector<Hyperplane> others;
  for (std::size_t i = 0; i <= n; ++i) {
    others.clear();
    for (std::size_t j = 0; j <= n; ++j)
      if (j != i) others.push_back(planes[j]);
    s.vertices.push_back(intersect_hyperplanes(others));
  }
  if (!(s.volume() > 0.0)) throw Error(ErrorCode::DegenerateSimplex, "zero-volume simplex");
  return s;
}

std::optional<std::pair<double, double>> clip_line(const Box& box, std::span<const double> p,
                                                   std::span<const double> dir) {
  double s0 = -std::numeric_limits<double>::infinity();
  double s1 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < box.dim(); ++k) {
    const double lo = box.lo[k];
    const double hi = box.lo[k] + box.side[k];
    if (std::fabs(dir[k]) < 1e-300) {
      if (p[k] < lo || p[k] > hi) return std::nullopt;
      continue;
    }
    double a = (lo - p[k]) / dir[k];
    double b = (hi - p[k]) / dir[k];
    if (a > b) std::swap(a, b);
    s0 = std::max(s0, a);
    s1 = std::min(s1, b);
  }
  if (!(s1 > s0)) return std::nullopt;
  return std::make_pair(s0, s1);
}

std::vector<Vec> orthonormal_complement(std::span<const double> e) {
  const std::size_t n = e.size();
  std::size_t skip = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (std::fabs(e[k]) > std::fabs(e[skip])) skip = k;
  std::vector<Vec> basis;
  basis.reserve(n - 1);
  for (std::size_t k = 0; k < n; ++k) {
    if (k == skip) continue;
    Vec v(n, 0.0);
    v[k] = 1.0;
    const double pe = dot(v, e);
    for (std::size_t i = 0; i < n; ++i) v[i] -= pe * e[i];
    for (const Vec& b : basis) {
      const double pb = dot(v, b);
      for (std::size_t i = 0; i < n; ++i) v[i] -= pb * b[i];
    }
    const double len = norm(v);
    for (auto& x : v) x /= len;
    basis.push_back(std::move(v));
  }
  return basis;
}

std::vector<Vec> plane_box_section(const Hyperplane& plane, const Box& box) {
  const std::size_t n = box.dim();
  const auto corners = box.corners();
  std::vector<double> dist(corners.size());
  for (std::size_t m = 0; m < corners.size(); ++m) dist[m] = plane.signed_distance(corners[m]);
  std::vector<Vec> out;
  for (std::size_t m = 0; m < corners.size(); ++m) {
    for (std::size_t k = 0; k < n; ++k) {
      if ((m >> k) & 1U) continue;
      const std::size_t m2 = m | (std::size_t{1} << k);
      const double d0 = dist[m], d1 = dist[m2];
      if ((d0 < 0.0 && d1 < 0.0) || (d0 > 0.0 && d1 > 0.0)) continue;
      if (d0 == d1) {  // edge lies in the plane
        out.push_back(corners[m]);
        out.push_back(corners[m2]);
        continue;
      }
      const double s = d0 / (d0 - d1);
      Vec x = corners[m];
      x[k] += s * box.side[k];
      out.push_back(std::move(x));
    }
  }
  return out;
}

std::pair<double, double> support_interval(const Box& box, std::span<const double> e) {
  double lo = 0.0, hi = 0.0;
  for (std::size_t k = 0; k < box.dim(); ++k) {
    const double a = e[k] * box.lo[k];
    const double b = e[k] * (box.lo[k] + box.side[k]);
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
  return {lo, hi};
}

}  // namespace qrect
