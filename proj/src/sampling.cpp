#include "qrect/sampling.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "qrect/errors.hpp"
#include "qrect/rng.hpp"

namespace qrect {

double sphere_area(std::size_t n) {
  const double h = 0.5 * static_cast<double>(n);
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

double unit_ball_volume(std::size_t m) {
  const double h = 0.5 * static_cast<double>(m);
  return std::pow(std::numbers::pi, h) / std::tgamma(h + 1.0);
}

double shadow_area(const Box& box, std::span<const double> e) {
  const std::size_t n = box.dim();
  double area = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double face = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != k) face *= box.side[j];
    area += std::fabs(e[k]) * face;
  }
  return area;
}

namespace {

MeasureEstimate summarize(const std::vector<double>& values) {
  MeasureEstimate m;
  m.samples = values.size();
  if (values.empty()) return m;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  if (values.size() > 1) var /= static_cast<double>(values.size() - 1);
  m.value = mean;
  m.stderr_ = std::sqrt(var / static_cast<double>(values.size()));
  return m;
}

/// One line with direction e, base uniform over the shadow of the box.
/// Returns the unclipped base point on e^perp and the clip interval.
std::pair<Vec, std::pair<double, double>> draw_line_in_shadow(const Box& region, const Vec& e,
                                                              Rng& rng) {
  const auto frame = orthonormal_complement(e);
  const std::size_t m = frame.size();
  Vec lo(m, std::numeric_limits<double>::infinity());
  Vec hi(m, -std::numeric_limits<double>::infinity());
  for (const Vec& c : region.corners()) {
    for (std::size_t k = 0; k < m; ++k) {
      const double u = dot(c, frame[k]);
      lo[k] = std::min(lo[k], u);
      hi[k] = std::max(hi[k], u);
    }
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = region.dim();
  for (;;) {
    Vec p(n, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const double u = lo[k] + (hi[k] - lo[k]) * unit(rng);
      for (std::size_t i = 0; i < n; ++i) p[i] += u * frame[k][i];
    }
    if (auto clip = clip_line(region, p, e)) return {std::move(p), *clip};
  }
}

}  // namespace

std::vector<WeightedPlane> sample_hyperplanes(const Box& region, std::size_t count,
                                              std::uint64_t seed) {
  Rng rng(derive_seed(seed, {tag(StreamTag::HyperplaneSampler)}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<WeightedPlane> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vec e = uniform_sphere(rng, region.dim());
    const auto [lo, hi] = support_interval(region, e);
    const double t = lo + (hi - lo) * unit(rng);
    out.push_back({Hyperplane{std::move(e), t}, 0.5 * (hi - lo)});
  }
  return out;
}

std::vector<WeightedLine> sample_lines(const Box& region, std::size_t count, std::uint64_t seed) {
  const std::size_t n = region.dim();
  if (n < 2) throw Error(ErrorCode::DegenerateBox, "line sampling needs n >= 2");
  Rng rng(derive_seed(seed, {tag(StreamTag::LineSampler)}));
  const double omega = unit_ball_volume(n - 1);
  std::vector<WeightedLine> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vec e = uniform_sphere(rng, n);
    auto [p, clip] = draw_line_in_shadow(region, e, rng);
    const double w = shadow_area(region, e) / omega;
    out.push_back({LineSeg{std::move(p), std::move(e), clip.first, clip.second}, w});
  }
  return out;
}

MeasureEstimate hyperplane_measure(const Box& region, std::size_t count, std::uint64_t seed) {
  std::vector<double> w;
  w.reserve(count);
  for (const auto& s : sample_hyperplanes(region, count, seed)) w.push_back(s.weight);
  return summarize(w);
}

MeasureEstimate line_measure(const Box& region, std::size_t count, std::uint64_t seed) {
  std::vector<double> w;
  w.reserve(count);
  for (const auto& s : sample_lines(region, count, seed)) w.push_back(s.weight);
  return summarize(w);
}

MeasureEstimate hyperplane_measure_of_ball(const Vec& center, double radius, const Box& enclosing,
                                           std::size_t count, std::uint64_t seed) {
  std::vector<double> v;
  v.reserve(count);
  for (const auto& s : sample_hyperplanes(enclosing, count, seed)) {
    const bool hit = std::fabs(s.plane.signed_distance(center)) < radius;
    v.push_back(hit ? s.weight : 0.0);
  }
  return summarize(v);
}

MeasureEstimate line_measure_of_ball(const Vec& center, double radius, const Box& enclosing,
                                     std::size_t count, std::uint64_t seed) {
  std::vector<double> v;
  v.reserve(count);
  const std::size_t n = enclosing.dim();
  for (const auto& s : sample_lines(enclosing, count, seed)) {
    Vec d(n);
    for (std::size_t k = 0; k < n; ++k) d[k] = center[k] - s.line.base[k];
    const double along = dot(d, s.line.dir);
    double dist2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double r = d[k] - along * s.line.dir[k];
      dist2 += r * r;
    }
    v.push_back(dist2 < radius * radius ? s.weight : 0.0);
  }
  return summarize(v);
}

}  // namespace qrect
