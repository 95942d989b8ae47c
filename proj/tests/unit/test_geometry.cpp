#include <cmath>
#include <random>

#include "doctest.h"
#include "qrect/errors.hpp"
#include "qrect/geometry.hpp"

using namespace qrect;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Config;  // sentinel: nothing thrown
}

double det2(const Vec& a, const Vec& b) { return a[0] * b[1] - a[1] * b[0]; }

}  // namespace

TEST_CASE("intersect_hyperplanes") {
  std::vector<Hyperplane> p2{Hyperplane::from({1, 0}, 0.3), Hyperplane::from({0, 1}, 0.7)};
  const Vec x = intersect_hyperplanes(p2);
  CHECK(x[0] == doctest::Approx(0.3));
  CHECK(x[1] == doctest::Approx(0.7));

  std::vector<Hyperplane> p3{Hyperplane::from({1, 0, 0}, 1), Hyperplane::from({0, 1, 0}, 2),
                             Hyperplane::from({0, 0, 1}, 3)};
  const Vec y = intersect_hyperplanes(p3);
  CHECK(y[0] == doctest::Approx(1));
  CHECK(y[1] == doctest::Approx(2));
  CHECK(y[2] == doctest::Approx(3));

  std::vector<Hyperplane> par{Hyperplane::from({1, 0}, 0), Hyperplane::from({1, 0}, 1)};
  CHECK(code_of([&] { intersect_hyperplanes(par); }) == ErrorCode::ParallelOrDegenerate);
}

TEST_CASE("intersection lies on every plane") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 3;
    std::vector<Hyperplane> planes;
    for (std::size_t i = 0; i < n; ++i) {
      Vec e(n);
      for (auto& v : e) v = g(rng);
      planes.push_back(Hyperplane::from(e, g(rng)));
    }
    if (transversality(planes) < 1e-3) continue;
    const Vec x = intersect_hyperplanes(planes);
    for (const auto& p : planes) CHECK(std::fabs(p.signed_distance(x)) <= 1e-9);
  }
}

TEST_CASE("transversality against brute-force pair determinants") {
  CHECK(transversality(std::vector<Hyperplane>{Hyperplane::from({1, 0}, 0), Hyperplane::from({0, 1}, 0)}) ==
        doctest::Approx(1.0));
  const Vec a{1, 0}, b{0, 1}, c{1 / std::sqrt(2.0), 1 / std::sqrt(2.0)};
  const double oracle = std::min({std::fabs(det2(a, b)), std::fabs(det2(a, c)), std::fabs(det2(b, c))});
  std::vector<Hyperplane> three{Hyperplane::from(a, 0), Hyperplane::from(b, 0), Hyperplane::from(c, 0)};
  CHECK(transversality(three) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(oracle == doctest::Approx(0.70711).epsilon(1e-4));
  CHECK(transversality(std::vector<Hyperplane>{Hyperplane::from({1, 1}, 0), Hyperplane::from({1, 1}, 2)}) ==
        doctest::Approx(0.0));
}

TEST_CASE("plane_metric") {
  const auto v1 = Hyperplane::from({1, 0}, 0);
  const auto v2 = Hyperplane::from({0, 1}, 0);
  CHECK(plane_metric(v1, v1) == 0.0);
  Hyperplane neg{{-0.6, -0.8}, -0.5};
  Hyperplane pos{{0.6, 0.8}, 0.5};
  CHECK(plane_metric(neg, pos) == doctest::Approx(0.0));
  CHECK(plane_metric(v1, v2) == doctest::Approx(std::sqrt(2.0)));
  CHECK(plane_metric(v1, v2) == plane_metric(v2, v1));
  CHECK(neg.canonical().normal[0] > 0.0);
}

TEST_CASE("parabolic_distance") {
  CHECK(parabolic_distance(Vec{0, 0}, Vec{3, 4}) == doctest::Approx(5.0));
  CHECK(parabolic_distance(Vec{1, 1}, Vec{1, 1}) == 0.0);
  CHECK(parabolic_distance(Vec{1, 1}, Vec{1, 0}) == doctest::Approx(1.0));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 10000; ++i) {
    Vec p{u(rng), u(rng), u(rng)}, q{u(rng), u(rng), u(rng)}, r{u(rng), u(rng), u(rng)};
    CHECK(parabolic_distance(p, r) <= parabolic_distance(p, q) + parabolic_distance(q, r) + 1e-12);
  }
}

TEST_CASE("dyadic cubes partition their parent") {
  for (std::size_t n = 1; n <= 3; ++n) {
    DyadicCube q{3, std::vector<std::int64_t>(n, 5)};
    const auto kids = q.children();
    CHECK(kids.size() == (std::size_t{1} << n));
    double vol = 0.0;
    for (const auto& c : kids) {
      vol += c.volume();
      CHECK(c.level == 4);
      for (std::size_t k = 0; k < n; ++k) {
        CHECK(c.lo()[k] >= q.lo()[k]);
        CHECK(c.lo()[k] + c.side() <= q.lo()[k] + q.side());
        CHECK(c.lo()[k] == static_cast<double>(c.index[k]) * c.side());
      }
    }
    CHECK(vol == q.volume());
    CHECK(q.diameter() == doctest::Approx(std::sqrt(double(n)) * q.side()));
  }
}

TEST_CASE("dyadic parabolic boxes") {
  DyadicParabolicBox q{1, {1}, 2};
  const auto b = q.box();
  CHECK(b.side == doctest::Approx(0.5));
  CHECK(b.duration == doctest::Approx(0.25));
  CHECK(b.t0 == doctest::Approx(0.5));
  const auto kids = q.children();
  CHECK(kids.size() == 8);
  double vol = 0.0;
  for (const auto& k : kids) {
    vol += k.box().volume();
    CHECK(k.box().duration == doctest::Approx(k.box().side * k.box().side));
  }
  CHECK(vol == doctest::Approx(b.volume()));
  // diameter in d between opposite corners
  CHECK(b.diameter() == doctest::Approx(0.5 + 0.5));
  const auto d = b.dilate(2.0);
  CHECK(d.side == doctest::Approx(1.0));
  CHECK(d.duration == doctest::Approx(0.5));
  CHECK(d.t0 + 0.5 * d.duration == doctest::Approx(b.t0 + 0.5 * b.duration));
}

TEST_CASE("box dilation is concentric") {
  Box b({0.0, 1.0}, {2.0, 1.0});
  const Box d = b.dilate(3.0);
  CHECK(d.center()[0] == doctest::Approx(b.center()[0]));
  CHECK(d.center()[1] == doctest::Approx(b.center()[1]));
  CHECK(d.diameter() == doctest::Approx(3.0 * b.diameter()));
  CHECK(code_of([] { Box({0.0}, {0.0}); }) == ErrorCode::DegenerateBox);
}

TEST_CASE("simplex_from_planes") {
  std::vector<Hyperplane> tri{Hyperplane::from({1, 0}, 0), Hyperplane::from({0, 1}, 0),
                              Hyperplane::from({1, 1}, 1)};
  const Simplex s = simplex_from_planes(tri);
  CHECK(s.vertices.size() == 3);
  auto has = [&](double x, double y) {
    for (const auto& v : s.vertices)
      if (std::fabs(v[0] - x) < 1e-12 && std::fabs(v[1] - y) < 1e-12) return true;
    return false;
  };
  CHECK(has(0, 0));
  CHECK(has(1, 0));
  CHECK(has(0, 1));

  std::vector<Hyperplane> bad{Hyperplane::from({1, 0}, 0), Hyperplane::from({1, 0}, 1),
                              Hyperplane::from({0, 1}, 0)};
  CHECK(code_of([&] { simplex_from_planes(bad); }) == ErrorCode::DegenerateSimplex);

  std::vector<Hyperplane> std3{Hyperplane::from({1, 0, 0}, 0), Hyperplane::from({0, 1, 0}, 0),
                               Hyperplane::from({0, 0, 1}, 0), Hyperplane::from({1, 1, 1}, 1)};
  const Simplex t = simplex_from_planes(std3);
  // oracle: |det(v1-v0, v2-v0, v3-v0)| / 3!
  const auto& v = t.vertices;
  double m[3][3];
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) m[i][k] = v[i + 1][k] - v[0][k];
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  CHECK(std::fabs(det) / 6.0 == doctest::Approx(1.0 / 6.0));
  CHECK(t.volume() == doctest::Approx(1.0 / 6.0));
  // face i lies on plane i
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (j != i) CHECK(std::fabs(std3[i].signed_distance(t.vertices[j])) < 1e-12);
}

TEST_CASE("clip_line and plane sections") {
  const Box unit = Box::interval_power(0, 1, 2);
  const Vec p{0.5, 0.5}, e{1.0, 0.0};
  const auto clip = clip_line(unit, p, e);
  REQUIRE(clip);
  CHECK(clip->first == doctest::Approx(-0.5));
  CHECK(clip->second == doctest::Approx(0.5));
  CHECK_FALSE(clip_line(unit, Vec{0.5, 3.0}, e));
  CHECK(plane_box_section(Hyperplane::from({1, 0}, 5), unit).empty());
  CHECK_FALSE(plane_box_section(Hyperplane::from({1, 1}, 1), unit).empty());
  const auto [lo, hi] = support_interval(unit, Vec{1 / std::sqrt(2.0), 1 / std::sqrt(2.0)});
  CHECK(lo == doctest::Approx(0.0));
  CHECK(hi == doctest::Approx(std::sqrt(2.0)));
  const auto frame = orthonormal_complement(Vec{0.0, 0.6, 0.8});
  CHECK(frame.size() == 2);
  for (const auto& f : frame) {
    CHECK(norm(f) == doctest::Approx(1.0));
    CHECK(std::fabs(dot(f, Vec{0.0, 0.6, 0.8})) < 1e-14);
  }
  CHECK(std::fabs(dot(frame[0], frame[1])) < 1e-14);
}
