#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qrect/sampling.hpp"

using namespace qrect;

namespace {

// mean over directions of (width_e(box) / 2), by a fine angular rule (n = 2)
double plane_measure_oracle_2d(double sx, double sy) {
  const int m = 200000;
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const double th = 2.0 * std::numbers::pi * (i + 0.5) / m;
    acc += 0.5 * (sx * std::fabs(std::cos(th)) + sy * std::fabs(std::sin(th)));
  }
  return acc / m;
}

// mean over directions of shadow length / omega_1 (n = 2)
double line_measure_oracle_2d(double sx, double sy) {
  const int m = 200000;
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const double th = 2.0 * std::numbers::pi * (i + 0.5) / m;
    acc += (sy * std::fabs(std::cos(th)) + sx * std::fabs(std::sin(th))) / 2.0;
  }
  return acc / m;
}

}  // namespace

TEST_CASE("unit ball normalisation, n = 2") {
  const Box enclosing = Box::interval_power(-1, 1, 2);
  const auto hp = hyperplane_measure_of_ball({0, 0}, 1.0, enclosing, 100000, 1);
  CHECK(std::fabs(hp.value - 1.0) <= 0.02);
  const auto ln = line_measure_of_ball({0, 0}, 1.0, enclosing, 100000, 2);
  CHECK(std::fabs(ln.value - 1.0) <= 0.02);
}

TEST_CASE("translation invariance") {
  const auto a = hyperplane_measure_of_ball({0, 0}, 1.0, Box::interval_power(-1, 1, 2), 50000, 5);
  const auto b = hyperplane_measure_of_ball({3, -2}, 1.0, Box({2, -3}, {2, 2}), 50000, 6);
  CHECK(std::fabs(a.value - b.value) <= 3.0 * std::hypot(a.stderr_, b.stderr_));
  const auto c = line_measure_of_ball({0, 0}, 1.0, Box::interval_power(-1, 1, 2), 50000, 7);
  const auto d = line_measure_of_ball({3, -2}, 1.0, Box({2, -3}, {2, 2}), 50000, 8);
  CHECK(std::fabs(c.value - d.value) <= 3.0 * std::hypot(c.stderr_, d.stderr_));
}

TEST_CASE("box measures match the angular oracle and scale with the box") {
  const Box q = Box::interval_power(0, 1, 2);
  const Box q2 = q.dilate(2.0);
  const auto h1 = hyperplane_measure(q, 40000, 3);
  const auto h2 = hyperplane_measure(q2, 40000, 4);
  CHECK(std::fabs(h1.value - plane_measure_oracle_2d(1, 1)) <= 3.0 * h1.stderr_ + 1e-9);
  CHECK(h2.value / h1.value == doctest::Approx(2.0).epsilon(0.05));
  const auto l1 = line_measure(q, 40000, 5);
  const auto l2 = line_measure(q2, 40000, 6);
  CHECK(std::fabs(l1.value - line_measure_oracle_2d(1, 1)) <= 3.0 * l1.stderr_ + 1e-9);
  CHECK(l2.value / l1.value == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("doubling the side scales line measure by 2^(n-1), n = 3") {
  const Box q = Box::interval_power(0, 1, 3);
  const auto l1 = line_measure(q, 40000, 9);
  const auto l2 = line_measure(q.dilate(2.0), 40000, 10);
  CHECK(std::fabs(l2.value - 4.0 * l1.value) <= 3.0 * std::hypot(l2.stderr_, 4.0 * l1.stderr_));
  const auto h1 = hyperplane_measure(q, 40000, 11);
  const auto h2 = hyperplane_measure(q.dilate(2.0), 40000, 12);
  CHECK(std::fabs(h2.value - 2.0 * h1.value) <= 3.0 * std::hypot(h2.stderr_, 2.0 * h1.stderr_));
}

TEST_CASE("sampled lines are clipped and nonempty; sampling is deterministic") {
  const Box q({0.2, -0.4, 1.0}, {0.5, 1.0, 0.25});
  const auto lines = sample_lines(q, 2000, 13);
  for (const auto& l : lines) {
    CHECK(l.line.length() > 0.0);
    CHECK(q.contains(l.line.point(l.line.s0), 1e-12));
    CHECK(q.contains(l.line.point(l.line.s1), 1e-12));
    CHECK(norm(l.line.dir) == doctest::Approx(1.0));
  }
  const auto again = sample_lines(q, 2000, 13);
  CHECK(again.back().line.base == lines.back().line.base);
  const auto planes = sample_hyperplanes(q, 100, 14);
  for (const auto& p : planes) CHECK(!plane_box_section(p.plane, q).empty());
}

TEST_CASE("closed-form constants") {
  CHECK(sphere_area(2) == doctest::Approx(2.0 * std::numbers::pi));
  CHECK(sphere_area(3) == doctest::Approx(4.0 * std::numbers::pi));
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
  CHECK(unit_ball_volume(2) == doctest::Approx(std::numbers::pi));
}
