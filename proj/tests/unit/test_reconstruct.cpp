#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "qrect/reconstruct.hpp"

using namespace qrect;

namespace {

Field ridge(std::size_t n) {
  Vec d(n, 0.0);
  d[0] = 1.0;
  return catalog::piecewise_linear({0.0, 0.5, 1.0}, {0.5, 0.0, 0.5}, d);
}

ReconstructParams loose() {
  ReconstructParams p;
  p.kappa_b = 1e6;
  p.kappa_c = 1e6;
  return p;
}

}  // namespace

TEST_CASE("build_global_affine") {
  const std::vector<Vec> tri{{0, 0}, {1, 0}, {0, 1}};
  const std::vector<double> vals{1, 2, 3};
  const AffineMap A = build_global_affine(tri, vals);
  CHECK(A.intercept == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(A.grad[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(A.grad[1] == doctest::Approx(2.0).epsilon(1e-14));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec g{u(rng), u(rng), u(rng)};
    const double b = u(rng);
    std::vector<Vec> pts(4);
    std::vector<double> v(4);
    for (int i = 0; i < 4; ++i) {
      pts[i] = {u(rng), u(rng), u(rng)};
      v[i] = dot(g, pts[i]) + b;
    }
    const AffineMap B = build_global_affine(pts, v);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(B.grad[k] - g[k]) < 1e-12 * 1e2);
    CHECK(std::abs(B.intercept - b) < 1e-12 * 1e2);
  }

  const std::vector<Vec> line{{0, 0}, {1, 1}, {2, 2}};
  try {
    build_global_affine(line, vals);
    FAIL("collinear corners accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateSimplex);
  }
}

TEST_CASE("base simplex sits between cQ and Q/2") {
  for (std::size_t n : {2u, 3u}) {
    const Box Q = Box::interval_power(0, 1, n);
    const auto planes = regular_simplex_planes(Q);
    REQUIRE(planes.size() == n + 1);
    const Simplex S = simplex_from_planes(planes);
    const Box half = Q.dilate(0.5);
    for (const Vec& v : S.vertices) CHECK(half.contains(v, 1e-12));
    for (const Vec& x : Q.dilate(1.0 / 20.0).corners())
      for (const auto& h : planes) CHECK(h.signed_distance(x) < 0.0);
    CHECK(transversality(planes) > 0.1);
  }
}

TEST_CASE("plane selection on affine input accepts the first draw") {
  for (std::size_t n : {2u, 3u}) {
    const Field f = catalog::affine(Vec(n, 0.7), -0.2);
    ReconstructParams p;
    const auto sel = select_transversal_planes(f, Box::interval_power(0, 1, n), p, QuadratureSpec{});
    CHECK(sel.accepted);
    CHECK(sel.draw == 0);
    CHECK(sel.max_beta <= 1e-10);
    CHECK(sel.max_mismatch <= 1e-10);
  }
}

TEST_CASE("perturbed planes stay within eps and meet inside CQ") {
  const QuadratureSpec quad{17, 17, 256, 7};
  for (std::size_t n : {2u, 3u}) {
    const Box Q = Box::interval_power(0, 1, n);
    const auto base = regular_simplex_planes(Q);
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      ReconstructParams p = loose();
      p.seed = seed;
      const auto sel = select_transversal_planes(catalog::cone(Vec(n, 0.5)), Q, p, quad);
      REQUIRE(sel.perturbed.size() == n + 1);
      for (std::size_t j = 0; j <= n; ++j) {
        // Q is the unit cube, so the metric applies directly
        const Vec& a = base[j].normal;
        const Vec& b = sel.perturbed[j].normal;
        double plus = 0.0, minus = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          plus += (a[k] - b[k]) * (a[k] - b[k]);
          minus += (a[k] + b[k]) * (a[k] + b[k]);
        }
        const double dt = base[j].offset - sel.perturbed[j].offset;
        const double st = base[j].offset + sel.perturbed[j].offset;
        CHECK(std::min(std::sqrt(plus + dt * dt), std::sqrt(minus + st * st)) <= 0.05 + 1e-15);
      }
      const Box CQ = Q.dilate(p.C);
      for (const Vec& x : sel.corners) CHECK(CQ.contains(x));
      CHECK(sel.tau_perturbed >= 0.5 * sel.tau_base);
    }
  }
}

TEST_CASE("search budget exhaustion carries the best draw") {
  ReconstructParams p;
  p.kappa_b = 1e-6;
  p.kappa_c = 1e-6;
  p.budget = 3;
  const QuadratureSpec quad{17, 17, 256, 7};
  try {
    select_transversal_planes(ridge(2), Box::interval_power(0, 1, 2), p, quad);
    FAIL("expected exhaustion");
  } catch (const SelectionExhausted& e) {
    CHECK(e.code() == ErrorCode::BudgetExhausted);
    CHECK(e.best().draws_tried == 3);
    CHECK(e.best().perturbed.size() == 3);
    CHECK_FALSE(e.best().accepted);
  }
  const auto rep = verify_form1(ridge(2), Box::interval_power(0, 1, 2), p, quad);
  CHECK(rep.exhausted);
  CHECK(rep.beta2_direct > 0.0);
}

TEST_CASE("verify_form1 on affine input") {
  for (std::size_t n : {2u, 3u}) {
    const Field f = catalog::affine(Vec(n, -0.4), 1.5);
    const auto rep = verify_form1(f, Box::interval_power(0, 1, n), ReconstructParams{}, QuadratureSpec{});
    CHECK(rep.beta2_direct <= 1e-10);
    CHECK(rep.beta2_constructed <= 1e-10);
    CHECK(rep.beta_combined <= 1e-10);
    CHECK(rep.ratio == 0.0);
    CHECK(rep.family.delta_integral <= 1e-20);
  }
}

TEST_CASE("verify_form1 invariants on the catalog") {
  const QuadratureSpec quad;
  for (std::size_t n : {2u, 3u}) {
    const std::vector<Field> fs{catalog::cone(Vec(n, 0.5)), catalog::bump(Vec(n, 0.5), 0.5),
                                catalog::random_piecewise_linear(n, 4, 7), ridge(n)};
    for (const Field& f : fs) {
      const auto rep = verify_form1(f, Box::interval_power(0, 1, n), loose(), quad);
      CHECK(rep.corner_residual <= 1e-12);
      CHECK(rep.beta2_direct <= rep.beta2_constructed + 1e-12);
      const auto& s = rep.selection;
      for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t j = 0; j <= n; ++j) {
          if (i == j) continue;
          const Vec& x = s.corners[i];
          const double Aj = plane_affine_at(s.perturbed[j], s.fits[j].fit, x);
          CHECK(std::abs(rep.A(x) - Aj) <= std::abs(f(x) - Aj) + 1e-12);
        }
      CHECK(rep.beta_combined >= rep.beta22_planes / std::sqrt(2.0));
      CHECK(rep.beta_combined >= rep.beta_inf2_lines / std::sqrt(2.0));
      if (n == 2) {
        REQUIRE(rep.planar_gap);
        CHECK(*rep.planar_gap <= 0.02);
      }
    }
  }
}

TEST_CASE("beta_2(cQ) of the ridge matches the Legendre closed form") {
  // |u| on [-h,h] has best L2 affine fit h/2; the squared residual integrates
  // to h^3/6 per unit height, so beta_2 = 1/(2 sqrt(48)) for every h
  const double exact = 1.0 / (2.0 * std::sqrt(48.0));
  const auto rep = verify_form1(ridge(2), Box::interval_power(0, 1, 2), loose(), QuadratureSpec{});
  CHECK(std::abs(rep.beta2_direct - exact) <= 5e-3 * exact);
  CHECK(std::abs(*rep.planar_beta2 - exact) <= 5e-3 * exact);
}

TEST_CASE("combined beta regression and determinism") {
  const double v = combined_beta(ridge(2), Box::interval_power(0, 1, 2), QuadratureSpec{});
  CHECK(v == doctest::Approx(0.10911697994480919).epsilon(1e-12));

  const QuadratureSpec quad{17, 17, 512, 11};
  auto run = [&] {
    std::ostringstream a, b;
    const auto rep = verify_form1(catalog::cone({0.5, 0.5, 0.5}), Box::interval_power(0, 1, 3), loose(), quad);
    write_reconstruct_csv(a, rep);
    write_planes_csv(b, rep);
    return a.str() + b.str();
  };
  CHECK(run() == run());
}
