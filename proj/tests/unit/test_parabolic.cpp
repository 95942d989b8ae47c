#include <cmath>
#include <random>

#include "doctest.h"
#include "qrect/errors.hpp"
#include "qrect/funcmodel.hpp"
#include "qrect/parabolic.hpp"

using namespace qrect;
using namespace qrect::catalog;

namespace {

ParabolicBox pbox(Vec lo, double side, double t0, double duration) {
  ParabolicBox b;
  b.space_lo = std::move(lo);
  b.side = side;
  b.t0 = t0;
  b.duration = duration;
  b.parabolic = std::abs(duration - side * side) < 1e-15;
  return b;
}

// variance of the m midpoints of [0,1]
double midpoint_variance(std::size_t m) {
  const double mm = static_cast<double>(m);
  return (1.0 - 1.0 / (mm * mm)) / 12.0;
}

std::vector<Field> parabolic_catalog(std::size_t n) {
  std::vector<Field> out;
  const Vec c(n - 1, 0.3);
  for (auto t : {TimeTerm::Zero, TimeTerm::Sin, TimeTerm::Linear}) {
    out.push_back(separable(cone(c), t));
    out.push_back(separable(square(n - 1), t));
    out.push_back(separable(bump(c, 0.4), t));
  }
  out.push_back(product(n));
  return out;
}

}  // namespace

TEST_CASE("horizontal affinity examples") {
  const QuadratureSpec q;
  const std::size_t m = q.nodes;
  // x^2 on the midpoint grid of [-1,1]: the best slice fit is the discrete mean
  {
    double mean = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += std::pow(-1.0 + 2.0 * (i + 0.5) / m, 2) / m;
    for (std::size_t i = 0; i < m; ++i) acc += std::pow(std::pow(-1.0 + 2.0 * (i + 0.5) / m, 2) - mean, 2) / m;
    const double v = horizontal_affinity(separable(square(1), TimeTerm::Zero), pbox({-1}, 2, 0, 1), q);
    CHECK(v == doctest::Approx(std::sqrt(acc) / 2.0).epsilon(1e-12));
    CHECK(std::abs(v - 1.0 / std::sqrt(45.0)) < 5e-3 / std::sqrt(45.0));
  }
  // 2x with |a| <= 1: slope pinned at 1, residual is the centred x
  {
    const double v = horizontal_affinity(separable(affine({2.0}, 0.0), TimeTerm::Zero), pbox({0}, 1, 0, 1), q, 1.0);
    CHECK(v == doctest::Approx(std::sqrt(midpoint_variance(m))).epsilon(1e-10));
    CHECK(std::abs(v - std::sqrt(1.0 / 12.0)) < 5e-3);
  }
  CHECK(horizontal_affinity(product(2), pbox({0.2}, 0.5, 0.1, 0.25), q) <= 1e-10);
  CHECK(horizontal_affinity(product(3), pbox({0.2, -0.4}, 0.5, 0.1, 0.25), q) <= 1e-10);
}

TEST_CASE("vertical oscillation examples") {
  const QuadratureSpec q;
  CHECK(vertical_osc(separable(cone({0.2}), TimeTerm::Zero), pbox({0}, 1, 0, 1), q) <= 1e-12);
  CHECK(vertical_osc(affine({0.0, 0.0}, 3.0), pbox({0}, 1, 0, 1), q) <= 1e-12);
  const double v = vertical_osc(separable(affine({0.0}, 0.0), TimeTerm::Linear), pbox({0}, 1, 0, 1), q);
  CHECK(v == doctest::Approx(std::sqrt(midpoint_variance(q.nodes))).epsilon(1e-12));
}

TEST_CASE("parabolic beta_2 of psi = t") {
  const QuadratureSpec q;
  const ParabolicBox b = pbox({0}, 1, 0, 1);
  REQUIRE(b.diameter() == doctest::Approx(2.0));
  // best space-only map is the constant time mean; diam^{n+1} = 8, diam^2 = 4
  const double v = parabolic_beta2(separable(affine({0.0}, 0.0), TimeTerm::Linear), b, q);
  CHECK(v == doctest::Approx(std::sqrt(midpoint_variance(q.nodes) / 8.0) / 2.0).epsilon(1e-12));
  CHECK(std::abs(v * v * 32.0 - 1.0 / 12.0) < 1e-3);
  CHECK(parabolic_beta2(affine({1.5, 0.0}, -2.0), b, q) <= 1e-10);
}

TEST_CASE("time difference quotient") {
  const QuadratureSpec q;
  const ParabolicBox b = pbox({0}, 1, 0, 1);
  const auto lin = dt_carleson_quotient(separable(affine({0.0}, 0.0), TimeTerm::Linear), b, q);
  CHECK(lin.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lin.band == doctest::Approx(1.0 / q.nodes).epsilon(1e-12));
  CHECK(dt_carleson_quotient(separable(cone({0.5}), TimeTerm::Zero), b, q).value == 0.0);
  const auto s = dt_carleson_quotient(separable(affine({0.0}, 0.0), TimeTerm::Sin), b, q);
  CHECK(s.value > 0.0);
  CHECK(s.value <= 1.0);
  CHECK(s.value == doctest::Approx(0.737977936543).epsilon(1e-10));
}

TEST_CASE("combination bound examples") {
  const QuadratureSpec q;
  const ParabolicBox b = pbox({-1}, 2, 0, 1);
  const auto sq = combine_affine_bound(separable(square(1), TimeTerm::Zero), b, q);
  double mean = 0.0;
  for (std::size_t i = 0; i < q.nodes; ++i) mean += std::pow(-1.0 + 2.0 * (i + 0.5) / q.nodes, 2) / q.nodes;
  CHECK(sq.A.intercept == doctest::Approx(mean).epsilon(1e-12));
  CHECK(std::abs(sq.A.grad[0]) < 1e-12);
  CHECK(sq.beta_v <= 1e-20);
  CHECK(sq.residual_sq == doctest::Approx(sq.beta_h).epsilon(1e-12));
  CHECK(sq.holds);

  const auto st = combine_affine_bound(separable(square(1), TimeTerm::Linear), b, q);
  CHECK(st.A.intercept == doctest::Approx(mean + 0.5).epsilon(1e-12));
  CHECK(st.holds);

  const auto aff = combine_affine_bound(affine({0.5, 0.0}, 1.0), b, q);
  CHECK(aff.residual_sq <= 1e-20);
  CHECK(aff.A.grad[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("combination certificate and infimum dominance on random boxes") {
  const QuadratureSpec q{9, 9, 64, 7};
  for (std::size_t n : {2u, 3u}) {
    const auto boxes = random_parabolic_boxes(n, 12, -1.0, 1.0, 0, 3, 100 + n);
    for (const Field& psi : parabolic_catalog(n))
      for (const auto& b : boxes) {
        for (std::optional<double> L : {std::optional<double>{}, std::optional<double>{1.0}}) {
          const auto c = combine_affine_bound(psi, b, q, L);
          CHECK(c.residual_sq <= c.bound + 1e-10);
          CHECK(parabolic_beta2(psi, b, q, L) <= c.normalized + 1e-12);
          if (L) CHECK(c.A.lipschitz() <= *L + 1e-12);
        }
      }
  }
}

TEST_CASE("restricted coefficients dominate and agree when feasible") {
  const QuadratureSpec q{9, 9, 64, 7};
  const auto boxes = random_parabolic_boxes(2, 16, -1.0, 1.0, 0, 3, 5);
  for (const Field& psi : parabolic_catalog(2))
    for (const auto& b : boxes) {
      const auto r = parabolic_coefficients(psi, b, q, 1.0);
      CHECK(r.beta2 <= r.beta2_L + 1e-12);
      CHECK(r.affinity <= r.affinity_L + 1e-12);
      CHECK(r.beta_inf <= r.beta_inf_L + 1e-12);
      const auto big = parabolic_coefficients(psi, b, q, 1e6);
      CHECK(std::abs(big.beta2 - big.beta2_L) <= 1e-10);
      CHECK(std::abs(big.affinity - big.affinity_L) <= 1e-10);
    }
}

TEST_CASE("beta_inf bounded by half the parabolic Lipschitz constant") {
  const QuadratureSpec q{9, 9, 64, 7};
  for (std::size_t n : {2u, 3u}) {
    const auto boxes = random_parabolic_boxes(n, 10, -1.0, 1.0, 0, 3, 9);
    for (const Field& psi : parabolic_catalog(n))
      for (const auto& b : boxes) {
        const auto K = psi.parabolic_lipschitz(b.as_box());
        if (!K) continue;
        CHECK(parabolic_beta_inf(psi, b, q) <= kBetaLipschitzBound * *K + 1e-12);
      }
  }
}

TEST_CASE("parabolic Carleson sums") {
  const QuadratureSpec q{9, 9, 64, 7};
  DyadicParabolicBox r0;
  r0.space_index = {0};
  const auto osc = parabolic_carleson_sum(separable(cone({1.0 / 3.0}), TimeTerm::Zero), r0, 3.0, 3,
                                          ParabolicSelector::Osc, q);
  for (const auto& s : osc.scales) CHECK(s.contribution == 0.0);
  REQUIRE(osc.scales.size() == 4);
  CHECK(osc.scales[2].cubes == 64);

  for (auto sel : {ParabolicSelector::Beta2, ParabolicSelector::Beta2L, ParabolicSelector::Affinity,
                   ParabolicSelector::AffinityL, ParabolicSelector::Osc, ParabolicSelector::BetaInf}) {
    const auto r = parabolic_carleson_sum(affine({0.7, 0.0}, 0.1), r0, 2.0, 2, sel, q, 1.0);
    CHECK(r.total <= 1e-18);
  }

  const auto b = parabolic_carleson_sum(separable(cone({1.0 / 3.0}), TimeTerm::Sin), r0, 3.0, 4,
                                        ParabolicSelector::BetaInf, q);
  CHECK(b.power == 5.0);
  const auto rep = parabolic_carleson_sum(separable(cone({1.0 / 3.0}), TimeTerm::Sin), r0, 3.0, 4,
                                          ParabolicSelector::Beta2, q);
  for (std::size_t j = 2; j < rep.scales.size(); ++j) {
    const double ratio = rep.scales[j].contribution / rep.scales[j - 1].contribution;
    CHECK(ratio > 0.2);
    CHECK(ratio < 0.7);
  }
  // direct sum over the leaves equals the last scale row
  double leaves = 0.0;
  for (const auto& c : rep.cubes)
    if (c.level == 4) leaves += c.value * c.value * std::pow(2.0, -4) * std::pow(4.0, -4);
  CHECK(leaves == doctest::Approx(rep.scales.back().contribution).epsilon(1e-12));
}

TEST_CASE("Hoelder exponent check") {
  const QuadratureSpec q{9, 9, 64, 7};
  const auto boxes = random_parabolic_boxes(2, 8, -1.0, 1.0, 1, 4, 3);
  const auto aff = holder_exponent_check(affine({0.5, 0.0}, 0.0), boxes, 1.0, 1.0, q);
  CHECK(aff.exponent == doctest::Approx(2.0 / 5.0));
  CHECK(aff.violations == 0);
  for (const auto& r : aff.rows) {
    CHECK(r.beta_inf_L <= 1e-10);
    CHECK(r.beta2_L_double <= 1e-10);
  }
  const auto h = holder_exponent_check(separable(cone({0.0}), TimeTerm::Sin), boxes, 1.0, 1e-3, q);
  CHECK(h.violations > 0);
  const auto again = holder_exponent_check(separable(cone({0.0}), TimeTerm::Sin), boxes, 1.0, h.fitted, q);
  CHECK(again.violations == 0);
}

TEST_CASE("differentiability probe") {
  const QuadratureSpec q;
  const std::vector<double> radii{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  const auto lin = rademacher_probe(separable(affine({2.0}, 0.0), TimeTerm::Zero), {0.4, 0.1}, radii, q);
  CHECK(lin.gradient[0] == doctest::Approx(2.0).epsilon(1e-12));
  for (double e : lin.eps) CHECK(e <= 1e-10);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 4; ++k) {
    const Vec p{u(rng), u(rng)};
    const auto pr = rademacher_probe(separable(square(1), TimeTerm::Sin), p, radii, q);
    for (std::size_t i = 0; i < radii.size(); ++i) CHECK(pr.eps[i] <= radii[i] * (1.0 + 1e-9));
    REQUIRE(pr.slope);
    CHECK(*pr.slope > 0.9);
  }
  const auto kink = rademacher_probe(separable(cone({0.0}), TimeTerm::Zero), {0.0, 0.0}, radii, q);
  for (double e : kink.eps) CHECK(e >= 0.2);

  CHECK_THROWS_AS(rademacher_probe(product(2), {0.0, 0.0}, {0.1, 0.2}, q), Error);
}
