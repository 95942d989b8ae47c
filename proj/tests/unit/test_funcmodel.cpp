#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "qrect/errors.hpp"
#include "qrect/funcmodel.hpp"

using namespace qrect;

TEST_CASE("catalog evaluation") {
  const Field aff = catalog::affine({2, 3}, 1);
  CHECK(aff({1, 1}) == doctest::Approx(6.0));
  CHECK(catalog::cone({0, 0})({0, 0}) == 0.0);
  CHECK(catalog::square(1)({-3}) == doctest::Approx(9.0));
  CHECK(catalog::distance_to_points({{0, 0}, {1, 0}})({0.9, 0}) == doctest::Approx(0.1));
  CHECK(catalog::bump({0, 0}, 1.0)({0, 0}) == doctest::Approx(1.0));
  CHECK(catalog::bump({0, 0}, 1.0)({1, 0}) == 0.0);
  const Field sep = catalog::separable(catalog::square(1), catalog::TimeTerm::Sin);
  CHECK(sep({2.0, 0.5}) == doctest::Approx(4.0 + std::sin(0.5)));
  CHECK(sep.parabolic());
  const Field prod = catalog::product(3);
  CHECK(prod({1.0, 2.0, 0.3}) ==
        doctest::Approx(std::cos(0.3) * 1.0 + std::cos(1.3) * 2.0 + 0.5 * std::sin(0.6)));
  const Field pl = catalog::piecewise_linear({0, 1, 2}, {0, 1, 0}, {1, 0});
  CHECK(pl({0.5, 7}) == doctest::Approx(0.5));
  CHECK(pl({1.5, 7}) == doctest::Approx(0.5));
  CHECK(pl({3.0, 7}) == doctest::Approx(-1.0));
}

TEST_CASE("grid fields interpolate multilinearly") {
  std::vector<double> vals;
  for (int i = 0; i <= 10; ++i) vals.push_back(i / 10.0);
  const Field g = make_grid_field({{0.0}, {0.1}, {11}}, vals);
  CHECK(g({0.55}) == doctest::Approx(0.55));
  CHECK(g({0.3}) == doctest::Approx(0.3));
  bool threw = false;
  try {
    g({1.5});
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::OutOfDomain;
  }
  CHECK(threw);

  // bilinear data x*y is reproduced exactly inside cells
  std::vector<double> xy;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) xy.push_back((i * 0.5) * (j * 1.0));
  const Field g2 = make_grid_field({{0.0, 0.0}, {0.5, 1.0}, {3, 4}}, xy);
  CHECK(g2({0.75, 2.5}) == doctest::Approx(0.75 * 2.5));
  CHECK(g2({1.0, 3.0}) == doctest::Approx(3.0));
}

TEST_CASE("grid csv ingestion") {
  const auto path = std::filesystem::temp_directory_path() / "qrect_grid_test.csv";
  {
    std::ofstream out(path);
    out << "2, 2, 3, 1.0, 0.5, -1, 0\n0, 1, 2\n3, 4, 5\n";
  }
  const Field g = load_grid_csv(path);
  CHECK(g.dim() == 2);
  CHECK(g({-1.0, 0.0}) == doctest::Approx(0.0));
  CHECK(g({0.0, 1.0}) == doctest::Approx(5.0));
  CHECK(g({-0.5, 0.25}) == doctest::Approx(2.0));
  std::filesystem::remove(path);
  bool threw = false;
  try {
    load_grid_csv("/nonexistent/grid.csv");
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::Config && std::string(e.what()).find("/nonexistent/grid.csv") != std::string::npos;
  }
  CHECK(threw);
}

TEST_CASE("lipschitz_estimate") {
  const Box sq = Box::interval_power(-1, 1, 2);
  CHECK(lipschitz_estimate(catalog::affine({2, 3}, 0), sq, 4096, 1) == doctest::Approx(std::sqrt(13.0)).epsilon(0.02));
  for (std::size_t n = 1; n <= 3; ++n) {
    const Box b = Box::interval_power(-1, 1, n);
    CHECK(lipschitz_estimate(catalog::cone(Vec(n, 0.0)), b, 4096, 2) == doctest::Approx(1.0).epsilon(0.02));
  }
  CHECK(lipschitz_estimate(catalog::affine({0, 0}, 4), sq, 100, 3) == 0.0);
}

TEST_CASE("declared Lipschitz constants bound sampled quotients") {
  const Box b = Box({-0.7, 0.1}, {1.3, 0.9});
  const std::vector<Field> cat{
      catalog::affine({2, -1}, 0.5), catalog::random_piecewise_linear(2, 4, 9), catalog::cone({0.5, 0.5}),
      catalog::distance_to_points({{0, 0}, {0.4, 0.8}}), catalog::bump({0.1, 0.4}, 0.5), catalog::square(2)};
  for (const auto& f : cat) {
    CAPTURE(f.id());
    CHECK(lipschitz_estimate(f, b, 4096, 5) <= *f.lipschitz(b) * (1 + 1e-9));
  }
}

TEST_CASE("parabolic catalog entries obey their declared d-Lipschitz bound") {
  const Box b = Box({-0.5, 0.0}, {1.0, 1.0});
  const std::vector<Field> cat{
      catalog::separable(catalog::cone({0.0}), catalog::TimeTerm::Zero),
      catalog::separable(catalog::cone({0.0}), catalog::TimeTerm::Sin),
      catalog::separable(catalog::square(1), catalog::TimeTerm::Linear), catalog::product(2)};
  for (const auto& f : cat) {
    CAPTURE(f.id());
    CHECK(lipschitz_estimate(f, b, 4096, 6, Metric::Parabolic) <= *f.parabolic_lipschitz(b) * (1 + 1e-9));
    CHECK(lipschitz_estimate(f, b, 4096, 6) <= *f.lipschitz(b) * (1 + 1e-9));
  }
}
