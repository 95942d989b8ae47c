#include "qrect/verify.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>

#include "qrect/calibration.hpp"
#include "qrect/csv.hpp"
#include "qrect/errors.hpp"
#include "qrect/parabolic.hpp"
#include "qrect/parallel.hpp"
#include "qrect/reconstruct.hpp"
#include "qrect/rng.hpp"
#include "qrect/sampling.hpp"

namespace qrect {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Per-property stream tags, mixed into the suite seed.
enum : std::uint64_t {
  kAffine = 0x101,
  kBoxes = 0x102,
  kMeasure = 0x103,
  kParabolicBoxes = 0x105,
  kSweepBoxes = 0x106,
  kHolderBoxes = 0x107,
  kProbePoints = 0x109,
  kCatalog = 0x1ff,
};

Check upper(std::string label, double value, double bound) {
  return {std::move(label), value, bound, value <= bound};
}

Check lower(std::string label, double value, double bound) {
  return {std::move(label), value, bound, value >= bound};
}

std::string dim_label(std::size_t n, std::string_view what) {
  return "n=" + std::to_string(n) + " " + std::string(what);
}

Vec uniform_vec(Rng& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

Field random_affine(Rng& rng, std::size_t n) {
  Vec g = uniform_vec(rng, n, -2.0, 2.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return catalog::affine(std::move(g), u(rng));
}

}  // namespace

bool PropertyResult::pass() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::vector<std::pair<std::string, Field>> euclidean_catalog(std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {kCatalog, n}));
  std::vector<std::pair<std::string, Field>> out;
  out.emplace_back("affine", random_affine(rng, n));
  out.emplace_back("piecewise_linear", catalog::random_piecewise_linear(n, 4, derive_seed(seed, {kCatalog, n, 1})));
  out.emplace_back("cone", catalog::cone(Vec(n, 1.0 / 3.0)));
  std::vector<Vec> pts;
  for (int k = 0; k < 3; ++k) pts.push_back(uniform_vec(rng, n, -1.0, 1.0));
  out.emplace_back("distance_to_points", catalog::distance_to_points(std::move(pts)));
  out.emplace_back("bump", catalog::bump(Vec(n, 0.0), 0.8));
  out.emplace_back("square", catalog::square(n));
  return out;
}

std::vector<std::pair<std::string, Field>> parabolic_catalog(std::size_t n, std::uint64_t seed) {
  std::vector<std::pair<std::string, Field>> out;
  const std::pair<catalog::TimeTerm, const char*> terms[] = {
      {catalog::TimeTerm::Zero, "0"}, {catalog::TimeTerm::Sin, "sin"}, {catalog::TimeTerm::Linear, "t"}};
  for (const auto& [name, g] : euclidean_catalog(n - 1, seed))
    for (const auto& [h, hname] : terms) out.emplace_back(name + "+" + hname, catalog::separable(g, h));
  out.emplace_back("product", catalog::product(n));
  return out;
}

// 1. every coefficient vanishes on affine inputs
PropertyResult check_affine_annihilation(const SuiteOptions& o) {
  PropertyResult r;
  QuadratureSpec quad = o.quad;
  quad.mc_samples = 256;
  for (std::size_t n = 1; n <= 3; ++n) {
    Rng rng(derive_seed(o.seed, {kAffine, n}));
    double euclid = 0.0, ig = 0.0, restricted = 0.0, combined = 0.0, para = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      const Field f = random_affine(rng, n);
      const Box box(uniform_vec(rng, n, -1.0, 0.5), uniform_vec(rng, n, 0.3, 1.2));
      for (double p : {1.0, 2.0, 4.0, kInf}) euclid = std::max(euclid, beta_p_cube(f, box, p, quad).value);
      ig = std::max(ig, beta_integralgeometric(f, box, 1, kInf, 2.0, quad).value);
      ig = std::max(ig, beta_integralgeometric(f, box, 1, 2.0, 2.0, quad).value);
      Vec e = uniform_sphere(rng, n);
      const Hyperplane plane = Hyperplane::from(e, dot(e, box.center()));
      if (n >= 2) {
        ig = std::max(ig, beta_integralgeometric(f, box, n - 1, 2.0, 2.0, quad).value);
        for (double p : {2.0, kInf}) restricted = std::max(restricted, beta_p_restricted(f, box, plane, p, quad).value);
        combined = std::max(combined, combined_beta(f, box, quad));
      }
      const LineSeg line{box.center(), uniform_sphere(rng, n), 0.0, 0.0};
      for (double p : {2.0, kInf}) restricted = std::max(restricted, beta_p_restricted(f, box, line, p, quad).value);

      if (n >= 2) {
        // space-only affine map on R^{n-1} x R
        Vec g = uniform_vec(rng, n, -2.0, 2.0);
        g[n - 1] = 0.0;
        const Field psi = catalog::affine(g, 0.25);
        const double side = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
        const ParabolicBox pb{uniform_vec(rng, n - 1, -1.0, 0.5), side, -0.3, side * side};
        para = std::max({para, horizontal_affinity(psi, pb, quad), vertical_osc(psi, pb, quad),
                         parabolic_beta2(psi, pb, quad), parabolic_beta_inf(psi, pb, quad),
                         dt_carleson_quotient(psi, pb, quad).value});
      }
    }
    r.checks.push_back(upper(dim_label(n, "beta_p cube p in {1;2;4;inf}"), euclid, 1e-10));
    r.checks.push_back(upper(dim_label(n, "restricted beta on planes and lines"), restricted, 1e-10));
    r.checks.push_back(upper(dim_label(n, "integral-geometric beta"), ig, 1e-10));
    if (n >= 2) {
      r.checks.push_back(upper(dim_label(n, "combined beta"), combined, 1e-10));
      r.checks.push_back(upper(dim_label(n, "parabolic A osc beta2 beta_inf Dt"), para, 1e-10));
    }
  }
  return r;
}

// 2. beta_p <= beta_q for p <= q
PropertyResult check_norm_monotonicity(const SuiteOptions& o) {
  PropertyResult r;
  const QuadratureSpec& quad = o.quad;
  for (std::size_t n = 1; n <= 2; ++n) {
    Rng rng(derive_seed(o.seed, {kBoxes, n}));
    std::vector<Box> boxes;
    for (int k = 0; k < 200; ++k) boxes.emplace_back(uniform_vec(rng, n, -1.0, 1.0), uniform_vec(rng, n, 0.05, 1.0));
    double worst[3] = {-kInf, -kInf, -kInf};
    for (const auto& [name, f] : euclidean_catalog(n, o.seed)) {
      std::vector<std::array<double, 3>> excess(boxes.size());
      parallel_for(boxes.size(), [&](std::size_t i) {
        const double b1 = beta_p_cube(f, boxes[i], 1.0, quad).value;
        const double b2 = beta_p_cube(f, boxes[i], 2.0, quad).value;
        const double b4 = beta_p_cube(f, boxes[i], 4.0, quad).value;
        const double bi = beta_p_cube(f, boxes[i], kInf, quad).value;
        excess[i] = {b1 - b2, b2 - b4, b2 - bi};
      });
      for (const auto& e : excess)
        for (int k = 0; k < 3; ++k) worst[k] = std::max(worst[k], e[k]);
    }
    r.checks.push_back(upper(dim_label(n, "max beta_1 - beta_2"), worst[0], 1e-9));
    r.checks.push_back(upper(dim_label(n, "max beta_2 - beta_4"), worst[1], 1e-9));
    r.checks.push_back(upper(dim_label(n, "max beta_2 - beta_inf"), worst[2], 1e-9));
  }
  return r;
}

// 3. planes and lines meeting the unit ball carry measure one
PropertyResult check_grassmannian_normalization(const SuiteOptions& o) {
  PropertyResult r;
  constexpr std::size_t kSamples = 100000;
  for (std::size_t n = 2; n <= 3; ++n) {
    const Vec origin(n, 0.0);
    Vec shifted{0.37, -0.81, 0.52};
    shifted.resize(n);
    const Box around_origin = Box::cube(Vec(n, -1.25), 2.5);
    Vec lo(n);
    for (std::size_t k = 0; k < n; ++k) lo[k] = shifted[k] - 1.1;
    const Box around_shift = Box::cube(lo, 2.2);
    struct Family {
      const char* name;
      MeasureEstimate (*est)(const Vec&, double, const Box&, std::size_t, std::uint64_t);
    };
    const Family fams[] = {{"eta_1 (lines)", &line_measure_of_ball}, {"eta_{n-1} (hyperplanes)", &hyperplane_measure_of_ball}};
    for (std::size_t fi = 0; fi < 2; ++fi) {
      const auto& fam = fams[fi];
      const auto a = fam.est(origin, 1.0, around_origin, kSamples, derive_seed(o.seed, {kMeasure, n, fi, 0}));
      const auto b = fam.est(shifted, 1.0, around_shift, kSamples, derive_seed(o.seed, {kMeasure, n, fi, 1}));
      r.checks.push_back(upper(dim_label(n, std::string(fam.name) + " |est - 1| / 3se"),
                               std::fabs(a.value - 1.0) / (3.0 * a.stderr_), 1.0));
      r.checks.push_back(upper(dim_label(n, std::string(fam.name) + " translated |est - 1| / 3se"),
                               std::fabs(b.value - 1.0) / (3.0 * b.stderr_), 1.0));
      r.checks.push_back(upper(dim_label(n, std::string(fam.name) + " translation gap / 3se"),
                               std::fabs(a.value - b.value) / (3.0 * std::hypot(a.stderr_, b.stderr_)), 1.0));
    }
  }
  return r;
}

CarlesonReport suite_carleson(std::size_t n, const SuiteOptions& o) {
  Vec dir(n, 0.0);
  dir[0] = 1.0;
  const Field f = catalog::piecewise_linear({0.0, 1.0 / 3.0, 1.0}, {1.0 / 3.0, 0.0, 2.0 / 3.0}, dir);
  const DyadicCube q0{0, std::vector<std::int64_t>(n, 0)};
  return carleson_sum(f, q0, 3.0, n == 1 ? 10 : 6, Selector::Beta2Cube, o.quad);
}

// 4. dyadic packing sums for a ridge kink
PropertyResult check_carleson_decay(const SuiteOptions& o) {
  PropertyResult r;
  for (std::size_t n = 1; n <= 2; ++n) {
    const auto rep = suite_carleson(n, o);
    const int J = rep.depth;
    double rmin = kInf, rmax = -kInf, ratio = 0.0;
    for (int j = 4; j <= J; ++j) {
      const double q = rep.scales[j].contribution / rep.scales[j - 1].contribution;
      rmin = std::min(rmin, q);
      rmax = std::max(rmax, q);
    }
    for (int j = 4; j <= J; ++j) ratio = std::max(ratio, rep.scales[j].ratio);
    r.checks.push_back(lower(dim_label(n, "min per-scale decay ratio"), rmin, 0.35));
    r.checks.push_back(upper(dim_label(n, "max per-scale decay ratio"), rmax, 0.65));
    r.checks.push_back(upper(dim_label(n, "max S(J)/(L|Q0|) over J >= 4"), ratio,
                             n == 1 ? calibration::kCarleson1D : calibration::kCarleson2D));
  }
  return r;
}

std::vector<ParabolicBox> suite_parabolic_boxes(std::size_t n, std::size_t count, std::uint64_t seed) {
  return random_parabolic_boxes(n, count, -1.0, 1.0, 0, 3, seed);
}

// 5. residual of the averaged slice fit against 6 beta_h + 4 beta_v
PropertyResult check_combination_certificate(const SuiteOptions& o) {
  PropertyResult r;
  for (std::size_t n = 2; n <= 3; ++n) {
    const QuadratureSpec& quad = o.quad;
    const auto boxes = suite_parabolic_boxes(n, 100, derive_seed(o.seed, {kParabolicBoxes, n}));
    double cert = -kInf, dom = -kInf;
    for (const auto& [name, psi] : parabolic_catalog(n, o.seed)) {
      std::vector<std::pair<double, double>> ex(boxes.size());
      parallel_for(boxes.size(), [&](std::size_t i) {
        const auto comb = combine_affine_bound(psi, boxes[i], quad);
        const double direct = parabolic_beta2(psi, boxes[i], quad);
        ex[i] = {comb.residual_sq - comb.bound, direct - comb.normalized};
      });
      for (const auto& [a, b] : ex) {
        cert = std::max(cert, a);
        dom = std::max(dom, b);
      }
    }
    r.checks.push_back(upper(dim_label(n, "max residual^2 - (6 beta_h + 4 beta_v)"), cert, 1e-10));
    r.checks.push_back(upper(dim_label(n, "max beta_2 - combined residual"), dom, 1e-12));
  }
  return r;
}

// 6. gradient-bounded coefficients
PropertyResult check_restricted_consistency(const SuiteOptions& o) {
  PropertyResult r;
  std::vector<double> Ls(10);
  for (std::size_t k = 0; k < Ls.size(); ++k) Ls[k] = 0.05 * std::pow(100.0, static_cast<double>(k) / 9.0);
  for (std::size_t n = 2; n <= 3; ++n) {
    const QuadratureSpec& quad = o.quad;
    const auto boxes = suite_parabolic_boxes(n, 12, derive_seed(o.seed, {kSweepBoxes, n}));
    double dominance = -kInf, equality = 0.0, increase = -kInf;
    std::size_t feasible = 0;
    for (const auto& [name, psi] : parabolic_catalog(n, o.seed)) {
      for (const auto& box : boxes) {
        const AffineFit free = parabolic_space_fit(psi, box, quad);
        const double b2 = parabolic_beta2(psi, box, quad);
        const double aff = horizontal_affinity(psi, box, quad);
        double prev = kInf;
        for (double L : Ls) {
          const AffineFit fit = parabolic_space_fit(psi, box, quad, L);
          const double b2L = parabolic_beta2(psi, box, quad, L);
          dominance = std::max({dominance, b2 - b2L, aff - horizontal_affinity(psi, box, quad, L)});
          if (norm(free.map.grad) <= L) {
            equality = std::max(equality, std::fabs(b2 - b2L));
            ++feasible;
          }
          increase = std::max(increase, fit.residual_sq - prev);
          prev = fit.residual_sq;
        }
      }
    }
    r.checks.push_back(upper(dim_label(n, "max beta_2 - beta_2^L and A - A^L"), dominance, 1e-12));
    r.checks.push_back(upper(dim_label(n, "max |beta_2 - beta_2^L| when feasible"), equality, 1e-10));
    r.checks.push_back(lower(dim_label(n, "feasible cases"), static_cast<double>(feasible), 1.0));
    r.checks.push_back(upper(dim_label(n, "max residual increase along L sweep"), increase, 1e-12));
  }
  return r;
}

HolderReport suite_holder(const SuiteOptions& o, double constant) {
  const Field psi = catalog::separable(catalog::cone({0.0}), catalog::TimeTerm::Sin);
  const auto boxes = random_parabolic_boxes(2, 64, -1.0, 1.0, 0, 4, derive_seed(o.seed, {kHolderBoxes}));
  return holder_exponent_check(psi, boxes, 1.0, constant, o.quad);
}

// 7. beta_inf^L(Q) <= C beta_2^L(2Q)^{2/5}
PropertyResult check_holder_exponent(const SuiteOptions& o) {
  PropertyResult r;
  const auto rep = suite_holder(o, calibration::kHolder);
  r.checks.push_back(upper("violations at C_hold", static_cast<double>(rep.violations), 0.0));
  r.checks.push_back(upper("fitted constant", rep.fitted, calibration::kHolder));
  const double rel = std::fabs(rep.fitted - calibration::kHolderFitted) / calibration::kHolderFitted;
  r.checks.push_back(upper("relative drift from calibrated fit", rel, 5e-4));
  return r;
}

std::vector<std::pair<std::string, Field>> reconstruction_catalog(std::size_t n, std::uint64_t seed) {
  return {{"cone", catalog::cone(Vec(n, 0.5))},
          {"bump", catalog::bump(Vec(n, 0.5), 0.5)},
          {"piecewise_linear", catalog::random_piecewise_linear(n, 4, derive_seed(seed, {kCatalog, n, 2}))}};
}

// 8. beta_2(cQ) <= C_rec beta(CQ)
PropertyResult check_reconstruction(const SuiteOptions& o) {
  PropertyResult r;
  for (std::size_t n = 2; n <= 3; ++n) {
    const double Crec = n == 2 ? calibration::kRec2 : calibration::kRec3;
    ReconstructParams par;
    par.seed = o.seed;
    const QuadratureSpec& quad = o.quad;
    double worst = 0.0, gap = 0.0;
    for (const auto& [name, f] : reconstruction_catalog(n, o.seed)) {
      const auto rep = verify_form1(f, Box::interval_power(0.0, 1.0, n), par, quad);
      worst = std::max(worst, rep.ratio);
      if (rep.planar_gap) gap = std::max(gap, *rep.planar_gap);
    }
    r.checks.push_back(upper(dim_label(n, "max beta_2(cQ)/beta(CQ)"), worst, Crec));
    if (n == 2) r.checks.push_back(upper(dim_label(n, "max planar relative gap"), gap, 0.02));
  }
  return r;
}

// 9. probe slopes for a smooth field and non-decay at a horizontal kink
PropertyResult check_rademacher(const SuiteOptions& o) {
  PropertyResult r;
  std::vector<double> radii;
  for (int k = 3; k <= 9; ++k) radii.push_back(std::ldexp(1.0, -k));
  const Field smooth = catalog::separable(catalog::square(1), catalog::TimeTerm::Sin);
  Rng rng(derive_seed(o.seed, {kProbePoints}));
  double slope = kInf;
  for (int i = 0; i < 10; ++i) {
    const Vec p = uniform_vec(rng, 2, -1.0, 1.0);
    const auto probe = rademacher_probe(smooth, p, radii, o.quad);
    slope = std::min(slope, probe.slope.value_or(-kInf));
  }
  r.checks.push_back(lower("min log-log slope x^2 + sin t", slope, 0.9));
  const Field kink = catalog::separable(catalog::cone({0.0}), catalog::TimeTerm::Zero);
  const auto probe = rademacher_probe(kink, {0.0, 0.0}, radii, o.quad);
  r.checks.push_back(lower("min eps(r) for |x| at origin", *std::min_element(probe.eps.begin(), probe.eps.end()), 0.2));
  return r;
}

std::span<const PropertySpec> property_table() {
  static const PropertySpec table[] = {
      {1, "affine annihilation", 10.0, &check_affine_annihilation},
      {2, "norm monotonicity", 60.0, &check_norm_monotonicity},
      {3, "grassmannian normalization", 30.0, &check_grassmannian_normalization},
      {4, "carleson packing decay", 360.0, &check_carleson_decay},
      {5, "combination certificate", 120.0, &check_combination_certificate},
      {6, "restricted consistency", 30.0, &check_restricted_consistency},
      {7, "hoelder exponent", 60.0, &check_holder_exponent},
      {8, "reconstruction inequality", 180.0, &check_reconstruction},
      {9, "rademacher probe", 30.0, &check_rademacher},
  };
  return table;
}

std::vector<PropertyResult> run_suite(const SuiteOptions& o, const std::function<void(const PropertyResult&)>& on_done) {
  o.quad.validate();
  std::vector<PropertyResult> out;
  for (const auto& spec : property_table()) {
    if (!o.only.empty() && std::find(o.only.begin(), o.only.end(), spec.id) == o.only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    PropertyResult res = spec.run(o);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.id = spec.id;
    res.name = spec.name;
    res.limit_seconds = spec.limit_seconds;
    if (on_done) on_done(res);
    out.push_back(std::move(res));
  }
  return out;
}

void write_verify_csv(std::ostream& out, const std::vector<PropertyResult>& results) {
  out << "property,name,check,value,bound,pass\n";
  for (const auto& r : results)
    for (const auto& c : r.checks)
      out << r.id << ',' << r.name << ',' << c.label << ',' << csv::num(c.value) << ',' << csv::num(c.bound) << ','
          << (c.pass ? 1 : 0) << '\n';
}

}  // namespace qrect
