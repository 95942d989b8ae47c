#include "qrect/reconstruct.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qrect/csv.hpp"
#include "qrect/parallel.hpp"
#include "qrect/quadrature.hpp"
#include "qrect/rng.hpp"

namespace qrect {

namespace {

constexpr double kTol = 1e-10;

double cube_side(const Box& box) {
  const double s = box.side.front();
  for (double v : box.side)
    if (std::abs(v - s) > 1e-12 * s) throw Error(ErrorCode::Config, "reconstruction needs a cube");
  if (!(s > 0.0)) throw Error(ErrorCode::DegenerateBox, "cube has zero side");
  return s;
}

/// The plane in coordinates y = (x - lo) / side of the cube.
Hyperplane to_unit(const Hyperplane& h, const Box& box, double side) {
  return Hyperplane{h.normal, (h.offset - dot(h.normal, box.lo)) / side};
}

Hyperplane from_unit(const Hyperplane& h, const Box& box, double side) {
  return Hyperplane{h.normal, h.offset * side + dot(h.normal, box.lo)};
}

/// Unit vector orthogonal to e, tilted off e by angle theta.
Vec tilt(std::span<const double> e, double theta, Rng& rng) {
  const std::size_t n = e.size();
  Vec w;
  double len = 0.0;
  do {
    w = uniform_sphere(rng, n);
    const double d = dot(w, e);
    for (std::size_t k = 0; k < n; ++k) w[k] -= d * e[k];
    len = norm(w);
  } while (len < 1e-6);
  Vec out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = std::cos(theta) * e[k] + std::sin(theta) * w[k] / len;
  const double m = norm(out);
  for (double& v : out) v /= m;
  return out;
}

bool inside_planes(std::span<const Hyperplane> planes, std::span<const double> x, double tol) {
  for (const auto& h : planes)
    if (h.signed_distance(x) > tol) return false;
  return true;
}

/// Parameter interval of {base + s dir} inside the simplex {x : e_j.x <= t_j}.
std::optional<std::pair<double, double>> clip_simplex(std::span<const Hyperplane> planes,
                                                      std::span<const double> base,
                                                      std::span<const double> dir) {
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  for (const auto& h : planes) {
    const double a = dot(h.normal, dir);
    const double b = h.offset - dot(h.normal, base);
    if (std::abs(a) < 1e-14) {
      if (b < 0.0) return std::nullopt;
      continue;
    }
    if (a > 0.0) hi = std::min(hi, b / a);
    else lo = std::max(lo, b / a);
  }
  if (!(lo < hi)) return std::nullopt;
  return std::pair{lo, hi};
}

double score(const PlaneSelection& s, const ReconstructParams& par) {
  return std::max(s.max_beta / par.kappa_b, s.max_mismatch / par.kappa_c) - s.reference;
}

PlaneSelection evaluate_draw(const Field& f, const Box& box, const Box& big, double side,
                             const std::vector<Hyperplane>& base, const ReconstructParams& par,
                             const QuadratureSpec& quad, double reference, double tau, std::size_t draw) {
  const std::size_t n = box.dim();
  Rng rng(derive_seed(par.seed, {tag(StreamTag::PlaneSearch), box_key(box), draw}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double half = par.eps / std::numbers::sqrt2;
  const double theta_max = 2.0 * std::asin(std::min(1.0, half / 2.0));

  PlaneSelection sel;
  sel.base = base;
  sel.reference = reference;
  sel.draw = draw;
  sel.tau_base = transversality(base);
  for (const auto& V : base) {
    const Hyperplane u = to_unit(V, box, side);
    const Vec e = tilt(u.normal, theta_max * unif(rng), rng);
    const Hyperplane moved{e, u.offset + half * unif(rng)};
    sel.max_metric = std::max(sel.max_metric, plane_metric(u, moved));
    sel.perturbed.push_back(from_unit(moved, box, side));
  }
  sel.tau_perturbed = transversality(sel.perturbed);

  for (const auto& V : sel.perturbed) sel.fits.push_back(beta_p_restricted(f, big, V, 2.0, quad));
  for (const auto& r : sel.fits) sel.max_beta = std::max(sel.max_beta, r.value);

  sel.corners = simplex_from_planes(sel.perturbed).vertices;
  const double diam = big.diameter();
  sel.mismatch.assign(n + 1, std::vector<double>(n + 1, 0.0));
  bool corners_ok = true;
  for (std::size_t i = 0; i <= n; ++i) {
    const Vec& x = sel.corners[i];
    if (!big.contains(x, 1e-12 * diam)) {
      corners_ok = false;
      continue;
    }
    const double fx = f(x);
    for (std::size_t j = 0; j <= n; ++j) {
      if (j == i) continue;
      const double m = std::abs(fx - plane_affine_at(sel.perturbed[j], sel.fits[j].fit, x)) / diam;
      sel.mismatch[i][j] = m;
      sel.max_mismatch = std::max(sel.max_mismatch, m);
    }
  }

  const Box small = box.dilate(par.c);
  bool contains_small = true;
  for (const Vec& x : small.corners()) contains_small = contains_small && inside_planes(sel.perturbed, x, 0.0);

  sel.accepted = corners_ok && contains_small && sel.max_metric <= par.eps * (1.0 + 1e-12) &&
                 sel.tau_perturbed >= 0.5 * tau && sel.max_beta <= par.kappa_b * reference + kTol &&
                 sel.max_mismatch <= par.kappa_c * reference + kTol;
  if (!corners_ok || !contains_small) sel.max_mismatch = std::numeric_limits<double>::infinity();
  return sel;
}

}  // namespace

void ReconstructParams::validate(std::size_t n) const {
  if (n < 2) throw Error(ErrorCode::Config, "reconstruction needs n >= 2");
  if (!(c > 0.0 && c < 1.0)) throw Error(ErrorCode::Config, "c must lie in (0, 1)");
  if (!(C >= 1.0)) throw Error(ErrorCode::Config, "C must be >= 1");
  if (!(eps > 0.0 && eps <= 1.0)) throw Error(ErrorCode::Config, "eps must lie in (0, 1]");
  if (!(kappa_b > 0.0) || !(kappa_c > 0.0)) throw Error(ErrorCode::Config, "kappa multipliers must be positive");
  if (budget == 0) throw Error(ErrorCode::Config, "search budget must be positive");
  if (directions == 0 || lines == 0) throw Error(ErrorCode::Config, "line family needs directions and lines");
}

double combined_beta(const Field& f, const Box& box, const QuadratureSpec& quad) {
  return combined_beta_parts(f, box, quad).value;
}

std::vector<Hyperplane> regular_simplex_planes(const Box& box) {
  const std::size_t n = box.dim();
  const double side = cube_side(box);
  const Vec c0 = box.center();
  const double r = side / 4.0;
  std::vector<Hyperplane> planes;
  for (std::size_t i = 0; i <= n; ++i) {
    // vertex i = e_i - centroid in R^{n+1}, written in the Helmert basis of
    // the sum-zero hyperplane
    Vec v(n);
    for (std::size_t k = 1; k <= n; ++k) {
      const double kk = static_cast<double>(k);
      double h = 0.0;
      if (i < k) h = 1.0;
      else if (i == k) h = -kk;
      v[k - 1] = h / std::sqrt(kk * (kk + 1.0));
    }
    const double len = norm(v);
    Vec e(n);
    for (std::size_t k = 0; k < n; ++k) e[k] = -v[k] / len;
    planes.push_back(Hyperplane{e, dot(e, c0) + r / static_cast<double>(n)});
  }
  return planes;
}

double plane_affine_at(const Hyperplane& plane, const AffineMap& fit, std::span<const double> x) {
  const auto frame = orthonormal_complement(plane.normal);
  const Vec foot = plane.foot();
  Vec u(frame.size());
  for (std::size_t k = 0; k < frame.size(); ++k) u[k] = dot(x, frame[k]) - dot(foot, frame[k]);
  return fit(u);
}

PlaneSelection select_transversal_planes(const Field& f, const Box& box, const ReconstructParams& par,
                                         const QuadratureSpec& quad, std::optional<double> reference) {
  const std::size_t n = box.dim();
  par.validate(n);
  quad.validate();
  if (f.dim() != n) throw Error(ErrorCode::Config, "field and box dimensions differ");
  const double side = cube_side(box);
  const Box big = box.dilate(par.C);
  const double ref =
      reference ? *reference : beta_integralgeometric(f, big, n - 1, 2.0, 2.0, quad).value;
  const auto base = regular_simplex_planes(box);
  const double tau = par.tau > 0.0 ? par.tau : transversality(base);

  // fixed batch width keeps the accepted draw independent of the thread count
  constexpr std::size_t kBatch = 8;
  std::optional<PlaneSelection> best;
  for (std::size_t start = 0; start < par.budget; start += kBatch) {
    const std::size_t count = std::min(kBatch, par.budget - start);
    std::vector<PlaneSelection> batch(count);
    parallel_for(count, [&](std::size_t k) {
      batch[k] = evaluate_draw(f, box, big, side, base, par, quad, ref, tau, start + k);
    });
    for (auto& s : batch) {
      s.draws_tried = s.draw + 1;
      if (s.accepted) return std::move(s);
      if (!best || score(s, par) < score(*best, par)) best = std::move(s);
    }
  }
  best->draws_tried = par.budget;
  throw SelectionExhausted(std::move(*best));
}

AffineMap build_global_affine(std::span<const Vec> corners, std::span<const double> values) {
  const std::size_t m = corners.size();
  if (m < 2 || values.size() != m) throw Error(ErrorCode::Config, "need n+1 corners and values");
  const std::size_t n = corners.front().size();
  if (m != n + 1) throw Error(ErrorCode::Config, "need exactly n+1 corners");
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd E(N, N);
  double scale = 0.0;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      E(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(k)) = corners[i][k] - corners[0][k];
      scale = std::max(scale, std::abs(corners[i][k] - corners[0][k]));
    }
  if (scale == 0.0 || std::abs(E.determinant()) <= 1e-12 * std::pow(scale, static_cast<double>(n)))
    throw Error(ErrorCode::DegenerateSimplex, "corners are affinely dependent");
  Eigen::VectorXd rhs(N);
  for (std::size_t i = 1; i <= n; ++i) rhs(static_cast<Eigen::Index>(i - 1)) = values[i] - values[0];
  const Eigen::VectorXd g = E.fullPivLu().solve(rhs);
  AffineMap A;
  A.grad.assign(g.data(), g.data() + n);
  A.intercept = values[0] - dot(A.grad, corners[0]);
  return A;
}

namespace {

LineFamilyEstimate line_family(const Field& f, const Box& small, const Box& big,
                               std::span<const Hyperplane> simplex, const AffineMap& A,
                               const ReconstructParams& par, const QuadratureSpec& quad) {
  const std::size_t n = small.dim();
  Vec e0(n);
  for (std::size_t k = 0; k < n; ++k) e0[k] = 1.0 / (static_cast<double>(k) + std::numbers::phi);
  const double l0 = norm(e0);
  for (double& v : e0) v /= l0;
  const double inf = std::numeric_limits<double>::infinity();
  const double dsmall = small.diameter(), dbig = big.diameter();

  std::optional<LineFamilyEstimate> best;
  for (std::size_t d = 0; d < par.directions; ++d) {
    Rng rng(derive_seed(par.seed, {tag(StreamTag::LineDirection), box_key(small), d}));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Vec e = d == 0 ? e0 : tilt(e0, 0.1 * unif(rng), rng);
    const auto frame = orthonormal_complement(e);
    Vec lo(n - 1, inf), hi(n - 1, -inf);
    for (const Vec& x : small.corners())
      for (std::size_t k = 0; k + 1 < n; ++k) {
        lo[k] = std::min(lo[k], dot(x, frame[k]));
        hi[k] = std::max(hi[k], dot(x, frame[k]));
      }
    double rect = 1.0;
    for (std::size_t k = 0; k + 1 < n; ++k) rect *= hi[k] - lo[k];

    std::vector<Vec> bases(par.lines);
    for (auto& b : bases) {
      b.assign(n, 0.0);
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const double v = lo[k] + (hi[k] - lo[k]) * unif(rng);
        for (std::size_t a = 0; a < n; ++a) b[a] += v * frame[k][a];
      }
    }
    std::vector<double> beta_sq(par.lines, -1.0), delta_sq(par.lines, 0.0);
    parallel_for(par.lines, [&](std::size_t i) {
      const Vec& b = bases[i];
      if (!clip_line(small, b, e)) return;
      beta_sq[i] = std::pow(beta_p_restricted(f, big, LineSeg{b, e, 0.0, 0.0}, inf, quad).value, 2);
      const auto seg = clip_simplex(simplex, b, e);
      if (!seg) throw Error(ErrorCode::EmptyIntersection, "line through cQ misses the simplex");
      double dv = 0.0;
      for (double s : {seg->first, seg->second}) {
        const Vec x = LineSeg{b, e, 0.0, 0.0}.point(s);
        dv = std::max(dv, std::abs(f(x) - A(x)) / dbig);
      }
      delta_sq[i] = dv * dv;
    });
    LineFamilyEstimate est;
    est.direction = e;
    double sb = 0.0, sd = 0.0;
    for (std::size_t i = 0; i < par.lines; ++i) {
      if (beta_sq[i] < 0.0) continue;
      ++est.lines;
      sb += beta_sq[i];
      sd += delta_sq[i];
    }
    if (est.lines == 0) continue;
    est.shadow = rect * static_cast<double>(est.lines) / static_cast<double>(par.lines);
    const double norm_ = est.shadow / std::pow(dsmall, static_cast<double>(n - 1));
    est.beta_integral = norm_ * sb / static_cast<double>(est.lines);
    est.delta_integral = norm_ * sd / static_cast<double>(est.lines);
    if (!best || est.beta_integral < best->beta_integral) best = std::move(est);
  }
  if (!best) throw Error(ErrorCode::EmptyIntersection, "no sampled line met cQ");
  return *best;
}

/// beta_2(cQ) from samples on horizontal lines with Gauss-Legendre rules in
/// both the line parameter and the height.
double planar_beta2(const Field& f, const Box& small, const QuadratureSpec& quad) {
  const auto g = gauss_legendre(quad.nodes);
  const std::size_t m = g.nodes.size();
  SampleSet s(2, m * m);
  std::size_t i = 0;
  for (std::size_t a = 0; a < m; ++a) {
    const double y = small.lo[1] + 0.5 * small.side[1] * (g.nodes[a] + 1.0);
    for (std::size_t b = 0; b < m; ++b) {
      const double x = small.lo[0] + 0.5 * small.side[0] * (g.nodes[b] + 1.0);
      const double w = 0.25 * small.side[0] * small.side[1] * g.weights[a] * g.weights[b];
      const double pt[2] = {x, y};
      s.set(i++, pt, f(pt), w);
    }
  }
  const AffineFit fit = fit_affine_l2(s);
  const double diam = small.diameter();
  return std::sqrt(fit.residual_sq * small.volume() / (diam * diam)) / diam;
}

}  // namespace

ReconstructionReport verify_form1(const Field& f, const Box& box, const ReconstructParams& par,
                                  const QuadratureSpec& quad) {
  const std::size_t n = box.dim();
  par.validate(n);
  quad.validate();
  if (f.dim() != n) throw Error(ErrorCode::Config, "field and box dimensions differ");
  cube_side(box);
  const Box big = box.dilate(par.C);
  const Box small = box.dilate(par.c);

  ReconstructionReport rep;
  rep.params = par;
  const auto parts = combined_beta_parts(f, big, quad);
  rep.beta_combined = parts.value;
  rep.beta22_planes = parts.planes.value;
  rep.beta_inf2_lines = parts.lines.value;

  try {
    rep.selection = select_transversal_planes(f, box, par, quad, parts.planes.value);
  } catch (const SelectionExhausted& e) {
    rep.selection = e.best();
    rep.exhausted = true;
  }
  if (rep.params.tau <= 0.0) rep.params.tau = rep.selection.tau_base;

  const auto& corners = rep.selection.corners;
  std::vector<double> values;
  for (const Vec& x : corners) values.push_back(f(x));
  rep.A = build_global_affine(corners, values);
  for (std::size_t i = 0; i < corners.size(); ++i)
    rep.corner_residual = std::max(rep.corner_residual, std::abs(rep.A(corners[i]) - values[i]));

  const BetaRecord direct = beta_p_cube(f, small, 2.0, quad);
  rep.beta2_direct = direct.value;
  {
    // the constructed map on the same midpoint grid and normalization
    double sum = 0.0;
    std::size_t count = 0;
    std::vector<std::size_t> idx(n, 0);
    Vec x(n);
    while (true) {
      for (std::size_t k = 0; k < n; ++k)
        x[k] = small.lo[k] + small.side[k] * (static_cast<double>(idx[k]) + 0.5) / static_cast<double>(quad.nodes);
      const double r = f(x) - rep.A(x);
      sum += r * r;
      ++count;
      std::size_t k = 0;
      while (k < n && ++idx[k] == quad.nodes) idx[k++] = 0;
      if (k == n) break;
    }
    const double diam = small.diameter();
    const double integral = sum / static_cast<double>(count) * small.volume();
    rep.beta2_constructed = std::sqrt(integral / std::pow(diam, static_cast<double>(n))) / diam;
  }

  if (rep.beta2_direct <= kTol) rep.ratio = 0.0;  // both sides at round-off level
  else if (rep.beta_combined > 0.0) rep.ratio = rep.beta2_direct / rep.beta_combined;
  else rep.ratio = std::numeric_limits<double>::infinity();

  rep.family = line_family(f, small, big, rep.selection.perturbed, rep.A, par, quad);

  if (n == 2) {
    rep.planar_beta2 = planar_beta2(f, small, quad);
    const double gap = std::abs(*rep.planar_beta2 - rep.beta2_direct);
    rep.planar_gap = rep.beta2_direct > kTol ? gap / rep.beta2_direct : gap;
  }
  return rep;
}

void write_reconstruct_csv(std::ostream& out, const ReconstructionReport& r) {
  const auto& p = r.params;
  const auto& s = r.selection;
  out << "n,c,C,eps,tau,seed,beta2_direct,beta2_constructed,beta_combined,beta22_planes,beta_inf2_lines,"
         "ratio,corner_residual,accepted,draw,max_metric,max_beta,max_mismatch,family_beta,family_delta,"
         "planar_beta2,planar_gap\n";
  out << r.A.grad.size() << ',' << csv::num(p.c) << ',' << csv::num(p.C) << ',' << csv::num(p.eps) << ','
      << csv::num(p.tau) << ',' << csv::num(p.seed) << ',' << csv::num(r.beta2_direct) << ','
      << csv::num(r.beta2_constructed) << ',' << csv::num(r.beta_combined) << ','
      << csv::num(r.beta22_planes) << ',' << csv::num(r.beta_inf2_lines) << ',' << csv::num(r.ratio) << ','
      << csv::num(r.corner_residual) << ',' << (s.accepted ? 1 : 0) << ',' << s.draw << ','
      << csv::num(s.max_metric) << ',' << csv::num(s.max_beta) << ',' << csv::num(s.max_mismatch) << ','
      << csv::num(r.family.beta_integral) << ',' << csv::num(r.family.delta_integral) << ','
      << (r.planar_beta2 ? csv::num(*r.planar_beta2) : std::string()) << ','
      << (r.planar_gap ? csv::num(*r.planar_gap) : std::string()) << '\n';
}

void write_planes_csv(std::ostream& out, const ReconstructionReport& r) {
  const auto& s = r.selection;
  out << "plane,base_normal,base_offset,normal,offset,beta2,corner,corner_value\n";
  for (std::size_t j = 0; j < s.perturbed.size(); ++j) {
    const Vec& x = s.corners[j];
    out << j << ',' << csv::vec(s.base[j].normal) << ',' << csv::num(s.base[j].offset) << ','
        << csv::vec(s.perturbed[j].normal) << ',' << csv::num(s.perturbed[j].offset) << ','
        << csv::num(s.fits[j].value) << ',' << csv::vec(x) << ',' << csv::num(r.A(x)) << '\n';
  }
}

}  // namespace qrect
