#include "qrect/parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qrect/csv.hpp"
#include "qrect/errors.hpp"
#include "qrect/fitting.hpp"
#include "qrect/parallel.hpp"
#include "qrect/rng.hpp"

namespace qrect {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// psi sampled on a tensor grid: space points xs (ds coordinates each), time
/// nodes ts, values time-major.
struct Cloud {
  std::size_t ds = 0;
  std::vector<Vec> xs;
  Vec ts;
  std::vector<double> v;

  std::size_t nx() const { return xs.size(); }
  std::size_t nt() const { return ts.size(); }
  double at(std::size_t it, std::size_t ix) const { return v[it * xs.size() + ix]; }
};

double node(double lo, double len, std::size_t i, std::size_t count, bool closed) {
  if (closed) return lo + len * static_cast<double>(i) / static_cast<double>(count - 1);
  return lo + len * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
}

void check_box(const Field& psi, const ParabolicBox& box) {
  if (box.dim() < 2) throw Error(ErrorCode::Config, "parabolic boxes need n >= 2");
  if (psi.dim() != box.dim()) throw Error(ErrorCode::Config, "field and box dimensions differ");
  if (!(box.side > 0.0) || !(box.duration > 0.0)) throw Error(ErrorCode::DegenerateBox, "parabolic box is empty");
}

Cloud sample(const Field& psi, const ParabolicBox& box, std::size_t per_axis, bool closed) {
  check_box(psi, box);
  Cloud c;
  c.ds = box.space_dim();
  const std::size_t m = closed ? 2 * per_axis + 1 : per_axis;
  std::size_t nx = 1;
  for (std::size_t k = 0; k < c.ds; ++k) nx *= m;
  c.xs.resize(nx);
  std::vector<std::size_t> idx(c.ds, 0);
  for (std::size_t i = 0; i < nx; ++i) {
    Vec x(c.ds);
    for (std::size_t k = 0; k < c.ds; ++k) x[k] = node(box.space_lo[k], box.side, idx[k], m, closed);
    c.xs[i] = std::move(x);
    for (std::size_t k = 0; k < c.ds && ++idx[k] == m; ++k) idx[k] = 0;
  }
  c.ts.resize(m);
  for (std::size_t i = 0; i < m; ++i) c.ts[i] = node(box.t0, box.duration, i, m, closed);
  c.v.resize(m * nx);
  Vec p(c.ds + 1);
  for (std::size_t it = 0; it < m; ++it)
    for (std::size_t ix = 0; ix < nx; ++ix) {
      std::copy(c.xs[ix].begin(), c.xs[ix].end(), p.begin());
      p[c.ds] = c.ts[it];
      c.v[it * nx + ix] = psi(p);
    }
  return c;
}

AffineFit fit_l2(const SampleSet& s, std::optional<double> L) {
  try {
    return L ? fit_affine_l2_constrained(s, *L) : fit_affine_l2(s);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RankDeficient) throw Error(ErrorCode::DegenerateBox, e.what());
    throw;
  }
}

std::vector<AffineFit> slice_fits(const Cloud& c, std::optional<double> L) {
  std::vector<AffineFit> fits;
  fits.reserve(c.nt());
  SampleSet s(c.ds, c.nx());
  for (std::size_t it = 0; it < c.nt(); ++it) {
    for (std::size_t ix = 0; ix < c.nx(); ++ix) s.set(ix, c.xs[ix], c.at(it, ix), 1.0);
    fits.push_back(fit_l2(s, L));
  }
  return fits;
}

double mean_slice_error(const std::vector<AffineFit>& fits) {
  double acc = 0.0;
  for (const auto& f : fits) acc += f.residual_sq;
  return acc / static_cast<double>(fits.size());
}

double mean_time_variance(const Cloud& c) {
  double acc = 0.0;
  for (std::size_t ix = 0; ix < c.nx(); ++ix) {
    // shifted by the first value so constant columns give exactly zero
    const double v0 = c.at(0, ix);
    double mean = 0.0;
    for (std::size_t it = 0; it < c.nt(); ++it) mean += c.at(it, ix) - v0;
    mean /= static_cast<double>(c.nt());
    double var = 0.0;
    for (std::size_t it = 0; it < c.nt(); ++it) {
      const double d = c.at(it, ix) - v0 - mean;
      var += d * d;
    }
    acc += var / static_cast<double>(c.nt());
  }
  return acc / static_cast<double>(c.nx());
}

/// Mean square residual of psi - A(x) over the cloud -> normalized beta_2.
double normalize_beta2(double mean_sq, const ParabolicBox& box) {
  const double diam = box.diameter();
  const double integral = mean_sq * box.volume();
  return std::sqrt(integral / std::pow(diam, static_cast<double>(box.dim() + 1))) / diam;
}

AffineFit full_fit_map(const Cloud& c, std::optional<double> L) {
  SampleSet s(c.ds, c.nx() * c.nt());
  std::size_t i = 0;
  for (std::size_t it = 0; it < c.nt(); ++it)
    for (std::size_t ix = 0; ix < c.nx(); ++ix) s.set(i++, c.xs[ix], c.at(it, ix), 1.0);
  return fit_l2(s, L);
}

double full_fit(const Cloud& c, std::optional<double> L) { return full_fit_map(c, L).residual_sq; }

double sup_fit(const Cloud& c, const ParabolicBox& box, std::optional<double> L) {
  // sup over t of |v - a| only sees the extreme values at each x
  SampleSet s(c.ds, 2 * c.nx());
  for (std::size_t ix = 0; ix < c.nx(); ++ix) {
    double lo = kInf, hi = -kInf;
    for (std::size_t it = 0; it < c.nt(); ++it) {
      lo = std::min(lo, c.at(it, ix));
      hi = std::max(hi, c.at(it, ix));
    }
    s.set(2 * ix, c.xs[ix], hi, 1.0);
    s.set(2 * ix + 1, c.xs[ix], lo, 1.0);
  }
  try {
    return fit_affine_minimax(s, L).residual_sq / box.diameter();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RankDeficient) throw Error(ErrorCode::DegenerateBox, e.what());
    throw;
  }
}

DtQuotient dt_from(const Cloud& c, const ParabolicBox& box) {
  const std::size_t nt = c.nt();
  const double h = box.duration / static_cast<double>(nt);
  const double cell = std::pow(box.side, static_cast<double>(c.ds)) / static_cast<double>(c.nx());
  DtQuotient q;
  for (std::size_t ix = 0; ix < c.nx(); ++ix) {
    double off = 0.0;
    for (std::size_t i = 0; i < nt; ++i)
      for (std::size_t j = 0; j < nt; ++j) {
        if (i == j) continue;
        const double d = c.at(i, ix) - c.at(j, ix);
        const double dt = c.ts[i] - c.ts[j];
        off += d * d / (dt * dt);
      }
    double band = 0.0;
    for (std::size_t i = 0; i < nt; ++i) {
      double s = 0.0;
      int k = 0;
      for (std::size_t j : {i - 1, i + 1}) {
        if (j >= nt) continue;  // wraps for i = 0
        const double d = c.at(i, ix) - c.at(j, ix);
        const double dt = c.ts[i] - c.ts[j];
        s += d * d / (dt * dt);
        ++k;
      }
      if (k) band += s / k;
    }
    q.offdiag += off * h * h * cell;
    q.band += band * h * h * cell;
  }
  q.offdiag /= box.volume();
  q.band /= box.volume();
  q.value = q.offdiag + q.band;
  return q;
}

void check_L(std::optional<double> L) {
  if (L && !(*L > 0.0)) throw Error(ErrorCode::Config, "gradient bound L must be positive");
}

}  // namespace

double horizontal_affinity(const Field& psi, const ParabolicBox& box, const QuadratureSpec& quad,
                           std::optional<double> L) {
  quad.validate();
  check_L(L);
  const Cloud c = sample(psi, box, quad.nodes, false);
  const double d = box.space_diameter();
  return std::sqrt(mean_slice_error(slice_fits(c, L))) / d;
}

double vertical_osc(const Field& psi, const ParabolicBox& box, const QuadratureSpec& quad) {
  quad.validate();
  const Cloud c = sample(psi, box, quad.nodes, false);
  return std::sqrt(mean_time_variance(c) / box.duration);
}

double parabolic_beta2(const Field& psi, const ParabolicBox& box, const QuadratureSpec& quad,
                       std::optional<double> L) {
  quad.validate();
  check_L(L);
  const Cloud c = sample(psi, box, quad.nodes, false);
  return normalize_beta2(full_fit(c, L), box);
}

AffineFit parabolic_space_fit(const Field& psi, const ParabolicBox& box, const QuadratureSpec& quad,
                              std::optional<double> L) {
  quad.validate();
  check_L(L);
  return full_fit_map(sample(psi, box, quad.nodes, false), L);
}

double parabolic_beta_inf(const Field& psi, const ParabolicBox& box, const QuadratureSpec& quad,
                          std::optional<double> L) {
  quad.validate();
  check_L(L);
  const Cloud c = sample(psi, box, quad.nodes, true);
  return sup_fit(c, box, L);
}

AffineCombination combine_affine_bound(const Field& psi, const ParabolicBox& box, const QuadratureSpec& quad,
                                       std::optional<double> L) {
  quad.validate();
  check_L(L);
  const Cloud c = sample(psi, box, quad.nodes, false);
  const auto fits = slice_fits(c, L);
  AffineCombination out;
  out.A.grad.assign(c.ds, 0.0);
  for (const auto& f : fits) {
    for (std::size_t k = 0; k < c.ds; ++k) out.A.grad[k] += f.map.grad[k];
    out.A.intercept += f.map.intercept;
  }
  const double nt = static_cast<double>(fits.size());
  for (double& g : out.A.grad) g /= nt;
  out.A.intercept /= nt;

  double acc = 0.0;
  for (std::size_t ix = 0; ix < c.nx(); ++ix) {
    const double a = out.A(c.xs[ix]);
    for (std::size_t it = 0; it < c.nt(); ++it) acc += (c.at(it, ix) - a) * (c.at(it, ix) - a);
  }
  out.residual_sq = acc / static_cast<double>(c.nx() * c.nt());
  out.beta_h = mean_slice_error(fits);
  out.beta_v = mean_time_variance(c);
  out.bound = 6.0 * out.beta_h + 4.0 * out.beta_v;
  out.normalized = normalize_beta2(out.residual_sq, box);
  out.holds = out.residual_sq <= out.bound + 1e-10;
  return out;
}

DtQuotient dt_carleson_quotient(const Field& psi, const ParabolicBox& box, const QuadratureSpec& quad) {
  quad.validate();
  return dt_from(sample(psi, box, quad.nodes, false), box);
}

ParabolicCoefficients parabolic_coefficients(const Field& psi, const ParabolicBox& box,
                                             const QuadratureSpec& quad, double L) {
  quad.validate();
  check_L(L);
  const Cloud c = sample(psi, box, quad.nodes, false);
  const Cloud sup = sample(psi, box, quad.nodes, true);
  ParabolicCoefficients r;
  r.box = box;
  r.L = L;
  r.nodes = quad.nodes;
  const double d1 = box.space_diameter();
  r.affinity = std::sqrt(mean_slice_error(slice_fits(c, std::nullopt))) / d1;
  r.affinity_L = std::sqrt(mean_slice_error(slice_fits(c, L))) / d1;
  r.osc = std::sqrt(mean_time_variance(c) / box.duration);
  r.beta2 = normalize_beta2(full_fit(c, std::nullopt), box);
  r.beta2_L = normalize_beta2(full_fit(c, L), box);
  r.beta_inf = sup_fit(sup, box, std::nullopt);
  r.beta_inf_L = sup_fit(sup, box, L);
  r.dt = dt_from(c, box);
  return r;
}

void write_parabolic_coefficients_csv(std::ostream& out, const std::vector<ParabolicCoefficients>& rows) {
  out << "space_lo,side,t0,duration,affinity,affinity_L,osc,beta2,beta2_L,beta_inf,beta_inf_L,dt,dt_offdiag,"
         "dt_band,L\n";
  for (const auto& r : rows) {
    out << csv::vec(r.box.space_lo) << ',' << csv::num(r.box.side) << ',' << csv::num(r.box.t0) << ','
        << csv::num(r.box.duration) << ',' << csv::num(r.affinity) << ',' << csv::num(r.affinity_L) << ','
        << csv::num(r.osc) << ',' << csv::num(r.beta2) << ',' << csv::num(r.beta2_L) << ','
        << csv::num(r.beta_inf) << ',' << csv::num(r.beta_inf_L) << ',' << csv::num(r.dt.value) << ','
        << csv::num(r.dt.offdiag) << ',' << csv::num(r.dt.band) << ',' << csv::num(r.L) << '\n';
  }
}

std::string_view to_string(ParabolicSelector s) {
  switch (s) {
    case ParabolicSelector::Beta2: return "beta2";
    case ParabolicSelector::Beta2L: return "beta2_L";
    case ParabolicSelector::Affinity: return "affinity";
    case ParabolicSelector::AffinityL: return "affinity_L";
    case ParabolicSelector::Osc: return "osc";
    case ParabolicSelector::BetaInf: return "beta_inf";
  }
  return "unknown";
}

std::optional<ParabolicSelector> parabolic_selector_from_string(std::string_view s) {
  for (auto v : {ParabolicSelector::Beta2, ParabolicSelector::Beta2L, ParabolicSelector::Affinity,
                 ParabolicSelector::AffinityL, ParabolicSelector::Osc, ParabolicSelector::BetaInf})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

CarlesonReport parabolic_carleson_sum(const Field& psi, const DyadicParabolicBox& q0, double C, int J,
                                      ParabolicSelector sel, const QuadratureSpec& quad, std::optional<double> L) {
  if (J < 0) throw Error(ErrorCode::Config, "depth J must be >= 0");
  if (!(C >= 1.0)) throw Error(ErrorCode::Config, "dilation C must be >= 1");
  quad.validate();
  check_L(L);
  const bool restricted = sel == ParabolicSelector::Beta2L || sel == ParabolicSelector::AffinityL;
  if (restricted && !L) throw Error(ErrorCode::Config, "restricted selector needs L");
  const std::size_t n = q0.space_index.size() + 1;
  check_box(psi, q0.box());

  CarlesonReport rep;
  rep.selector = std::string(to_string(sel));
  rep.dilation = C;
  rep.depth = J;
  rep.power = sel == ParabolicSelector::BetaInf ? static_cast<double>(n + 3) : 2.0;
  rep.lipschitz = 1.0;
  rep.root_volume = q0.box().volume();

  std::vector<DyadicParabolicBox> level{q0};
  double cumulative = 0.0;
  for (int j = 0; j <= J; ++j) {
    std::vector<CubeRow> rows(level.size());
    parallel_for(level.size(), [&](std::size_t i) {
      const ParabolicBox region = level[i].box().dilate(C);
      double v = 0.0;
      switch (sel) {
        case ParabolicSelector::Beta2: v = parabolic_beta2(psi, region, quad); break;
        case ParabolicSelector::Beta2L: v = parabolic_beta2(psi, region, quad, L); break;
        case ParabolicSelector::Affinity: v = horizontal_affinity(psi, region, quad); break;
        case ParabolicSelector::AffinityL: v = horizontal_affinity(psi, region, quad, L); break;
        case ParabolicSelector::Osc: v = vertical_osc(psi, region, quad); break;
        case ParabolicSelector::BetaInf: v = parabolic_beta_inf(psi, region, quad); break;
      }
      CubeRow row;
      row.level = level[i].level;
      row.index = level[i].space_index;
      row.index.push_back(level[i].time_index);
      row.value = v;
      rows[i] = std::move(row);
    });
    ScaleRow sr;
    sr.level = q0.level + j;
    sr.cubes = level.size();
    const double vol = level.front().box().volume();
    for (const auto& row : rows) sr.contribution += std::pow(row.value, rep.power) * vol;
    cumulative += sr.contribution;
    sr.cumulative = cumulative;
    sr.ratio = cumulative / rep.root_volume;
    rep.scales.push_back(sr);
    for (auto& row : rows) rep.cubes.push_back(std::move(row));
    if (j == J) break;
    std::vector<DyadicParabolicBox> next;
    next.reserve(level.size() * (std::size_t{1} << (n + 1)));
    for (const auto& b : level)
      for (auto& ch : b.children()) next.push_back(std::move(ch));
    level = std::move(next);
  }
  rep.total = cumulative;
  rep.ratio = cumulative / rep.root_volume;
  return rep;
}

HolderReport holder_exponent_check(const Field& psi, const std::vector<ParabolicBox>& boxes, double L,
                                   double constant, const QuadratureSpec& quad) {
  if (!(L >= 1.0)) throw Error(ErrorCode::Config, "Hoelder check needs L >= 1");
  quad.validate();
  HolderReport rep;
  rep.constant = constant;
  rep.rows.resize(boxes.size());
  if (boxes.empty()) return rep;
  const double n = static_cast<double>(boxes.front().dim());
  rep.exponent = 2.0 / (n + 3.0);
  parallel_for(boxes.size(), [&](std::size_t i) {
    HolderRow r;
    r.box = boxes[i];
    r.beta2_L_double = parabolic_beta2(psi, boxes[i].dilate(2.0), quad, L);
    r.beta_inf_L = parabolic_beta_inf(psi, boxes[i], quad, L);
    const double scale = std::pow(r.beta2_L_double, rep.exponent);
    if (scale > 0.0) r.ratio = r.beta_inf_L / scale;
    else r.ratio = r.beta_inf_L <= 1e-10 ? 0.0 : kInf;
    r.violation = r.beta_inf_L > constant * scale + 1e-12;
    rep.rows[i] = r;
  });
  for (const auto& r : rep.rows) {
    rep.fitted = std::max(rep.fitted, r.ratio);
    rep.violations += r.violation ? 1 : 0;
  }
  return rep;
}

std::vector<ParabolicBox> random_parabolic_boxes(std::size_t n, std::size_t count, double lo, double hi,
                                                 int kmin, int kmax, std::uint64_t seed) {
  if (n < 2 || kmin > kmax || !(hi >= lo)) throw Error(ErrorCode::Config, "bad random box parameters");
  Rng rng(seed);
  std::uniform_real_distribution<double> pos(lo, hi);
  std::uniform_int_distribution<int> lev(kmin, kmax);
  std::vector<ParabolicBox> out;
  for (std::size_t i = 0; i < count; ++i) {
    ParabolicBox b;
    b.space_lo.resize(n - 1);
    for (double& x : b.space_lo) x = pos(rng);
    b.side = std::ldexp(1.0, -lev(rng));
    b.t0 = pos(rng);
    b.duration = b.side * b.side;
    out.push_back(b);
  }
  return out;
}

DifferentiabilityProbe rademacher_probe(const Field& psi, const Vec& p, const std::vector<double>& radii,
                                        const QuadratureSpec& quad, std::size_t directions) {
  quad.validate();
  const std::size_t n = p.size();
  if (n < 2 || psi.dim() != n) throw Error(ErrorCode::Config, "probe point must match the field, n >= 2");
  if (radii.empty() || directions == 0) throw Error(ErrorCode::Config, "probe needs radii and directions");
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (!(radii[i] > 0.0) || (i && !(radii[i] < radii[i - 1])))
      throw Error(ErrorCode::Config, "probe radii must be positive and decreasing");
  const std::size_t ds = n - 1;

  DifferentiabilityProbe out;
  out.point = p;
  out.radii = radii;
  {
    ParabolicBox slice;
    const double r0 = radii.back();
    slice.space_lo.resize(ds);
    for (std::size_t k = 0; k < ds; ++k) slice.space_lo[k] = p[k] - r0;
    slice.side = 2.0 * r0;
    std::size_t count = 1;
    for (std::size_t k = 0; k < ds; ++k) count *= quad.nodes;
    SampleSet s(ds, count);
    std::vector<std::size_t> idx(ds, 0);
    Vec q(n);
    q[ds] = p[ds];
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t k = 0; k < ds; ++k) q[k] = node(slice.space_lo[k], slice.side, idx[k], quad.nodes, false);
      s.set(i, std::span<const double>(q.data(), ds), psi(q), 1.0);
      for (std::size_t k = 0; k < ds && ++idx[k] == quad.nodes; ++k) idx[k] = 0;
    }
    out.gradient = fit_affine_l2(s).map.grad;
  }
  const double fp = psi(p);
  out.eps.resize(radii.size());
  parallel_for(radii.size(), [&](std::size_t ri) {
    const double r = radii[ri];
    Rng rng(derive_seed(quad.seed, {tag(StreamTag::Probe), ri}));
    std::bernoulli_distribution coin(0.5);
    double best = 0.0;
    Vec q(n);
    for (std::size_t k = 0; k < directions; ++k) {
      const double lambda = (static_cast<double>(k) + 0.5) / static_cast<double>(directions);
      const Vec u = uniform_sphere(rng, ds);
      const double dt = std::pow((1.0 - lambda) * r, 2);
      double lin = 0.0;
      for (std::size_t a = 0; a < ds; ++a) {
        q[a] = p[a] + lambda * r * u[a];
        lin += out.gradient[a] * (q[a] - p[a]);
      }
      q[ds] = p[ds] + (coin(rng) ? dt : -dt);
      best = std::max(best, std::abs(psi(q) - fp - lin) / parabolic_distance(p, q));
    }
    out.eps[ri] = best;
  });
  bool positive = radii.size() >= 2;
  for (double e : out.eps) positive = positive && e > 1e-300;
  if (positive) {
    double mx = 0.0, my = 0.0;
    const double m = static_cast<double>(radii.size());
    for (std::size_t i = 0; i < radii.size(); ++i) {
      mx += std::log(radii[i]) / m;
      my += std::log(out.eps[i]) / m;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const double dx = std::log(radii[i]) - mx;
      sxy += dx * (std::log(out.eps[i]) - my);
      sxx += dx * dx;
    }
    out.slope = sxy / sxx;
  }
  return out;
}

void write_probe_csv(std::ostream& out, const DifferentiabilityProbe& probe) {
  out << "r,eps\n";
  for (std::size_t i = 0; i < probe.radii.size(); ++i)
    out << csv::num(probe.radii[i]) << ',' << csv::num(probe.eps[i]) << '\n';
}

}  // namespace qrect
