#include "qrect/beta.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <utility>

#include "qrect/csv.hpp"
#include "qrect/errors.hpp"
#include "qrect/parallel.hpp"
#include "qrect/rng.hpp"
#include "qrect/sampling.hpp"

namespace qrect {

void QuadratureSpec::validate() const {
  auto odd = [](std::size_t v, const char* what) {
    if (v < 3 || v % 2 == 0)
      throw Error(ErrorCode::Config, std::string(what) + " must be odd and >= 3, got " + std::to_string(v));
  };
  odd(nodes, "quadrature nodes");
  odd(patch_nodes, "patch nodes");
  if (mc_samples < 1) throw Error(ErrorCode::Config, "mc_samples must be >= 1");
}

std::string_view to_string(BetaKind kind) {
  switch (kind) {
    case BetaKind::Cube: return "cube";
    case BetaKind::Restricted: return "restricted";
    case BetaKind::RestrictedInf: return "restricted_inf";
    case BetaKind::IntegralGeometric: return "integralgeometric";
  }
  return "unknown";
}

std::string_view to_string(Selector s) {
  switch (s) {
    case Selector::Beta2Cube: return "beta2";
    case Selector::BetaInfLines: return "beta_inf_lines";
    case Selector::Beta22Planes: return "beta22_planes";
    case Selector::Combined: return "combined";
  }
  return "unknown";
}

std::optional<Selector> selector_from_string(std::string_view s) {
  for (Selector v : {Selector::Beta2Cube, Selector::BetaInfLines, Selector::Beta22Planes, Selector::Combined})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

namespace {

/// Tensor grid over [lo, lo + side] in `dim` axes with `per_axis` points.
/// Midpoint rule: cell centres. Closed rule: 2*per_axis + 1 equispaced points
/// including both ends.
template <class Emit>
void for_grid(std::size_t dim, std::span<const double> lo, std::span<const double> side,
              std::size_t per_axis, bool closed, Emit&& emit) {
  const std::size_t m = closed ? 2 * per_axis + 1 : per_axis;
  std::vector<std::size_t> idx(dim, 0);
  Vec u(dim);
  while (true) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double t = closed ? static_cast<double>(idx[k]) / static_cast<double>(m - 1)
                              : (static_cast<double>(idx[k]) + 0.5) / static_cast<double>(m);
      u[k] = lo[k] + side[k] * t;
    }
    emit(std::as_const(u));
    std::size_t k = 0;
    while (k < dim && ++idx[k] == m) idx[k++] = 0;
    if (k == dim) break;
  }
}

std::size_t grid_size(std::size_t dim, std::size_t per_axis, bool closed) {
  const std::size_t m = closed ? 2 * per_axis + 1 : per_axis;
  std::size_t total = 1;
  for (std::size_t k = 0; k < dim; ++k) total *= m;
  return total;
}

/// Normalized coefficient from a fit on samples whose weights integrate over
/// an m-dimensional region.
double normalize(const AffineFit& fit, double total_w, double diam, std::size_t m, double p) {
  if (std::isinf(p)) return fit.residual_sq / diam;
  const double integral = fit.residual_sq * total_w;  // int |f - A|^p
  return std::pow(integral / std::pow(diam, static_cast<double>(m)), 1.0 / p) / diam;
}

AffineFit fit_for(const SampleSet& s, double p, std::optional<double> L) {
  return fit_affine_lp(s, p, L);
}

}  // namespace

std::uint64_t box_key(const Box& b) {
  std::uint64_t h = 0x51ed270b27d1a3c5ULL;
  for (double v : b.lo) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
  for (double v : b.side) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
  return h;
}

BetaRecord beta_p_cube(const Field& f, const Box& box, double p, const QuadratureSpec& quad,
                       std::optional<double> L) {
  quad.validate();
  const std::size_t n = box.dim();
  const bool closed = std::isinf(p);
  SampleSet s(n, grid_size(n, quad.nodes, closed));
  double cell = box.volume();
  for (std::size_t k = 0; k < n; ++k) cell /= static_cast<double>(quad.nodes);
  std::size_t i = 0;
  for_grid(n, box.lo, box.side, quad.nodes, closed, [&](const Vec& x) { s.set(i++, x, f(x), cell); });

  BetaRecord rec;
  rec.box = box;
  rec.kind = BetaKind::Cube;
  rec.p = p;
  rec.m = n;
  rec.nodes = closed ? 2 * quad.nodes + 1 : quad.nodes;
  try {
    const AffineFit fit = fit_for(s, p, L);
    rec.fit = fit.map;
    rec.value = normalize(fit, box.volume(), box.diameter(), n, p);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RankDeficient) throw Error(ErrorCode::DegenerateBox, e.what());
    throw;
  }
  return rec;
}

BetaRecord beta_p_restricted(const Field& f, const Box& box, const LineSeg& line, double p,
                             const QuadratureSpec& quad, std::optional<double> L) {
  quad.validate();
  const auto clip = clip_line(box, line.base, line.dir);
  const double diam = box.diameter();
  if (!clip || clip->second - clip->first <= 1e-12 * diam)
    throw Error(ErrorCode::EmptyIntersection, "line misses the box");
  const bool closed = std::isinf(p);
  const double len = clip->second - clip->first;
  SampleSet s(1, grid_size(1, quad.patch_nodes, closed));
  const double w = len / static_cast<double>(quad.patch_nodes);
  const Vec lo{clip->first}, side{len};
  std::size_t i = 0;
  const std::size_t n = box.dim();
  Vec x(n);
  for_grid(1, lo, side, quad.patch_nodes, closed, [&](const Vec& u) {
    for (std::size_t k = 0; k < n; ++k) x[k] = line.base[k] + u[0] * line.dir[k];
    s.set(i++, u, f(x), w);
  });
  BetaRecord rec;
  rec.box = box;
  rec.kind = closed ? BetaKind::RestrictedInf : BetaKind::Restricted;
  rec.p = p;
  rec.m = 1;
  rec.nodes = closed ? 2 * quad.patch_nodes + 1 : quad.patch_nodes;
  const AffineFit fit = fit_for(s, p, L);
  rec.fit = fit.map;
  rec.value = normalize(fit, len, diam, 1, p);
  return rec;
}

BetaRecord beta_p_restricted(const Field& f, const Box& box, const Hyperplane& plane, double p,
                             const QuadratureSpec& quad, std::optional<double> L) {
  quad.validate();
  const std::size_t n = box.dim();
  if (n < 2) throw Error(ErrorCode::Config, "hyperplane restriction needs n >= 2");
  const auto section = plane_box_section(plane, box);
  if (section.empty()) throw Error(ErrorCode::EmptyIntersection, "plane misses the box");
  const auto frame = orthonormal_complement(plane.normal);
  const std::size_t m = n - 1;
  const Vec foot = plane.foot();
  Vec lo(m, std::numeric_limits<double>::infinity()), hi(m, -std::numeric_limits<double>::infinity());
  for (const Vec& c : section) {
    for (std::size_t k = 0; k < m; ++k) {
      const double u = dot(c, frame[k]) - dot(foot, frame[k]);
      lo[k] = std::min(lo[k], u);
      hi[k] = std::max(hi[k], u);
    }
  }
  const double diam = box.diameter();
  Vec side(m);
  for (std::size_t k = 0; k < m; ++k) {
    side[k] = hi[k] - lo[k];
    if (side[k] <= 1e-12 * diam) throw Error(ErrorCode::EmptyIntersection, "plane only grazes the box");
  }
  const bool closed = std::isinf(p);
  const double tol = 1e-12 * diam;
  auto build = [&](std::size_t per_axis) {
    SampleSet s(m, grid_size(m, per_axis, closed));
    double cell = 1.0;
    for (std::size_t k = 0; k < m; ++k) cell *= side[k] / static_cast<double>(per_axis);
    std::size_t i = 0;
    Vec x(n);
    for_grid(m, lo, side, per_axis, closed, [&](const Vec& u) {
      for (std::size_t a = 0; a < n; ++a) {
        x[a] = foot[a];
        for (std::size_t k = 0; k < m; ++k) x[a] += u[k] * frame[k][a];
      }
      if (box.contains(x, tol)) {
        for (std::size_t a = 0; a < n; ++a) x[a] = std::clamp(x[a], box.lo[a], box.lo[a] + box.side[a]);
        s.set(i++, u, f(x), cell);
      } else {
        s.set(i++, u, 0.0, 0.0);
      }
    });
    return s;
  };
  BetaRecord rec;
  rec.box = box;
  rec.kind = closed ? BetaKind::RestrictedInf : BetaKind::Restricted;
  rec.p = p;
  rec.m = m;
  for (std::size_t per_axis : {quad.patch_nodes, 4 * quad.patch_nodes + 1}) {
    const SampleSet s = build(per_axis);
    try {
      const AffineFit fit = fit_for(s, p, L);
      rec.fit = fit.map;
      rec.nodes = closed ? 2 * per_axis + 1 : per_axis;
      rec.value = normalize(fit, total_weight(s), diam, m, p);
      return rec;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RankDeficient) throw;
    }
  }
  throw Error(ErrorCode::EmptyIntersection, "plane section too thin to resolve");
}

BetaRecord beta_integralgeometric(const Field& f, const Box& box, std::size_t m, double p, double q,
                                  const QuadratureSpec& quad) {
  quad.validate();
  const std::size_t n = box.dim();
  if (!(q >= 1.0) || std::isinf(q)) throw Error(ErrorCode::Config, "q must be finite and >= 1");
  if (m == n) {
    BetaRecord rec = beta_p_cube(f, box, p, quad);
    rec.kind = BetaKind::IntegralGeometric;
    rec.q = q;
    return rec;
  }
  if (n < 2 || (m != 1 && m != n - 1))
    throw Error(ErrorCode::Config, "integral-geometric beta needs m in {1, n-1, n}");

  std::vector<double> values;
  std::vector<double> weights;
  std::uint64_t seed = 0;
  if (m == 1) {
    seed = derive_seed(quad.seed, {tag(StreamTag::IgBetaLines), box_key(box)});
    const auto lines = sample_lines(box, quad.mc_samples, seed);
    values.assign(lines.size(), -1.0);
    parallel_for(lines.size(), [&](std::size_t i) {
      try {
        values[i] = beta_p_restricted(f, box, lines[i].line, p, quad).value;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyIntersection) throw;
      }
    });
    for (const auto& l : lines) weights.push_back(l.weight);
  } else {
    seed = derive_seed(quad.seed, {tag(StreamTag::IgBetaPlanes), box_key(box)});
    const auto planes = sample_hyperplanes(box, quad.mc_samples, seed);
    values.assign(planes.size(), -1.0);
    parallel_for(planes.size(), [&](std::size_t i) {
      try {
        values[i] = beta_p_restricted(f, box, planes[i].plane, p, quad).value;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyIntersection) throw;
      }
    });
    for (const auto& pl : planes) weights.push_back(pl.weight);
  }
  double sw = 0.0, swy = 0.0;
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0) continue;
    sw += weights[i];
    swy += weights[i] * std::pow(values[i], q);
    ++accepted;
  }
  BetaRecord rec;
  rec.box = box;
  rec.kind = BetaKind::IntegralGeometric;
  rec.p = p;
  rec.q = q;
  rec.m = m;
  rec.nodes = quad.patch_nodes;
  rec.samples = accepted;
  rec.seed = seed;
  if (accepted == 0) throw Error(ErrorCode::EmptyIntersection, "no sampled plane met the box");
  const double mean = swy / sw;
  double var = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0) continue;
    const double d = weights[i] * (std::pow(values[i], q) - mean);
    var += d * d;
  }
  const double se_mean = std::sqrt(var) / sw;
  rec.value = std::pow(mean, 1.0 / q);
  rec.stderr_ = mean > 0.0 ? se_mean * std::pow(mean, 1.0 / q - 1.0) / q : 0.0;
  return rec;
}

CombinedBeta combined_beta_parts(const Field& f, const Box& box, const QuadratureSpec& quad) {
  if (box.dim() < 2) throw Error(ErrorCode::Config, "combined beta needs n >= 2");
  CombinedBeta out;
  out.planes = beta_integralgeometric(f, box, box.dim() - 1, 2.0, 2.0, quad);
  out.lines = beta_integralgeometric(f, box, 1, std::numeric_limits<double>::infinity(), 2.0, quad);
  out.value = std::hypot(out.planes.value, out.lines.value);
  return out;
}

CarlesonReport carleson_sum(const Field& f, const DyadicCube& q0, double C, int J, Selector sel,
                            const QuadratureSpec& quad, std::optional<double> lipschitz) {
  if (J < 0) throw Error(ErrorCode::Config, "depth J must be >= 0");
  if (!(C >= 1.0)) throw Error(ErrorCode::Config, "dilation C must be >= 1");
  quad.validate();
  const std::size_t n = q0.dim();
  if (sel != Selector::Beta2Cube && n < 2)
    throw Error(ErrorCode::Config, std::string(to_string(sel)) + " needs n >= 2");

  CarlesonReport rep;
  rep.selector = std::string(to_string(sel));
  rep.dilation = C;
  rep.depth = J;
  rep.root_volume = q0.volume();
  rep.lipschitz = lipschitz ? *lipschitz : lipschitz_estimate(f, q0.box().dilate(C), 4096, quad.seed);

  // cubes are stored and evaluated serially level by level in child order, so
  // the row order is fixed
  std::vector<DyadicCube> level{q0};
  double cumulative = 0.0;
  for (int j = 0; j <= J; ++j) {
    std::vector<CubeRow> rows(level.size());
    auto eval = [&](std::size_t i) {
      const Box region = level[i].box().dilate(C);
      CubeRow row;
      row.level = level[i].level;
      row.index = level[i].index;
      switch (sel) {
        case Selector::Beta2Cube: row.value = beta_p_cube(f, region, 2.0, quad).value; break;
        case Selector::BetaInfLines: {
          const auto r = beta_integralgeometric(f, region, 1, std::numeric_limits<double>::infinity(), 2.0, quad);
          row.value = r.value;
          row.stderr_ = r.stderr_;
          break;
        }
        case Selector::Beta22Planes: {
          const auto r = beta_integralgeometric(f, region, n - 1, 2.0, 2.0, quad);
          row.value = r.value;
          row.stderr_ = r.stderr_;
          break;
        }
        case Selector::Combined: {
          const auto r = combined_beta_parts(f, region, quad);
          row.value = r.value;
          row.stderr_ = std::hypot(r.planes.stderr_, r.lines.stderr_);
          break;
        }
      }
      rows[i] = std::move(row);
    };
    if (sel == Selector::Beta2Cube) {
      parallel_for(level.size(), eval);
    } else {
      // the integral-geometric coefficients parallelize internally
      for (std::size_t i = 0; i < level.size(); ++i) eval(i);
    }
    ScaleRow sr;
    sr.level = q0.level + j;
    sr.cubes = level.size();
    for (const auto& row : rows) sr.contribution += row.value * row.value * level.front().volume();
    cumulative += sr.contribution;
    sr.cumulative = cumulative;
    sr.ratio = rep.lipschitz > 0.0 ? cumulative / (rep.lipschitz * rep.root_volume) : 0.0;
    rep.scales.push_back(sr);
    for (auto& row : rows) rep.cubes.push_back(std::move(row));
    if (j < J) {
      std::vector<DyadicCube> next;
      next.reserve(level.size() << n);
      for (const auto& c : level)
        for (auto& k : c.children()) next.push_back(std::move(k));
      level = std::move(next);
    }
  }
  rep.total = cumulative;
  rep.ratio = rep.scales.back().ratio;
  return rep;
}

void write_scales_csv(std::ostream& out, const CarlesonReport& r) {
  out << "level,cubes,contribution,cumulative,ratio\n";
  for (const auto& s : r.scales)
    out << s.level << ',' << s.cubes << ',' << csv::num(s.contribution) << ',' << csv::num(s.cumulative) << ','
        << csv::num(s.ratio) << '\n';
}

void write_cubes_csv(std::ostream& out, const CarlesonReport& r) {
  out << "level,index,kind,value,stderr\n";
  for (const auto& c : r.cubes)
    out << c.level << ',' << csv::index(c.index) << ',' << r.selector << ',' << csv::num(c.value) << ','
        << csv::num(c.stderr_) << '\n';
}

}  // namespace qrect
