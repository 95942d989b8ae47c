#include "qrect/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qrect/errors.hpp"
#include "qrect/simd/kernels.hpp"

namespace qrect {

void SampleSet::set(std::size_t i, std::span<const double> point, double value, double weight) {
  for (std::size_t k = 0; k < dim_; ++k) coords_[k * n_ + i] = point[k];
  values_[i] = value;
  weights_[i] = weight;
}

Vec SampleSet::point(std::size_t i) const {
  Vec p(dim_);
  for (std::size_t k = 0; k < dim_; ++k) p[k] = coords_[k * n_ + i];
  return p;
}

SampleSet SampleSet::support() const {
  std::size_t m = 0;
  for (double w : weights_) m += w > 0.0 ? 1 : 0;
  SampleSet out(dim_, m);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (!(weights_[i] > 0.0)) continue;
    for (std::size_t k = 0; k < dim_; ++k) out.coords_[k * m + j] = coords_[k * n_ + i];
    out.values_[j] = values_[i];
    out.weights_[j] = weights_[i];
    ++j;
  }
  return out;
}

double total_weight(const SampleSet& s) {
  return std::accumulate(s.weights().begin(), s.weights().end(), 0.0);
}

namespace {

void residual_into(std::span<const double> cols, std::size_t dim, std::span<const double> f,
                   const Vec& grad, double intercept, std::vector<double>& out) {
  out.resize(f.size());
  simd::kernels().affine_residual(f.data(), cols.data(), dim, grad.data(), intercept, out.data(),
                                  f.size());
}

/// Weighted L2 fit on raw column-major data.
struct L2Core {
  Vec mean;
  double fmean = 0.0;
  double weight = 0.0;
  Eigen::MatrixXd S;  // weighted covariance (unnormalized)
  Eigen::VectorXd g;  // weighted cross-covariance with f
  Vec grad;
};

L2Core l2_core(std::span<const double> cols, std::size_t d, std::span<const double> f,
               std::span<const double> w) {
  const std::size_t n = f.size();
  L2Core c;
  c.weight = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(c.weight > 0.0)) throw Error(ErrorCode::RankDeficient, "samples carry no weight");
  c.mean.resize(d);
  for (std::size_t k = 0; k < d; ++k) c.mean[k] = simd::wsum(w, cols.subspan(k * n, n)) / c.weight;
  c.fmean = simd::wsum(w, f) / c.weight;
  std::vector<double> centered(d * n), fc(n);
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t i = 0; i < n; ++i) centered[k * n + i] = cols[k * n + i] - c.mean[k];
  for (std::size_t i = 0; i < n; ++i) fc[i] = f[i] - c.fmean;
  c.S.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  c.g.resize(static_cast<Eigen::Index>(d));
  auto col = [&](std::size_t k) { return std::span<const double>(centered.data() + k * n, n); };
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t l = k; l < d; ++l) {
      const double v = simd::wdot(w, col(k), col(l));
      c.S(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = v;
      c.S(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = v;
    }
    c.g(static_cast<Eigen::Index>(k)) = simd::wdot(w, col(k), fc);
  }
  if (d == 0) return c;
  // Jacobi scaling, then pivots of the scaled matrix
  Eigen::VectorXd dscale(static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < d; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double var = c.S(kk, kk);
    if (!(var > 0.0) || std::sqrt(var / c.weight) <= 1e-12 * std::fabs(c.mean[k]))
      throw Error(ErrorCode::RankDeficient, "samples do not spread along axis " + std::to_string(k));
    dscale(kk) = 1.0 / std::sqrt(var);
  }
  const Eigen::MatrixXd M = dscale.asDiagonal() * c.S * dscale.asDiagonal();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  const Eigen::VectorXd piv = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || piv.minCoeff() < 1e-12 * piv.maxCoeff())
    throw Error(ErrorCode::RankDeficient, "design matrix is singular");
  const Eigen::VectorXd a = dscale.asDiagonal() * ldlt.solve(dscale.asDiagonal() * c.g);
  c.grad.assign(a.data(), a.data() + a.size());
  return c;
}

double intercept_for(const L2Core& c, const Vec& grad) { return c.fmean - dot(grad, c.mean); }

AffineFit finish_l2(const SampleSet& s, const L2Core& c, Vec grad) {
  AffineFit fit;
  fit.map.intercept = intercept_for(c, grad);
  fit.map.grad = std::move(grad);
  std::vector<double> r;
  residual_into(s.coords(), s.dim(), s.values(), fit.map.grad, fit.map.intercept, r);
  fit.residual_sq = simd::wsumsq(s.weights(), r) / c.weight;
  fit.norm = FitNorm::L2;
  fit.p = 2.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Dense simplex: minimize c.z subject to G z <= h with h >= 0 and z free.
// Bland's rule keeps degenerate problems from cycling.

Vec solve_lp(const std::vector<Vec>& G, const Vec& h, const Vec& c) {
  const std::size_t m = G.size();
  const std::size_t nv = c.size();
  const std::size_t N = 2 * nv + m;
  const std::size_t W = N + 1;
  std::vector<double> T(m * W, 0.0);
  std::vector<double> cost(W, 0.0);
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = &T[i * W];
    for (std::size_t j = 0; j < nv; ++j) {
      row[j] = G[i][j];
      row[nv + j] = -G[i][j];
    }
    row[2 * nv + i] = 1.0;
    row[N] = h[i];
    basis[i] = 2 * nv + i;
  }
  for (std::size_t j = 0; j < nv; ++j) {
    cost[j] = c[j];
    cost[nv + j] = -c[j];
  }
  for (std::size_t iter = 0; iter < 200000; ++iter) {
    std::size_t enter = N;
    for (std::size_t j = 0; j < N; ++j) {
      if (cost[j] < -1e-11) {
        enter = j;
        break;
      }
    }
    if (enter == N) {
      Vec val(N, 0.0);
      for (std::size_t i = 0; i < m; ++i) val[basis[i]] = T[i * W + N];
      Vec z(nv);
      for (std::size_t j = 0; j < nv; ++j) z[j] = val[j] - val[nv + j];
      return z;
    }
    std::size_t leave = m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      const double a = T[i * W + enter];
      if (a <= 1e-12) continue;
      const double ratio = T[i * W + N] / a;
      if (ratio < best - 1e-14 || (ratio <= best + 1e-14 && leave < m && basis[i] < basis[leave])) {
        best = std::min(best, ratio);
        leave = i;
      }
    }
    if (leave == m) throw Error(ErrorCode::NonConvergence, "minimax LP is unbounded");
    double* prow = &T[leave * W];
    const double pv = prow[enter];
    for (std::size_t j = 0; j < W; ++j) prow[j] /= pv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == leave) continue;
      double* row = &T[i * W];
      const double f = row[enter];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < W; ++j) row[j] -= f * prow[j];
    }
    const double f = cost[enter];
    for (std::size_t j = 0; j < W; ++j) cost[j] -= f * prow[j];
    basis[leave] = enter;
  }
  throw Error(ErrorCode::NonConvergence, "minimax LP exceeded its pivot budget");
}

/// Samples mapped to u = (x - center)/scale, g = (f - fmid)/fscale.
struct Scaled {
  std::size_t d = 0;
  std::size_t n = 0;
  Vec center;
  double scale = 1.0;
  double fmid = 0.0;
  double fscale = 1.0;
  std::vector<double> u;
  std::vector<double> g;
  std::vector<double> w;  // normalized to sum 1
};

Scaled make_scaled(const SampleSet& s) {
  Scaled z;
  z.d = s.dim();
  z.n = s.size();
  z.center.assign(z.d, 0.0);
  z.scale = 0.0;
  for (std::size_t k = 0; k < z.d; ++k) {
    const auto ax = s.axis(k);
    const auto [lo, hi] = std::minmax_element(ax.begin(), ax.end());
    z.center[k] = 0.5 * (*lo + *hi);
    z.scale = std::max(z.scale, *hi - *lo);
  }
  if (!(z.scale > 0.0)) z.scale = 1.0;
  const auto [flo, fhi] = std::minmax_element(s.values().begin(), s.values().end());
  z.fmid = 0.5 * (*flo + *fhi);
  z.fscale = 0.5 * (*fhi - *flo);
  if (!(z.fscale > 0.0)) z.fscale = 1.0;
  z.u.resize(z.d * z.n);
  for (std::size_t k = 0; k < z.d; ++k)
    for (std::size_t i = 0; i < z.n; ++i) z.u[k * z.n + i] = (s.x(k, i) - z.center[k]) / z.scale;
  z.g.resize(z.n);
  for (std::size_t i = 0; i < z.n; ++i) z.g[i] = (s.value(i) - z.fmid) / z.fscale;
  const double W = total_weight(s);
  z.w.resize(z.n);
  for (std::size_t i = 0; i < z.n; ++i) z.w[i] = s.weight(i) / W;
  return z;
}

AffineMap unscale(const Scaled& z, const Vec& a_u, double b_u) {
  AffineMap m;
  m.grad.resize(z.d);
  for (std::size_t k = 0; k < z.d; ++k) m.grad[k] = z.fscale * a_u[k] / z.scale;
  m.intercept = z.fmid + z.fscale * b_u - dot(m.grad, z.center);
  return m;
}

/// Shift the intercept so the residual range is centred on zero.
void centre_intercept(const SampleSet& s, AffineMap& m) {
  std::vector<double> r;
  residual_into(s.coords(), s.dim(), s.values(), m.grad, m.intercept, r);
  const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
  m.intercept += 0.5 * (*lo + *hi);
}

/// Exact discrete minimax fit on scaled data by constraint generation.
std::pair<Vec, double> minimax_scaled(const Scaled& z, std::optional<double> L_u) {
  const std::size_t d = z.d;
  const std::size_t n = z.n;
  std::span<const double> u(z.u);
  std::span<const double> g(z.g);

  // IRLS with exponent escalation for a warm start
  Vec a(d, 0.0);
  double b = 0.0;
  std::vector<double> r;
  residual_into(u, d, g, a, b, r);
  double best = simd::maxabs(r);
  Vec best_a = a;
  double best_b = b;
  std::vector<double> iw(n);
  for (double p = 2.0; p <= 256.0; p *= 2.0) {
    const double rmax = simd::maxabs(r);
    if (!(rmax > 0.0)) break;
    for (std::size_t i = 0; i < n; ++i) {
      const double q = std::fabs(r[i]) / rmax;
      iw[i] = std::max(std::pow(q, p - 2.0), 1e-30);
    }
    try {
      const L2Core c = l2_core(u, d, g, iw);
      a = c.grad;
      b = intercept_for(c, a);
    } catch (const Error&) {
      break;
    }
    if (L_u && norm(a) > *L_u) {
      const double s = *L_u / norm(a);
      for (double& v : a) v *= s;
    }
    residual_into(u, d, g, a, b, r);
    const double m = simd::maxabs(r);
    if (m < best) {
      best = m;
      best_a = a;
      best_b = b;
    }
  }
  residual_into(u, d, g, best_a, best_b, r);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<char> active(n, 0);
  std::vector<std::size_t> act;
  const std::size_t seed_count = std::min(n, 3 * (d + 2));
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(seed_count), order.end(),
                    [&](std::size_t x, std::size_t y) { return std::fabs(r[x]) > std::fabs(r[y]); });
  for (std::size_t k = 0; k < seed_count; ++k) {
    active[order[k]] = 1;
    act.push_back(order[k]);
  }

  const double M = 1.0 + simd::maxabs(g);
  std::vector<Vec> cuts;
  const std::size_t nv = d + 2;
  Vec cost(nv, 0.0);
  cost[d + 1] = 1.0;
  bool settled = false;
  for (int round = 0; round < 2000 && !settled; ++round) {
    std::vector<Vec> G;
    Vec h;
    for (std::size_t i : act) {
      Vec lo(nv), hi(nv);
      for (std::size_t k = 0; k < d; ++k) {
        lo[k] = -u[k * n + i];
        hi[k] = u[k * n + i];
      }
      lo[d] = -1.0;
      hi[d] = 1.0;
      lo[d + 1] = -1.0;
      hi[d + 1] = -1.0;
      G.push_back(std::move(lo));
      h.push_back(M - g[i]);
      G.push_back(std::move(hi));
      h.push_back(M + g[i]);
    }
    for (const Vec& cdir : cuts) {
      Vec row(nv, 0.0);
      for (std::size_t k = 0; k < d; ++k) row[k] = cdir[k];
      G.push_back(std::move(row));
      h.push_back(*L_u);
    }
    const Vec zsol = solve_lp(G, h, cost);
    a.assign(zsol.begin(), zsol.begin() + static_cast<long>(d));
    b = zsol[d];
    const double level = zsol[d + 1] + M;

    if (L_u) {
      const double an = norm(a);
      if (an > *L_u * (1.0 + 1e-11)) {
        Vec cdir = a;
        for (double& v : cdir) v /= an;
        cuts.push_back(std::move(cdir));
        continue;
      }
    }
    residual_into(u, d, g, a, b, r);
    const double worst = simd::maxabs(r);
    if (worst <= level + 1e-13) {
      settled = true;
      break;
    }
    // add the largest violators
    std::vector<std::size_t> viol;
    for (std::size_t i = 0; i < n; ++i)
      if (!active[i] && std::fabs(r[i]) > level + 1e-13) viol.push_back(i);
    if (viol.empty()) {
      settled = true;
      break;
    }
    const std::size_t take = std::min(viol.size(), d + 2);
    std::partial_sort(viol.begin(), viol.begin() + static_cast<long>(take), viol.end(),
                      [&](std::size_t x, std::size_t y) { return std::fabs(r[x]) > std::fabs(r[y]); });
    for (std::size_t k = 0; k < take; ++k) {
      active[viol[k]] = 1;
      act.push_back(viol[k]);
    }
  }
  if (!settled) throw Error(ErrorCode::NonConvergence, "minimax constraint generation did not settle");
  if (L_u) {
    const double an = norm(a);
    if (an > *L_u) {
      for (double& v : a) v *= *L_u / an;
    }
  }
  return {a, b};
}

/// Exact 1-D minimax: the narrowest vertical strip holding the points. Its
/// width as a function of the slope is convex and piecewise linear with
/// breakpoints at the hull edge slopes.
std::pair<double, double> minimax_1d(const SampleSet& s, std::optional<double> L) {
  std::vector<std::pair<double, double>> pts(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) pts[i] = {s.x(0, i), s.value(i)};
  std::sort(pts.begin(), pts.end());
  auto cross = [](const std::pair<double, double>& o, const std::pair<double, double>& a,
                  const std::pair<double, double>& b) {
    return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
  };
  std::vector<std::pair<double, double>> lower, upper;
  for (const auto& q : pts) {
    while (lower.size() >= 2 && cross(lower[lower.size() - 2], lower.back(), q) <= 0) lower.pop_back();
    lower.push_back(q);
  }
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
    while (upper.size() >= 2 && cross(upper[upper.size() - 2], upper.back(), *it) <= 0) upper.pop_back();
    upper.push_back(*it);
  }
  std::vector<double> cand;
  auto edges = [&](const std::vector<std::pair<double, double>>& h) {
    for (std::size_t i = 0; i + 1 < h.size(); ++i) {
      const double dx = h[i + 1].first - h[i].first;
      if (dx != 0.0) cand.push_back((h[i + 1].second - h[i].second) / dx);
    }
  };
  edges(lower);
  edges(upper);
  if (L) {
    std::erase_if(cand, [&](double a) { return std::fabs(a) > *L; });
    cand.push_back(-*L);
    cand.push_back(*L);
  }
  if (cand.empty()) cand.push_back(0.0);
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  auto width = [&](double a) {
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& q : upper) hi = std::max(hi, q.second - a * q.first);
    for (const auto& q : lower) lo = std::min(lo, q.second - a * q.first);
    return std::pair{hi - lo, 0.5 * (hi + lo)};
  };
  // Linear scan: nearly equal slopes from rounding make bisection unreliable.
  std::size_t best = 0;
  double best_w = width(cand[0]).first;
  for (std::size_t i = 1; i < cand.size(); ++i) {
    const double w = width(cand[i]).first;
    if (w < best_w) {
      best_w = w;
      best = i;
    }
  }
  return {cand[best], width(cand[best]).second};
}

}  // namespace

std::vector<double> residuals(const SampleSet& s, const AffineMap& a) {
  std::vector<double> r;
  residual_into(s.coords(), s.dim(), s.values(), a.grad, a.intercept, r);
  return r;
}

double lp_objective(const SampleSet& s, const AffineMap& a, double p) {
  const auto r = residuals(s, a);
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
      if (s.weight(i) > 0.0) m = std::max(m, std::fabs(r[i]));
    return m;
  }
  if (p == 2.0) return simd::wsumsq(s.weights(), r) / total_weight(s);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) acc += s.weight(i) * std::pow(std::fabs(r[i]), p);
  return acc / total_weight(s);
}

AffineFit fit_affine_l2(const SampleSet& s) {
  const L2Core c = l2_core(s.coords(), s.dim(), s.values(), s.weights());
  return finish_l2(s, c, c.grad);
}

AffineFit fit_affine_l2_constrained(const SampleSet& s, double L) {
  if (!(L > 0.0)) throw Error(ErrorCode::Config, "gradient bound L must be positive");
  const L2Core c = l2_core(s.coords(), s.dim(), s.values(), s.weights());
  AffineFit fit;
  if (norm(c.grad) <= L) {
    fit = finish_l2(s, c, c.grad);
  } else {
    // a(lambda) = (S + lambda I)^{-1} g has norm decreasing in lambda
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.S);
    const Eigen::VectorXd mu = eig.eigenvalues();
    const Eigen::VectorXd gv = eig.eigenvectors().transpose() * c.g;
    auto a_of = [&](double lambda) {
      Eigen::VectorXd y(gv.size());
      for (Eigen::Index k = 0; k < gv.size(); ++k) y(k) = gv(k) / (std::max(mu(k), 0.0) + lambda);
      return Eigen::VectorXd(eig.eigenvectors() * y);
    };
    double lo = 0.0;
    double hi = c.g.norm() / L;
    for (int it = 0; it < 400; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (a_of(mid).norm() > L) {
        lo = mid;
      } else {
        hi = mid;
      }
      if (hi - lo <= 1e-16 * hi) break;
    }
    const Eigen::VectorXd a = a_of(hi);
    fit = finish_l2(s, c, Vec(a.data(), a.data() + a.size()));
  }
  fit.constraint = L;
  return fit;
}

ConstantFit fit_constant_l2(const SampleSet& s) {
  const double W = total_weight(s);
  if (!(W > 0.0)) throw Error(ErrorCode::RankDeficient, "samples carry no weight");
  ConstantFit out;
  out.c = simd::wsum(s.weights(), s.values()) / W;
  std::vector<double> r(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) r[i] = s.value(i) - out.c;
  out.residual_sq = simd::wsumsq(s.weights(), r) / W;
  return out;
}

AffineFit fit_affine_minimax(const SampleSet& s, std::optional<double> L) {
  if (L && !(*L > 0.0)) throw Error(ErrorCode::Config, "gradient bound L must be positive");
  const SampleSet sup = s.support();
  if (sup.size() == 0) throw Error(ErrorCode::RankDeficient, "samples carry no weight");
  // rank check on the support
  (void)l2_core(sup.coords(), sup.dim(), sup.values(), sup.weights());

  AffineFit fit;
  fit.norm = FitNorm::Linf;
  fit.p = std::numeric_limits<double>::infinity();
  fit.constraint = L;
  const auto [flo, fhi] = std::minmax_element(sup.values().begin(), sup.values().end());
  if (*flo == *fhi) {
    fit.map = AffineMap::constant(sup.dim(), *flo);
    fit.residual_sq = 0.0;
    return fit;
  }
  if (sup.dim() == 1) {
    const auto [a, b] = minimax_1d(sup, L);
    fit.map = AffineMap{{a}, b};
  } else {
    const Scaled z = make_scaled(sup);
    std::optional<double> L_u;
    if (L) L_u = *L * z.scale / z.fscale;
    const auto [a_u, b_u] = minimax_scaled(z, L_u);
    fit.map = unscale(z, a_u, b_u);
  }
  if (L && norm(fit.map.grad) > *L) {
    const double f = *L / norm(fit.map.grad);
    for (double& v : fit.map.grad) v *= f;
  }
  centre_intercept(sup, fit.map);
  fit.residual_sq = simd::maxabs(residuals(sup, fit.map));
  return fit;
}

AffineFit fit_affine_lp(const SampleSet& s, double p, std::optional<double> L) {
  if (!(p >= 1.0)) throw Error(ErrorCode::Config, "p must be >= 1");
  if (std::isinf(p)) return fit_affine_minimax(s, L);
  if (p == 2.0) return L ? fit_affine_l2_constrained(s, *L) : fit_affine_l2(s);
  if (L) throw Error(ErrorCode::Config, "gradient-bounded fits support p = 2 and p = inf only");

  const SampleSet sup = s.support();
  AffineFit l2 = fit_affine_l2(sup);
  AffineFit mm = fit_affine_minimax(sup);
  AffineMap start = lp_objective(sup, l2.map, p) <= lp_objective(sup, mm.map, p) ? l2.map : mm.map;

  const Scaled z = make_scaled(sup);
  const std::size_t d = z.d;
  const std::size_t n = z.n;
  // start map in scaled coordinates
  Vec a(d);
  for (std::size_t k = 0; k < d; ++k) a[k] = start.grad[k] * z.scale / z.fscale;
  double b = (start(z.center) - z.fmid) / z.fscale;

  std::vector<double> r;
  auto objective = [&](const Vec& aa, double bb) {
    residual_into(z.u, d, z.g, aa, bb, r);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += z.w[i] * std::pow(std::fabs(r[i]), p);
    return acc;
  };
  const std::vector<double> ones(n, 1.0);
  auto phi = [&](std::size_t j) {
    return j < d ? std::span<const double>(z.u.data() + j * n, n) : std::span<const double>(ones);
  };
  const std::size_t np = d + 1;
  double F = objective(a, b);
  std::vector<double> hw(n), gw(n);
  for (int it = 0; it < 300 && F > 0.0; ++it) {
    Eigen::VectorXd step(static_cast<Eigen::Index>(np));
    residual_into(z.u, d, z.g, a, b, r);
    if (p >= 2.0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double ar = std::fabs(r[i]);
        hw[i] = p * (p - 1.0) * z.w[i] * std::pow(ar, p - 2.0);
        gw[i] = p * z.w[i] * std::pow(ar, p - 1.0) * (r[i] < 0 ? -1.0 : 1.0);
      }
      Eigen::MatrixXd H(np, np);
      Eigen::VectorXd grad(np);
      for (std::size_t j = 0; j < np; ++j) {
        grad(static_cast<Eigen::Index>(j)) = -simd::wsum(gw, phi(j));
        for (std::size_t k = j; k < np; ++k) {
          const double v = simd::wdot(hw, phi(j), phi(k));
          H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = v;
          H(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = v;
        }
      }
      H.diagonal().array() += 1e-14 * (H.diagonal().maxCoeff() + 1e-300);
      step = -H.ldlt().solve(grad);
    } else {
      const double rmax = simd::maxabs(r);
      const double floor = std::max(1e-12 * rmax, 1e-300);
      for (std::size_t i = 0; i < n; ++i)
        hw[i] = z.w[i] * std::pow(std::max(std::fabs(r[i]), floor), p - 2.0);
      try {
        const L2Core c = l2_core(z.u, d, z.g, hw);
        const double nb = intercept_for(c, c.grad);
        for (std::size_t k = 0; k < d; ++k) step(static_cast<Eigen::Index>(k)) = c.grad[k] - a[k];
        step(static_cast<Eigen::Index>(d)) = nb - b;
      } catch (const Error&) {
        break;
      }
    }
    if (!step.allFinite()) break;
    double t = 1.0;
    bool moved = false;
    while (t > 1e-12) {
      Vec na = a;
      for (std::size_t k = 0; k < d; ++k) na[k] += t * step(static_cast<Eigen::Index>(k));
      const double nb = b + t * step(static_cast<Eigen::Index>(d));
      const double nF = objective(na, nb);
      if (nF < F) {
        const double gain = F - nF;
        a = std::move(na);
        b = nb;
        F = nF;
        moved = gain > 1e-15 * F;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  AffineFit fit;
  fit.map = unscale(z, a, b);
  // keep the better of the descent result and the start
  if (lp_objective(sup, start, p) < lp_objective(sup, fit.map, p)) fit.map = start;
  fit.residual_sq = lp_objective(sup, fit.map, p);
  fit.norm = FitNorm::Lp;
  fit.p = p;
  return fit;
}

}  // namespace qrect
