#include "chainlab/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "chainlab/blocks.hpp"

namespace chainlab {

namespace {

std::vector<double> extended(const std::vector<double>& profile, const ModelParams& P, double a) {
  std::vector<double> z = profile;
  z.insert(z.end(), P.range(), a);
  return z;
}

BandedMatrix surface_hessian(const std::vector<double>& profile, const ModelParams& P, double a) {
  const int K = static_cast<int>(profile.size());
  const int R = P.range();
  std::vector<double> z = extended(profile, P, a);
  BandedMatrix H;
  H.n = K;
  H.bw = std::max(0, std::min(R - 1, K - 1));
  H.diag.assign(H.bw + 1, std::vector<double>(K, 0.0));
  for (int j = 0; j < K; ++j) {
    double S = 0.0;
    for (int k = 0; k < R; ++k) {
      S += z[j + k];
      double c = P.v.d2(S);
      int last = std::min(j + k, K - 1);
      for (int r = j; r <= last; ++r)
        for (int q = r; q <= last; ++q) H.diag[q - r][r] += c;
    }
  }
  return H;
}

struct SurfaceProblem : BoxProblem {
  const ModelParams& P;
  const BulkConstants& bulk;
  std::vector<double> pinned;
  int K;
  SurfaceProblem(const ModelParams& p, const BulkConstants& b, std::vector<double> pin, int k)
      : P(p), bulk(b), pinned(std::move(pin)), K(k) {}
  std::vector<double> full(const std::vector<double>& zf) const {
    std::vector<double> z = pinned;
    z.insert(z.end(), zf.begin(), zf.end());
    return z;
  }
  double value(const std::vector<double>& zf) const override { return surface_energy(full(zf), P, bulk); }
  std::vector<double> grad(const std::vector<double>& zf) const override {
    std::vector<double> g = surface_gradient(full(zf), P, bulk);
    return {g.begin() + pinned.size(), g.end()};
  }
  BandedMatrix hess(const std::vector<double>& zf) const override {
    BandedMatrix H = surface_hessian(full(zf), P, bulk.a);
    const int off = static_cast<int>(pinned.size());
    BandedMatrix S;
    S.n = H.n - off;
    S.bw = std::min(H.bw, std::max(0, S.n - 1));
    S.diag.resize(S.bw + 1);
    for (int k = 0; k <= S.bw; ++k) S.diag[k].assign(H.diag[k].begin() + off, H.diag[k].end());
    return S;
  }
};

}  // namespace

double surface_energy(const std::vector<double>& profile, const ModelParams& P, const BulkConstants& bulk) {
  const int K = static_cast<int>(profile.size());
  const int R = P.range();
  const double a = bulk.a;
  for (double x : profile)
    if (!(x > P.v.r_hc())) return std::numeric_limits<double>::infinity();
  std::vector<double> z = extended(profile, P, a);
  std::vector<double> vka(R);
  for (int k = 0; k < R; ++k) vka[k] = P.v((k + 1) * a);
  double e = 0.0;
  for (int j = 0; j < K; ++j) {
    double t = P.p * (z[j] - a);
    double S = 0.0;
    for (int k = 0; k < R; ++k) {
      S += z[j + k];
      t += P.v(S) - vka[k];
    }
    e += t;
  }
  return e;
}

std::vector<double> surface_gradient(const std::vector<double>& profile, const ModelParams& P,
                                     const BulkConstants& bulk) {
  const int K = static_cast<int>(profile.size());
  const int R = P.range();
  std::vector<double> z = extended(profile, P, bulk.a);
  std::vector<double> diff(K + R + 1, 0.0);
  for (int j = 0; j < K; ++j) {
    double S = 0.0;
    for (int k = 0; k < R; ++k) {
      S += z[j + k];
      double d = P.v.d1(S);
      diff[j] += d;
      diff[j + k + 1] -= d;
    }
  }
  std::vector<double> g(K);
  double acc = 0.0;
  for (int i = 0; i < K; ++i) {
    acc += diff[i];
    g[i] = acc + P.p;
  }
  return g;
}

std::vector<double> beta_coefficients(const ModelParams& P, const BulkConstants& bulk) {
  const int R = P.range();
  std::vector<double> b(std::max(0, R - 1), 0.0);
  for (int j = 1; j < R; ++j)
    for (int k = j + 1; k <= R; ++k) b[j - 1] += (k - j) * P.v.d1(k * bulk.a);
  return b;
}

double e_surf_from_min(double min_Esurf, const ModelParams& P, const BulkConstants& bulk) {
  double s = 0.0;
  for (int k = 1; k <= P.range(); ++k) s += k * P.v(k * bulk.a);
  return 2.0 * min_Esurf - P.p * bulk.a - s;
}

SurfaceResult minimize_Esurf_pinned(int K, const ModelParams& P, const BulkConstants& bulk,
                                    const std::vector<double>& pinned) {
  if (K < std::max(1, P.range() - 1)) throw std::invalid_argument("minimize_Esurf: K must be >= m");
  if (static_cast<int>(pinned.size()) > K) throw std::invalid_argument("minimize_Esurf: more pinned entries than K");
  SurfaceProblem prob(P, bulk, pinned, K);
  std::vector<double> z0(K - pinned.size(), bulk.a);
  GroundStateResult r = z0.empty() ? GroundStateResult{} : projected_newton(prob, z0, P.z_min, P.z_max);
  if (!z0.empty() && !r.converged)
    throw std::runtime_error("minimize_Esurf: no convergence, grad norm " + fmt::format("{:.3e} after {} iterations", r.grad_norm, r.iterations));
  SurfaceResult out;
  out.profile = prob.full(r.spacings);
  out.min_Esurf = surface_energy(out.profile, P, bulk);
  out.e_surf = e_surf_from_min(out.min_Esurf, P, bulk);
  out.beta_coeffs = beta_coefficients(P, bulk);
  out.tail_K = K;
  out.iterations = r.iterations;
  out.grad_norm = r.grad_norm;
  return out;
}

SurfaceResult minimize_Esurf(int K, const ModelParams& P, const BulkConstants& bulk) {
  return minimize_Esurf_pinned(K, P, bulk, {});
}

SurfaceResult minimize_Esurf_adaptive(const ModelParams& P, const BulkConstants& bulk, int K0) {
  int K = std::max(K0, P.range());
  SurfaceResult prev = minimize_Esurf(K, P, bulk);
  for (int it = 0; it < 8; ++it) {
    K *= 2;
    SurfaceResult next = minimize_Esurf(K, P, bulk);
    if (std::abs(next.min_Esurf - prev.min_Esurf) < 1e-10) return next;
    prev = std::move(next);
  }
  throw std::runtime_error("minimize_Esurf_adaptive: tail truncation did not stabilize");
}

double e_surf(const ModelParams& P, const BulkConstants& bulk) { return minimize_Esurf_adaptive(P, bulk).e_surf; }

// ---------------------------------------------------------------------------
// value function

bool ValueFunction::in_hull(const std::vector<double>& x) const {
  const double tol = 1e-12 * (std::abs(hi()) + 1.0);
  for (double c : x)
    if (c < lo() - tol || c > hi() + tol) return false;
  return true;
}

std::vector<double> ValueFunction::point(size_t flat) const {
  std::vector<double> x(d);
  for (int k = d - 1; k >= 0; --k) {
    x[k] = node(static_cast<int>(flat % n));
    flat /= n;
  }
  return x;
}

namespace {
double interp(const ValueFunction& vf, const std::vector<double>& vals, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != vf.d) throw std::invalid_argument("value function: wrong block dimension");
  if (!vf.in_hull(x)) throw std::out_of_range("value function: point outside grid hull");
  std::vector<int> i0(vf.d);
  std::vector<double> t(vf.d);
  for (int k = 0; k < vf.d; ++k) {
    double s = (x[k] - vf.x0) / vf.h;
    int i = std::clamp(static_cast<int>(std::floor(s)), 0, vf.n - 2);
    i0[k] = i;
    t[k] = std::clamp(s - i, 0.0, 1.0);
  }
  double out = 0.0;
  for (int corner = 0; corner < (1 << vf.d); ++corner) {
    double wgt = 1.0;
    size_t flat = 0;
    for (int k = 0; k < vf.d; ++k) {
      int bit = (corner >> k) & 1;
      wgt *= bit ? t[k] : 1.0 - t[k];
      flat = flat * vf.n + (i0[k] + bit);
    }
    if (wgt != 0.0) out += wgt * vals[flat];
  }
  return out;
}
}  // namespace

double ValueFunction::u(const std::vector<double>& x) const { return interp(*this, u_values, x); }
double ValueFunction::w(const std::vector<double>& x) const { return interp(*this, w_values, x); }
double ValueFunction::g(const std::vector<double>& x) const { return 0.5 * (u(x) - u(reversed(x))); }

ValueFunction value_iteration_u(const ModelParams& P, const BulkConstants& bulk, const ValueGridSpec& grid) {
  ValueFunction vf;
  vf.d = block_dim(P);
  const int d = vf.d;
  if (d > 3) throw std::invalid_argument("value_iteration_u: block dimension above 3 is not supported");
  vf.n = grid.points > 0 ? grid.points : (d == 1 ? 257 : 65);
  vf.eps = grid.eps >= 0 ? grid.eps : 0.1 * (P.z_max - P.z_min);
  if (!(vf.eps > 0)) throw std::invalid_argument("value_iteration_u: eps must be positive");
  vf.a = bulk.a;
  vf.e0 = bulk.e0;
  vf.h = (P.z_max + vf.eps - P.z_min) / (vf.n - 1);
  vf.anchor = static_cast<int>(std::lround((bulk.a - P.z_min) / vf.h));
  vf.x0 = bulk.a - vf.anchor * vf.h;

  size_t G = 1;
  for (int k = 0; k < d; ++k) G *= vf.n;
  std::vector<std::vector<double>> pts(G);
  std::vector<double> V(G);
  for (size_t i = 0; i < G; ++i) {
    pts[i] = vf.point(i);
    V[i] = block_V(pts[i], P);
  }
  size_t a_flat = 0;
  for (int k = 0; k < d; ++k) a_flat = a_flat * vf.n + vf.anchor;
  const double de0 = d * bulk.e0;

  // Start from "stay at a forever": the iterates then decrease monotonically to the
  // pinned surface infimum, which is zero at (a, ..., a).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(G, inf), un(G);
  u[a_flat] = 0.0;
  std::vector<size_t> arg(G);
  for (int it = 1; it <= grid.max_iter; ++it) {
    for (size_t i = 0; i < G; ++i) {
      double best = inf;
      size_t bj = 0;
      for (size_t j = 0; j < G; ++j) {
        if (u[j] == inf) continue;
        double c = block_W(pts[i].data(), pts[j].data(), P) + u[j];
        if (c < best) {
          best = c;
          bj = j;
        }
      }
      un[i] = V[i] - de0 + best;
      arg[i] = bj;
    }
    double res = 0.0;
    for (size_t i = 0; i < G; ++i) res = std::max(res, u[i] == inf ? inf : std::abs(un[i] - u[i]));
    u.swap(un);
    vf.residual_history.push_back(res);
    vf.iterations = it;
    vf.residual = res;
    if (res < grid.tol) break;
  }
  if (vf.residual >= grid.tol)
    throw std::runtime_error("value_iteration_u: no convergence, residual " + std::to_string(vf.residual));

  for (size_t i = 0; i < G; ++i) {
    size_t j = arg[i];
    for (int k = d - 1; k >= 0; --k) {
      size_t idx = j % vf.n;
      j /= vf.n;
      if (idx == 0 || idx == static_cast<size_t>(vf.n - 1))
        throw std::runtime_error("value_iteration_u: minimizer on the grid boundary, grid too small");
    }
  }

  double ua = u[a_flat];
  for (auto& x : u) x -= ua;
  vf.u_values = u;
  vf.w_values.resize(G);
  const double Va = V[a_flat];
  for (size_t i = 0; i < G; ++i) {
    // flat index of the reversed point: reverse the digit order
    size_t j = i, r = 0;
    std::vector<size_t> dig(d);
    for (int k = d - 1; k >= 0; --k) {
      dig[k] = j % vf.n;
      j /= vf.n;
    }
    for (int k = d - 1; k >= 0; --k) r = r * vf.n + dig[k];
    vf.w_values[i] = u[i] + u[r] - V[i] + Va;
  }
  return vf;
}

double u_extended(const std::vector<double>& x, const ValueFunction& vf, const ModelParams& P) {
  if (vf.in_hull(x)) return vf.u(x);
  double best = std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < vf.size(); ++j) {
    std::vector<double> y = vf.point(j);
    best = std::min(best, block_W(x.data(), y.data(), P) + vf.u_values[j]);
  }
  return block_V(x, P) - vf.d * vf.e0 + best;
}

double H_block(const std::vector<double>& x, const std::vector<double>& y, const ModelParams& P, double e0) {
  return 0.5 * block_V(x, P) + block_W(x, y, P) + 0.5 * block_V(y, P) - block_dim(P) * e0;
}

double Hhat(const std::vector<double>& x, const std::vector<double>& y, const ValueFunction& vf, const ModelParams& P) {
  return -vf.g(x) + H_block(x, y, P, vf.e0) + vf.g(y);
}

double rate_function_w(const std::vector<double>& x, const ValueFunction& vf) { return vf.w(x); }

HhatScan scan_Hhat(const ValueFunction& vf, const ModelParams& P, int stride) {
  HhatScan out;
  out.min_value = std::numeric_limits<double>::infinity();
  std::vector<double> a(vf.d, vf.a);
  out.at_aa = Hhat(a, a, vf, P);
  std::vector<size_t> idx;
  for (size_t i = 0; i < vf.size(); ++i) {
    std::vector<double> x = vf.point(i);
    bool keep = true;
    for (int k = 0; k < vf.d; ++k) {
      int ii = static_cast<int>(std::lround((x[k] - vf.x0) / vf.h));
      if ((ii - vf.anchor) % stride != 0) keep = false;
    }
    if (keep) idx.push_back(i);
  }
  for (size_t i : idx) {
    std::vector<double> x = vf.point(i);
    for (size_t j : idx) {
      std::vector<double> y = vf.point(j);
      double hv = Hhat(x, y, vf, P);
      double hs = Hhat(reversed(y), reversed(x), vf, P);
      out.min_value = std::min(out.min_value, hv);
      out.max_asymmetry = std::max(out.max_asymmetry, std::abs(hv - hs));
      bool is_aa = true;
      for (int k = 0; k < vf.d; ++k) is_aa = is_aa && std::abs(x[k] - vf.a) < 1e-14 && std::abs(y[k] - vf.a) < 1e-14;
      if (!is_aa && hv < 1e-8 && out.near_zero_minima.size() < 16) {
        std::vector<double> xy = x;
        xy.insert(xy.end(), y.begin(), y.end());
        out.near_zero_minima.push_back(xy);
      }
    }
  }
  return out;
}

}  // namespace chainlab
