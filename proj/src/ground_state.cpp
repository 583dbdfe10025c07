#include "chainlab/ground_state.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "chainlab/series.hpp"

namespace chainlab {

ModelParams ModelParams::make(const Potential& v, int m, double p, int M_cut) {
  if (m < 0) throw std::invalid_argument("m must be >= 1, or 0 for infinite range");
  if (M_cut < 1) throw std::invalid_argument("M_cut must be >= 1");
  AssumptionReport rep = validate(v, p);
  if (!rep.pass) throw std::invalid_argument("assumptions violated: " + rep.failure);
  ModelParams P;
  P.v = v;
  P.m = m;
  P.M_cut = m > 0 ? m : M_cut;
  P.p = p;
  P.z_min = rep.z_min;
  P.z_max = rep.z_max;
  return P;
}

double truncation_tail_bound(const ModelParams& P) {
  if (!P.infinite_range()) return 0.0;
  double s = P.v.s();
  return P.v.alpha1() * std::pow(P.z_min, -s) * power_tail(P.M_cut, s);
}

double BandedMatrix::operator()(int i, int j) const {
  if (i > j) std::swap(i, j);
  int k = j - i;
  if (k > bw) return 0.0;
  return diag[k][i];
}

double energy(const std::vector<double>& z, const ModelParams& P) {
  const int n = static_cast<int>(z.size());
  const int R = P.range();
  double e = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!(z[i] > P.v.r_hc())) return std::numeric_limits<double>::infinity();
    e += P.p * z[i];
  }
  for (int i = 0; i < n; ++i) {
    double S = 0.0;
    for (int k = 0; k < R && i + k < n; ++k) {
      S += z[i + k];
      e += P.v(S);
    }
  }
  return e;
}

std::vector<double> gradient(const std::vector<double>& z, const ModelParams& P) {
  const int n = static_cast<int>(z.size());
  const int R = P.range();
  std::vector<double> diff(n + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    double S = 0.0;
    for (int k = 0; k < R && i + k < n; ++k) {
      S += z[i + k];
      double d = P.v.d1(S);
      diff[i] += d;
      diff[i + k + 1] -= d;
    }
  }
  std::vector<double> g(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += diff[i];
    g[i] = acc + P.p;
  }
  return g;
}

BandedMatrix hessian(const std::vector<double>& z, const ModelParams& P) {
  const int n = static_cast<int>(z.size());
  const int R = P.range();
  BandedMatrix H;
  H.n = n;
  H.bw = std::max(0, std::min(R - 1, n - 1));
  H.diag.assign(H.bw + 1, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    double S = 0.0;
    for (int k = 0; k < R && i + k < n; ++k) {
      S += z[i + k];
      double d2 = P.v.d2(S);
      // window covers spacings i..i+k
      for (int a = i; a <= i + k; ++a)
        for (int b = a; b <= i + k; ++b) H.diag[b - a][a] += d2;
    }
  }
  return H;
}

GroundStateResult projected_newton(const BoxProblem& f, std::vector<double> z, double lo, double hi,
                                   const NewtonOptions& opt) {
  const int n = static_cast<int>(z.size());
  for (auto& x : z) x = std::clamp(x, lo, hi);
  GroundStateResult res;
  double fz = f.value(z);
  double last_step = std::numeric_limits<double>::infinity();
  const double eps = std::numeric_limits<double>::epsilon();
  for (int it = 0;; ++it) {
    std::vector<double> g = f.grad(z);
    std::vector<char> active(n, 0);
    double gn = 0.0;
    for (int i = 0; i < n; ++i) {
      bool at_lo = z[i] <= lo && g[i] > 0;
      bool at_hi = z[i] >= hi && g[i] < 0;
      active[i] = at_lo || at_hi;
      if (!active[i]) gn = std::max(gn, std::abs(g[i]));
    }
    res.iterations = it;
    res.grad_norm = gn;
    if (gn < opt.grad_tol && last_step < opt.step_tol) {
      res.converged = true;
      break;
    }
    if (it >= opt.max_iter) break;

    std::vector<int> freeidx;
    for (int i = 0; i < n; ++i)
      if (!active[i]) freeidx.push_back(i);
    const int nf = static_cast<int>(freeidx.size());
    std::vector<double> d(n, 0.0);
    if (nf > 0) {
      BandedMatrix H = f.hess(z);
      Eigen::MatrixXd Hf(nf, nf);
      Eigen::VectorXd rhs(nf);
      for (int a = 0; a < nf; ++a) {
        rhs[a] = -g[freeidx[a]];
        for (int b = 0; b < nf; ++b) Hf(a, b) = H(freeidx[a], freeidx[b]);
      }
      Eigen::LLT<Eigen::MatrixXd> llt(Hf);
      double shift = 0.0;
      while (llt.info() != Eigen::Success) {
        shift = shift == 0.0 ? 1e-8 * (1.0 + Hf.diagonal().cwiseAbs().maxCoeff()) : 10 * shift;
        llt.compute(Hf + shift * Eigen::MatrixXd::Identity(nf, nf));
      }
      Eigen::VectorXd sol = llt.solve(rhs);
      for (int a = 0; a < nf; ++a) d[freeidx[a]] = sol[a];
    }

    double t = 1.0;
    std::vector<double> zn(n);
    double fn = fz;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      double slope = 0.0;
      for (int i = 0; i < n; ++i) {
        zn[i] = std::clamp(z[i] + t * d[i], lo, hi);
        slope += g[i] * (zn[i] - z[i]);
      }
      fn = f.value(zn);
      if (fn <= fz + 1e-4 * slope + 16 * eps * std::abs(fz)) {
        accepted = true;
        break;
      }
      // near the minimum the change in f drowns in rounding; fall back to the gradient norm
      if (std::abs(fn - fz) <= 1e-12 * std::max(1.0, std::abs(fz))) {
        std::vector<double> gz = f.grad(zn);
        double gnn = 0.0;
        for (int i = 0; i < n; ++i)
          if (!((zn[i] <= lo && gz[i] > 0) || (zn[i] >= hi && gz[i] < 0))) gnn = std::max(gnn, std::abs(gz[i]));
        if (gnn < 0.5 * gn) {
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) {
      // no decrease is measurable above rounding: stationary if the gradient already is
      res.converged = gn < opt.grad_tol;
      res.iterations = it + 1;
      break;
    }
    last_step = 0.0;
    for (int i = 0; i < n; ++i) last_step = std::max(last_step, std::abs(zn[i] - z[i]));
    z = zn;
    fz = fn;
  }
  res.spacings = std::move(z);
  res.energy = fz;
  return res;
}

namespace {
struct ChainProblem : BoxProblem {
  const ModelParams& P;
  explicit ChainProblem(const ModelParams& p) : P(p) {}
  double value(const std::vector<double>& z) const override { return energy(z, P); }
  std::vector<double> grad(const std::vector<double>& z) const override { return gradient(z, P); }
  BandedMatrix hess(const std::vector<double>& z) const override { return hessian(z, P); }
};

double bulk_density(const ModelParams& P, double p, double r) {
  double f = p * r;
  for (int k = 1; k <= P.range(); ++k) f += P.v(k * r);
  return f;
}

double bulk_argmin(const ModelParams& P, double p) {
  double lo = P.z_min, hi = P.z_max;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double fc = bulk_density(P, p, c), fd = bulk_density(P, p, d);
  while (hi - lo > 1e-7) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = bulk_density(P, p, c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = bulk_density(P, p, d);
    }
  }
  double r = 0.5 * (lo + hi);
  for (int it = 0; it < 50; ++it) {
    double f1 = p, f2 = 0.0;
    for (int k = 1; k <= P.range(); ++k) {
      f1 += k * P.v.d1(k * r);
      f2 += double(k) * k * P.v.d2(k * r);
    }
    double step = f1 / f2;
    double rn = std::clamp(r - step, P.z_min, P.z_max);
    bool done = std::abs(rn - r) <= 1e-13 * r;
    r = rn;
    if (done) break;
  }
  return r;
}
}  // namespace

GroundStateResult minimize_EN(int N, const ModelParams& P, const NewtonOptions& opt) {
  if (N < 2) throw std::invalid_argument("minimize_EN: N must be >= 2");
  BulkConstants bc = bulk_spacing_a(P);
  ChainProblem prob(P);
  GroundStateResult r = projected_newton(prob, std::vector<double>(N - 1, bc.a), P.z_min, P.z_max, opt);
  r.tail_bound = truncation_tail_bound(P) * N;
  if (!r.converged)
    throw std::runtime_error("minimize_EN: no convergence after " + std::to_string(r.iterations) +
                             " iterations, grad norm " + std::to_string(r.grad_norm));
  return r;
}

BulkConstants bulk_spacing_a(const ModelParams& P) {
  BulkConstants b;
  b.a = bulk_argmin(P, P.p);
  b.e0 = bulk_density(P, P.p, b.a);
  b.a0 = bulk_argmin(P, 0.0);
  return b;
}

std::vector<ConvergenceRow> convergence_study_e0(const ModelParams& P, const std::vector<int>& N_list) {
  for (size_t i = 1; i < N_list.size(); ++i)
    if (N_list[i] <= N_list[i - 1]) throw std::invalid_argument("convergence_study_e0: N list must be ascending");
  BulkConstants bc = bulk_spacing_a(P);
  std::vector<ConvergenceRow> rows;
  for (int N : N_list) {
    GroundStateResult r = minimize_EN(N, P);
    rows.push_back({N, r.energy / N, r.energy - N * bc.e0});
  }
  return rows;
}

}  // namespace chainlab
