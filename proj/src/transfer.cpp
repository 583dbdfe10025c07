#include "chainlab/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "chainlab/blocks.hpp"
#include "chainlab/series.hpp"

namespace chainlab {

KernelMatrix assemble_kernel_indexed(const QuadratureGrid& grid, double beta, const IndexEnergy& E, char kind) {
  const size_t n = grid.size();
  std::vector<double> sw(n);
  for (size_t i = 0; i < n; ++i) sw[i] = std::sqrt(grid.weight(i));
  Eigen::MatrixXd En(n, n);
  double emin = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      double e = E(i, j);
      En(i, j) = e;
      if (e < emin) emin = e;
    }
  if (!std::isfinite(emin)) throw std::runtime_error("assemble_kernel: no finite kernel entry");
  KernelMatrix K;
  K.kind = kind;
  K.log_scale = -beta * emin;
  K.M.resize(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      double x = -beta * (En(i, j) - emin);
      K.M(i, j) = sw[i] * sw[j] * (x < -745.0 ? 0.0 : std::exp(x));
    }
  return K;
}

KernelMatrix assemble_kernel(const QuadratureGrid& grid, double beta, const PairEnergy& E, char kind) {
  std::vector<std::vector<double>> pts(grid.size());
  for (size_t i = 0; i < pts.size(); ++i) pts[i] = grid.point(i);
  return assemble_kernel_indexed(grid, beta, [&](size_t i, size_t j) { return E(pts[i], pts[j]); }, kind);
}

KernelMatrix assemble_T(const ModelParams& P, const QuadratureGrid& grid, double beta) {
  const size_t n = grid.size();
  std::vector<std::vector<double>> pts(n);
  std::vector<double> V(n);
  for (size_t i = 0; i < n; ++i) {
    pts[i] = grid.point(i);
    V[i] = block_V(pts[i], P);
  }
  return assemble_kernel_indexed(
      grid, beta, [&](size_t i, size_t j) { return 0.5 * (V[i] + V[j]) + block_W(pts[i], pts[j], P); }, 'T');
}

KernelMatrix assemble_K(const ModelParams& P, const QuadratureGrid& grid, double beta, const ValueFunction& vf) {
  const size_t n = grid.size();
  std::vector<std::vector<double>> pts(n);
  std::vector<double> gx(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    pts[i] = grid.point(i);
    // reversal is the identity on one-spacing blocks, so g vanishes there
    if (vf.d > 1) gx[i] = 0.5 * (u_extended(pts[i], vf, P) - u_extended(reversed(pts[i]), vf, P));
  }
  const double e0 = vf.e0;
  return assemble_kernel_indexed(
      grid, beta, [&](size_t i, size_t j) { return -gx[i] + H_block(pts[i], pts[j], P, e0) + gx[j]; }, 'K');
}

KernelMatrix assemble_G(const GaussianModel& G, const QuadratureGrid& grid, double beta) {
  return assemble_kernel(
      grid, beta, [&](const std::vector<double>& x, const std::vector<double>& y) { return gaussian_pair_energy(G, x, y); },
      'G');
}

namespace {

struct PowerResult {
  double lambda = 0.0;
  Eigen::VectorXd vec;
  int iterations = 0;
  bool converged = false;
};

PowerResult power(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply, Eigen::VectorXd v,
                  double tol, int max_iter) {
  PowerResult r;
  v /= v.norm();
  double lam = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd w = apply(v);
    double nw = w.norm();
    if (nw == 0.0) {
      r.lambda = 0.0;
      r.vec = v;
      r.iterations = it;
      r.converged = true;
      return r;
    }
    double sgn = v.dot(w) >= 0 ? 1.0 : -1.0;
    Eigen::VectorXd vn = sgn * w / nw;
    double lam_new = sgn * nw;
    double dv = (vn - v).cwiseAbs().maxCoeff();
    bool done = it > 2 && std::abs(lam_new - lam) <= tol * std::abs(lam_new) && dv <= 1e3 * tol;
    v = vn;
    lam = lam_new;
    r.iterations = it;
    if (done) {
      r.converged = true;
      break;
    }
  }
  r.lambda = lam;
  r.vec = v;
  return r;
}

}  // namespace

Eigenpair principal_eig(const Eigen::MatrixXd& M, const Eigen::VectorXd* seed) {
  const int n = static_cast<int>(M.rows());
  Eigen::VectorXd v0 = seed ? *seed : Eigen::VectorXd::Ones(n);
  if (seed && (v0.norm() == 0.0 || !v0.allFinite())) v0 = Eigen::VectorXd::Ones(n);
  double shift = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    auto right = power([&](const Eigen::VectorXd& x) { Eigen::VectorXd y = M * x; return (y + shift * x).eval(); }, v0, 1e-13, 20000);
    auto left = power([&](const Eigen::VectorXd& x) { Eigen::VectorXd y = M.transpose() * x; return (y + shift * x).eval(); }, v0, 1e-13, 20000);
    if (right.converged && left.converged) {
      Eigenpair e;
      e.lambda = right.lambda - shift;
      e.right = right.vec;
      if (e.right.sum() < 0) e.right = -e.right;
      e.left = left.vec;
      if (e.left.sum() < 0) e.left = -e.left;
      e.left /= e.left.dot(e.right);
      e.iterations = right.iterations + left.iterations;
      return e;
    }
    // oscillation between eigenvalues of equal modulus: shift the spectrum
    shift = (attempt + 1) * 0.5 * M.cwiseAbs().rowwise().sum().maxCoeff();
  }
  throw std::runtime_error("principal_eig: power iteration did not converge");
}

double second_eig(const Eigen::MatrixXd& M, const Eigenpair& pr) {
  const int n = static_cast<int>(M.rows());
  if (n == 1) return 0.0;
  auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd y = M * x;
    y -= pr.lambda * pr.right * pr.left.dot(x);
    return y;
  };
  Eigen::VectorXd v0(n);
  for (int i = 0; i < n; ++i) v0[i] = std::cos(2.0 + 3.7 * i) + 0.5;
  PowerResult r = power(apply, v0, 1e-11, 20000);
  if (std::abs(r.lambda) <= 1e-14 * pr.lambda) return 0.0;
  if (r.converged) return std::abs(r.lambda);
  // complex pair or near-degenerate modulus: fall back to a dense eigensolver
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  std::vector<double> mods;
  for (int i = 0; i < n; ++i) mods.push_back(std::abs(es.eigenvalues()[i]));
  std::sort(mods.rbegin(), mods.rend());
  return mods.size() > 1 ? mods[1] : 0.0;
}

SpectralResult spectral(const KernelMatrix& K, const Eigen::VectorXd* seed) {
  Eigenpair e = principal_eig(K.M, seed);
  SpectralResult s;
  s.which_kernel = K.kind;
  s.lambda0 = e.lambda;
  s.lambda1 = second_eig(K.M, e);
  s.log_lambda0 = std::log(e.lambda) + K.log_scale;
  s.phi_right = e.right;
  s.phi_left = e.left;
  s.gap_ratio = s.lambda1 / s.lambda0;
  s.iterations = e.iterations;
  return s;
}

TransferSolution solve_transfer(const ModelParams& P, const BulkConstants& bulk, double beta, const GridOptions& opt) {
  TransferSolution s;
  s.P = P;
  s.bulk = bulk;
  s.beta = beta;
  s.d = block_dim(P);
  // energy per particle of the uniform chain with spacing x
  auto U = [&P](double x, int k) {
    double u = k == 0 ? P.p * x : (k == 1 ? P.p : 0.0);
    for (int j = 1; j <= P.range(); ++j) u += std::pow(double(j), k) * P.v.eval(j * x, k);
    return u;
  };
  s.grid = make_transfer_grid(s.d, beta, P.p, bulk.a, P.z_max, U, opt);
  const size_t n = s.grid.size();
  s.V.resize(n);
  for (size_t i = 0; i < n; ++i) s.V[i] = block_V(s.grid.point(i), P);
  s.T = assemble_T(P, s.grid, beta);
  // seed with the harmonic principal eigenfunction when it is available
  Eigen::VectorXd seed;
  const Eigen::VectorXd* seedp = nullptr;
  if (P.m >= 2) {
    try {
      GaussianModel G = build_gaussian_model(P, bulk);
      GaussianPrincipal gp = gaussian_principal(beta, G);
      seed.resize(n);
      for (size_t i = 0; i < n; ++i) {
        std::vector<double> x = s.grid.point(i);
        Eigen::VectorXd xi(s.d);
        for (int k = 0; k < s.d; ++k) xi[k] = x[k] - bulk.a;
        seed[i] = std::sqrt(s.grid.weight(i)) * std::exp(-0.5 * xi.dot(gp.precision * xi)) + 1e-300;
      }
      seedp = &seed;
    } catch (const std::exception&) {
      seedp = nullptr;
    }
  }
  s.spectrum = spectral(s.T, seedp);
  return s;
}

double gibbs_free_energy(const TransferSolution& s) { return -s.spectrum.log_lambda0 / (s.beta * s.d); }

FreeEnergyPair gibbs_free_energy_both(const TransferSolution& s, const ValueFunction& vf) {
  FreeEnergyPair f;
  f.via_T = gibbs_free_energy(s);
  f.log_lambda0_T = s.spectrum.log_lambda0;
  KernelMatrix K = assemble_K(s.P, s.grid, s.beta, vf);
  SpectralResult sk = spectral(K, &s.spectrum.phi_right);
  f.log_lambda0_K = sk.log_lambda0;
  f.via_K = s.bulk.e0 - sk.log_lambda0 / (s.beta * s.d);
  return f;
}

std::vector<double> marginal_density(const TransferSolution& s) {
  const size_t n = s.grid.size();
  const auto& L = s.spectrum.phi_left;
  const auto& R = s.spectrum.phi_right;
  double c = L.dot(R);
  std::vector<double> rho(n);
  for (size_t i = 0; i < n; ++i) rho[i] = std::max(0.0, L[i] * R[i] / c) / s.grid.weight(i);
  return rho;
}

Eigen::MatrixXd marginal_density2(const TransferSolution& s) {
  const size_t n = s.grid.size();
  const auto& L = s.spectrum.phi_left;
  const auto& R = s.spectrum.phi_right;
  double c = L.dot(R) * s.spectrum.lambda0;
  Eigen::MatrixXd p(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      p(i, j) = std::max(0.0, L[i] * s.T.M(i, j) * R[j] / c) / (s.grid.weight(i) * s.grid.weight(j));
  return p;
}

double log_marginal_at(const TransferSolution& s, const std::vector<double>& x) {
  // phi_R(x) = (1/Lambda0) sum_j T(x, x_j) w_j phi_R(x_j), phi_L(x) likewise with T(x_j, x)
  const size_t n = s.grid.size();
  const double beta = s.beta;
  const double Vx = block_V(x, s.P);
  std::vector<double> lr(n), ll(n);
  double mr = -std::numeric_limits<double>::infinity(), ml = mr;
  for (size_t j = 0; j < n; ++j) {
    std::vector<double> y = s.grid.point(j);
    double sw = std::sqrt(s.grid.weight(j));
    double Er = 0.5 * Vx + block_W(x, y, s.P) + 0.5 * s.V[j];
    double El = 0.5 * s.V[j] + block_W(y, x, s.P) + 0.5 * Vx;
    double pr = s.spectrum.phi_right[j], pl = s.spectrum.phi_left[j];
    lr[j] = pr > 0 ? -beta * Er + std::log(sw * pr) : -std::numeric_limits<double>::infinity();
    ll[j] = pl > 0 ? -beta * El + std::log(sw * pl) : -std::numeric_limits<double>::infinity();
    mr = std::max(mr, lr[j]);
    ml = std::max(ml, ll[j]);
  }
  double sr = 0.0, sl = 0.0;
  for (size_t j = 0; j < n; ++j) {
    sr += std::exp(lr[j] - mr);
    sl += std::exp(ll[j] - ml);
  }
  // up to an x-independent constant
  return mr + std::log(sr) + ml + std::log(sl);
}

double mean_spacing(const TransferSolution& s) {
  std::vector<double> rho = marginal_density(s);
  double m = 0.0;
  for (size_t i = 0; i < rho.size(); ++i) m += s.grid.weight(i) * rho[i] * s.grid.point(i)[0];
  return m;
}

double g_surf(const TransferSolution& s) {
  // mu(e^{beta W0}) from the two-block marginal; the weight e^{beta W} cancels the cross term
  // in T, leaving the product of two one-sided overlaps.
  const size_t n = s.grid.size();
  const double beta = s.beta;
  const double emin = -s.T.log_scale / beta;
  std::vector<double> la(n);
  double m = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    la[i] = 0.5 * std::log(s.grid.weight(i)) - 0.5 * beta * (s.V[i] - emin);
    m = std::max(m, la[i]);
  }
  double sl = 0.0, sr = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double ai = std::exp(la[i] - m);
    sl += s.spectrum.phi_left[i] * ai;
    sr += s.spectrum.phi_right[i] * ai;
  }
  // M_ij e^{beta W_ij} = a_i a_j with a_i = sqrt(w_i) exp(-beta (V_i - Emin) / 2)
  double log_mu = std::log(sl) + std::log(sr) + 2 * m - std::log(s.spectrum.lambda0) -
                  std::log(s.spectrum.phi_left.dot(s.spectrum.phi_right));
  return -gibbs_free_energy(s) - log_mu / beta;
}

double spectral_correlation_rate(const TransferSolution& s) {
  if (s.spectrum.lambda1 <= 0.0) return std::numeric_limits<double>::infinity();
  if (s.spectrum.gap_ratio > 1.0 - 1e-10) throw std::runtime_error("spectral gap collapsed: Lambda1 ~ Lambda0");
  return -std::log(s.spectrum.gap_ratio);
}

std::vector<double> exact_spacing_correlation(const TransferSolution& s, int max_lag) {
  if (s.d != 1) throw std::invalid_argument("exact_spacing_correlation: one-spacing blocks only");
  const size_t n = s.grid.size();
  const auto& L = s.spectrum.phi_left;
  const auto& R = s.spectrum.phi_right;
  double c = L.dot(R);
  double mean = mean_spacing(s);
  Eigen::VectorXd f(n);
  for (size_t i = 0; i < n; ++i) f[i] = s.grid.nodes[i] - mean;
  Eigen::VectorXd right = f.cwiseProduct(R);
  Eigen::VectorXd left = f.cwiseProduct(L);
  std::vector<double> out;
  double var = left.dot(right) / c;
  for (int k = 0; k <= max_lag; ++k) {
    out.push_back(left.dot(right) / c / var);
    right = (s.T.M * right) / s.spectrum.lambda0;
  }
  return out;
}

std::vector<LdpRow> ldp_rate_check(const TransferSolution& s, const ValueFunction& vf,
                                   const std::vector<std::vector<double>>& points) {
  std::vector<double> a(s.d, s.bulk.a);
  double la = log_marginal_at(s, a);
  std::vector<LdpRow> rows;
  for (const auto& x : points) {
    LdpRow r;
    r.x = x;
    r.rate = -(log_marginal_at(s, x) - la) / s.beta;
    r.w = vf.w(x);
    rows.push_back(r);
  }
  return rows;
}

double variation_tail_Cq(const ModelParams& P, int q, double l0) {
  if (q < 0) throw std::invalid_argument("variation_tail_Cq: q must be >= 0");
  const double s = P.v.s();
  const double c = 2.0 * P.v.alpha1() * std::pow(l0, -s);
  if (!P.infinite_range()) {
    double total = 0.0;
    for (int k = q + 1; k < P.m; ++k)
      for (int j = k + 1; j <= P.m; ++j) total += c * std::pow(double(j), -s);
    return total;
  }
  // sum_{k>q} sum_{j>k} j^-s = sum_{j>q+1} (j - q - 1) j^-s
  SeriesSum ss = certified_sum([&](long j) { return (j - q - 1) * std::pow(double(j), -s); }, q + 2,
                               [&](long N) { return power_tail(N, s - 1); }, 1e-16);
  return c * ss.value;
}

}  // namespace chainlab
