#include "chainlab/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "chainlab/blocks.hpp"
#include "chainlab/series.hpp"

namespace chainlab {

Eigen::MatrixXd reversal_matrix(int d) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) S(i, d - 1 - i) = 1.0;
  return S;
}

HessianBlocks hessian_blocks(const ModelParams& P, const BulkConstants& bulk) {
  BlockHessians h = block_hessians(P, bulk.a);
  const int d = h.d;
  auto mat = [d](const std::vector<double>& v) {
    Eigen::MatrixXd M(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) M(i, j) = v[i * d + j];
    return M;
  };
  HessianBlocks out;
  out.Vxx = mat(h.Vxx);
  out.Wxx = mat(h.Wxx);
  out.Wyy = mat(h.Wyy);
  out.A = out.Wyy + out.Vxx + out.Wxx;
  out.B = -mat(h.Wxy);
  return out;
}

RiccatiResult solve_riccati(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd* C0, double tol,
                            int max_iter) {
  Eigen::LLT<Eigen::MatrixXd> llA(A);
  if (llA.info() != Eigen::Success) throw std::runtime_error("solve_riccati: A is not positive definite");
  RiccatiResult r;
  r.C = C0 ? *C0 : A;
  auto residual = [&](const Eigen::MatrixXd& C) {
    return (C - A + B * C.ldlt().solve(B.transpose())).norm();
  };
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::LLT<Eigen::MatrixXd> ll(r.C);
    if (ll.info() != Eigen::Success) throw std::runtime_error("solve_riccati: iterate lost positive definiteness");
    Eigen::MatrixXd Cn = A - B * ll.solve(B.transpose());
    Cn = 0.5 * (Cn + Cn.transpose());
    if (!Cn.allFinite()) throw std::runtime_error("solve_riccati: iteration diverged");
    double step = (Cn - r.C).norm();
    r.C = Cn;
    r.iterations = it;
    if (step < tol) break;
  }
  r.residual = residual(r.C);
  if (!(r.residual < 1e-10 * (1.0 + A.norm())))
    throw std::runtime_error("solve_riccati: no convergence, residual " + std::to_string(r.residual));
  Eigen::LLT<Eigen::MatrixXd> llC(r.C);
  if (llC.info() != Eigen::Success) throw std::runtime_error("solve_riccati: solution is not positive definite");
  return r;
}

NDM matrices_NDM(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                 const Eigen::MatrixXd& Wyy) {
  const int d = static_cast<int>(A.rows());
  Eigen::MatrixXd S = reversal_matrix(d);
  Eigen::MatrixXd sCs = S * C * S;
  NDM o;
  o.N = sCs - B * C.ldlt().solve(B.transpose());
  o.N_alt = C - B.transpose() * sCs.ldlt().solve(B);
  o.N = 0.5 * (o.N + o.N.transpose());
  o.N_alt = 0.5 * (o.N_alt + o.N_alt.transpose());
  o.n_forms_gap = (o.N - o.N_alt).cwiseAbs().maxCoeff();
  o.D = C - Wyy;
  o.J = C - sCs;
  o.M.resize(2 * d, 2 * d);
  o.M << sCs, -B, -B.transpose(), C;
  o.M_hat.resize(2 * d, 2 * d);
  o.M_hat << 0.5 * (A - o.J), -B, -B.transpose(), 0.5 * (A + o.J);
  o.M_hat_positive = Eigen::LLT<Eigen::MatrixXd>(o.M_hat).info() == Eigen::Success;
  o.M_positive = Eigen::LLT<Eigen::MatrixXd>(o.M).info() == Eigen::Success;
  return o;
}

GaussianModel build_gaussian_model(const ModelParams& P, const BulkConstants& bulk) {
  HessianBlocks hb = hessian_blocks(P, bulk);
  GaussianModel G;
  G.d = static_cast<int>(hb.A.rows());
  G.a = bulk.a;
  G.e0 = bulk.e0;
  G.A = hb.A;
  G.B = hb.B;
  G.Vxx = hb.Vxx;
  G.Wxx = hb.Wxx;
  G.Wyy = hb.Wyy;
  RiccatiResult rr = solve_riccati(G.A, G.B);
  G.C = rr.C;
  G.riccati_residual = rr.residual;
  G.riccati_iterations = rr.iterations;
  G.det_C = G.C.determinant();
  NDM ndm = matrices_NDM(G.A, G.B, G.C, G.Wyy);
  G.N = ndm.N;
  G.N_alt = ndm.N_alt;
  G.D = ndm.D;
  G.J = ndm.J;
  G.M = ndm.M;
  G.M_hat = ndm.M_hat;
  G.n_forms_gap = ndm.n_forms_gap;
  G.M_hat_positive = ndm.M_hat_positive;
  G.M_positive = ndm.M_positive;
  return G;
}

double gaussian_g(double beta, const GaussianModel& G) {
  double detroot = std::pow(G.det_C, 1.0 / G.d);
  return G.e0 - std::log(std::sqrt(2 * std::numbers::pi / (beta * detroot))) / beta;
}

GaussianPrincipal gaussian_principal(double beta, const GaussianModel& G) {
  GaussianPrincipal gp;
  const int d = G.d;
  gp.lambda0 = std::sqrt(std::pow(2 * std::numbers::pi / beta, d) / G.det_C);
  gp.mean = Eigen::VectorXd::Constant(d, G.a);
  gp.precision = 0.5 * beta * G.N;
  gp.norm_const = std::pow(std::pow(beta, d) * (0.5 * G.N).determinant() / std::pow(std::numbers::pi, d), 0.25);
  return gp;
}

double gaussian_pair_energy(const GaussianModel& G, const std::vector<double>& x, const std::vector<double>& y) {
  const int d = G.d;
  Eigen::VectorXd xi(2 * d);
  for (int k = 0; k < d; ++k) {
    xi[k] = x[k] - G.a;
    xi[d + k] = y[k] - G.a;
  }
  return 0.5 * xi.dot(G.M_hat * xi);
}

Eigen::MatrixXd gaussian_marginal_precision(const GaussianModel& G, int n, char form) {
  const int d = G.d;
  Eigen::MatrixXd S = reversal_matrix(d);
  switch (form) {
    case 'a':
      if (n != 1) throw std::invalid_argument("marginal form (a) is the one-block marginal");
      return G.N;
    case 'b':
      if (n != 2) throw std::invalid_argument("marginal form (b) is the two-block marginal");
      return G.M;
    case 'c': {
      if (n < 1) throw std::invalid_argument("marginal form (c) needs n >= 1");
      Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n * d, n * d);
      for (int i = 0; i < n; ++i) {
        Q.block(i * d, i * d, d, d) = G.A;
        if (i + 1 < n) {
          Q.block(i * d, (i + 1) * d, d, d) = -G.B;
          Q.block((i + 1) * d, i * d, d, d) = -G.B.transpose();
        }
      }
      // boundary corrections from integrating out the two half-infinite tails
      Q.block(0, 0, d, d) += S * G.C * S - G.A;
      Q.block((n - 1) * d, (n - 1) * d, d, d) += G.C - G.A;
      return Q;
    }
    default:
      throw std::invalid_argument("marginal form must be 'a', 'b' or 'c'");
  }
}

double gaussian_marginal_density(const GaussianModel& G, double beta, const std::vector<double>& x) {
  const int d = G.d;
  Eigen::VectorXd xi(d);
  for (int k = 0; k < d; ++k) xi[k] = x[k] - G.a;
  Eigen::MatrixXd Pm = beta * G.N;
  double norm = std::sqrt(Pm.determinant() / std::pow(2 * std::numbers::pi, d));
  return norm * std::exp(-0.5 * xi.dot(Pm * xi));
}

double covariance_Hinv(const GaussianModel& G, int i, int j, int L) {
  const int d = G.d;
  if (std::abs(i) > L * d || std::abs(j) > L * d) throw std::invalid_argument("covariance_Hinv: index beyond truncation");
  const int nb = 2 * L + 1;
  const int n = nb * d;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (int b = 0; b < nb; ++b) {
    H.block(b * d, b * d, d, d) = G.A;
    if (b + 1 < nb) {
      H.block(b * d, (b + 1) * d, d, d) = -G.B;
      H.block((b + 1) * d, b * d, d, d) = -G.B.transpose();
    }
  }
  // spacing index k sits at row k + L d (block 0 holds spacings 0..d-1)
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e[j + L * d] = 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) throw std::runtime_error("covariance_Hinv: Hessian not positive definite");
  Eigen::VectorXd col = llt.solve(e);
  return col[i + L * d];
}

BrascampReport brascamp_bound(const ModelParams& P, int N) {
  if (N < 8) throw std::invalid_argument("brascamp_bound: N too small");
  const double z = P.z_min;
  const double s = P.v.s();
  const double a2 = P.v.alpha2();
  const double zz = std::pow(z, -s - 2);
  BrascampReport r;
  auto absd2 = [&](long n) { return std::abs(P.v.d2(n * z)); };
  SeriesSum rs = certified_sum([&](long n) { return n * absd2(n); }, 2,
                               [&](long M) { return a2 * zz * power_tail(M, s + 1); });
  r.rho = P.v.d2(P.z_max) - rs.value;
  r.kappa.resize(N - 2);
  for (int l = 1; l <= N - 2; ++l) {
    SeriesSum ks = certified_sum([&](long n) { return -(n - l) * P.v.d2(n * z); }, l + 1,
                                 [&](long M) { return a2 * zz * power_tail(M, s + 1); });
    r.kappa[l - 1] = ks.value;
  }
  // sum_l kappa_l = -sum_{n>=2} n(n-1)/2 v''(n z)
  SeriesSum ksum = certified_sum([&](long n) { return -0.5 * n * (n - 1) * P.v.d2(n * z); }, 2,
                                 [&](long M) { return 0.5 * a2 * zz * power_tail(M, s); });
  r.kappa_sum = ksum.value;
  r.eta = r.rho - 2 * r.kappa_sum;
  if (!(r.eta > 0)) throw std::runtime_error("brascamp_bound: eta <= 0, assumption margin fails");

  const int n = N - 1;
  r.A_N.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r.A_N(i, j) = i == j ? r.rho : -r.kappa[std::abs(i - j) - 1];
  Eigen::LLT<Eigen::MatrixXd> llt(r.A_N);
  if (llt.info() != Eigen::Success) throw std::runtime_error("brascamp_bound: A_N not positive definite");
  r.A_N_inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  for (int k = 2; k <= N / 4; ++k) r.scaled_decay.push_back(r.A_N_inv(0, k) * std::pow(k, s));
  // least-squares slope of log (A_N^-1)_{0k} against log k
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int k = 2; k <= 20 && k < n; ++k) {
    double x = std::log(double(k)), y = std::log(std::abs(r.A_N_inv(0, k)));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  r.fitted_exponent = -(cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return r;
}

}  // namespace chainlab
