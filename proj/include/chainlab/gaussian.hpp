#pragma once

#include <Eigen/Dense>

#include <vector>

#include "chainlab/ground_state.hpp"

namespace chainlab {

struct GaussianModel {
  int d = 1;
  double a = 0.0;
  double e0 = 0.0;
  Eigen::MatrixXd A, B;        // Hessian blocks at (a, a): A = Wyy + Vxx + Wxx, B = -Wxy
  Eigen::MatrixXd Vxx, Wxx, Wyy;
  Eigen::MatrixXd C;           // Riccati solution C = A - B C^-1 B^T
  Eigen::MatrixXd N, N_alt;    // sigma C sigma - B C^-1 B^T and C - B^T (sigma C sigma)^-1 B
  Eigen::MatrixXd D, J;        // D = C - Wyy, J = C - sigma C sigma
  Eigen::MatrixXd M, M_hat;    // 2d x 2d
  double det_C = 0.0;
  double riccati_residual = 0.0;
  int riccati_iterations = 0;
  double n_forms_gap = 0.0;    // max |N - N_alt|
  bool M_hat_positive = false;
  bool M_positive = false;
};

Eigen::MatrixXd reversal_matrix(int d);

struct HessianBlocks {
  Eigen::MatrixXd A, B, Vxx, Wxx, Wyy;
};
HessianBlocks hessian_blocks(const ModelParams& P, const BulkConstants& bulk);

struct RiccatiResult {
  Eigen::MatrixXd C;
  double residual = 0.0;  // Frobenius norm of C - A + B C^-1 B^T
  int iterations = 0;
};
// Fixed-point iteration C <- A - B C^-1 B^T from C0 (default A).
RiccatiResult solve_riccati(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd* C0 = nullptr,
                            double tol = 1e-13, int max_iter = 10000);

struct NDM {
  Eigen::MatrixXd N, N_alt, D, J, M, M_hat;
  double n_forms_gap = 0.0;
  bool M_hat_positive = false;
  bool M_positive = false;
};
NDM matrices_NDM(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& C,
                 const Eigen::MatrixXd& Wyy);

GaussianModel build_gaussian_model(const ModelParams& P, const BulkConstants& bulk);

double gaussian_g(double beta, const GaussianModel& G);

struct GaussianPrincipal {
  double lambda0 = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;  // beta/2 * N: eigenfunction exp(-1/2 <x-a, precision (x-a)>)
  double norm_const = 0.0;    // (beta^d det(N/2) / pi^d)^(1/4)
};
GaussianPrincipal gaussian_principal(double beta, const GaussianModel& G);

// Energy of the Gaussian kernel G_beta(x, y) = exp(-beta * E), E = 1/2 Qhat(x - a, y - a).
double gaussian_pair_energy(const GaussianModel& G, const std::vector<double>& x, const std::vector<double>& y);

// Precision (per unit beta) of the Gaussian marginal of n consecutive blocks.
//  'a': n = 1 from N;  'b': n = 2 from the M block form;  'c': chain form with end corrections.
Eigen::MatrixXd gaussian_marginal_precision(const GaussianModel& G, int n, char form);
// Density of the n = 1 marginal at x for inverse temperature beta.
double gaussian_marginal_density(const GaussianModel& G, double beta, const std::vector<double>& x);

// (H^-1)_{ij} of the infinite block-tridiagonal Hessian (-B^T, A, -B), truncated to 2L+1 blocks.
double covariance_Hinv(const GaussianModel& G, int i, int j, int L = 200);

struct BrascampReport {
  double rho = 0.0;
  std::vector<double> kappa;  // kappa_1 .. kappa_{N-2}
  double kappa_sum = 0.0;     // sum over all l >= 1
  double eta = 0.0;
  Eigen::MatrixXd A_N;
  Eigen::MatrixXd A_N_inv;
  std::vector<double> scaled_decay;  // (A_N^-1)_{0n} n^s for 2 <= n <= N/4
  double fitted_exponent = 0.0;      // from (A_N^-1)_{0n}, n in [2, 20]
};
BrascampReport brascamp_bound(const ModelParams& P, int N);

}  // namespace chainlab
