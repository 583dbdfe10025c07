#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "chainlab/gaussian.hpp"
#include "chainlab/ground_state.hpp"
#include "chainlab/quadrature.hpp"
#include "chainlab/surface.hpp"

namespace chainlab {

using PairEnergy = std::function<double(const std::vector<double>&, const std::vector<double>&)>;
using IndexEnergy = std::function<double(size_t, size_t)>;

// Nystrom matrix sqrt(w_i) k(x_i, x_j) sqrt(w_j) with k = exp(-beta E). The minimum of E over the
// grid is subtracted before exponentiating; the operator equals M * exp(log_scale).
struct KernelMatrix {
  Eigen::MatrixXd M;
  double log_scale = 0.0;
  char kind = 'T';
};

KernelMatrix assemble_kernel(const QuadratureGrid& grid, double beta, const PairEnergy& E, char kind);
KernelMatrix assemble_kernel_indexed(const QuadratureGrid& grid, double beta, const IndexEnergy& E, char kind);
KernelMatrix assemble_T(const ModelParams& P, const QuadratureGrid& grid, double beta);
// Uses the value function extended one Bellman step beyond its grid hull.
KernelMatrix assemble_K(const ModelParams& P, const QuadratureGrid& grid, double beta, const ValueFunction& vf);
KernelMatrix assemble_G(const GaussianModel& G, const QuadratureGrid& grid, double beta);

struct Eigenpair {
  double lambda = 0.0;
  Eigen::VectorXd right, left;  // right has unit 2-norm, <left, right> = 1
  int iterations = 0;
};
// Power iteration to relative 1e-12; restarts with a diagonal shift if it stalls.
Eigenpair principal_eig(const Eigen::MatrixXd& M, const Eigen::VectorXd* seed = nullptr);
// Largest-modulus eigenvalue of M - lambda0 * right * left^T.
double second_eig(const Eigen::MatrixXd& M, const Eigenpair& principal);

struct SpectralResult {
  char which_kernel = 'T';
  double lambda0 = 0.0, lambda1 = 0.0;  // eigenvalues of the scaled matrix
  double log_lambda0 = 0.0;             // log of the operator eigenvalue
  Eigen::VectorXd phi_right, phi_left;  // sqrt(w) phi and sqrt(w) (phi o sigma)
  double gap_ratio = 0.0;
  int iterations = 0;
};
SpectralResult spectral(const KernelMatrix& K, const Eigen::VectorXd* seed = nullptr);

struct TransferSolution {
  ModelParams P;
  BulkConstants bulk;
  double beta = 0.0;
  int d = 1;
  QuadratureGrid grid;
  KernelMatrix T;
  SpectralResult spectrum;
  std::vector<double> V;  // block energy at each node
};

TransferSolution solve_transfer(const ModelParams& P, const BulkConstants& bulk, double beta,
                                const GridOptions& opt = {});

double gibbs_free_energy(const TransferSolution& s);
struct FreeEnergyPair {
  double via_T = 0.0;
  double via_K = 0.0;
  double log_lambda0_T = 0.0;
  double log_lambda0_K = 0.0;
};
FreeEnergyPair gibbs_free_energy_both(const TransferSolution& s, const ValueFunction& vf);

// One-block marginal density at the grid nodes (integrates to 1 against the weights).
std::vector<double> marginal_density(const TransferSolution& s);
// Two-block marginal density at pairs of grid nodes.
Eigen::MatrixXd marginal_density2(const TransferSolution& s);
// Log of the one-block marginal at an arbitrary point (Nystrom extension of the eigenvectors).
double log_marginal_at(const TransferSolution& s, const std::vector<double>& x);

double mean_spacing(const TransferSolution& s);
double g_surf(const TransferSolution& s);
// -log(Lambda1 / Lambda0); +inf when the second eigenvalue vanishes.
double spectral_correlation_rate(const TransferSolution& s);
// corr(z_0, z_n) of the bulk measure for n = 0..max_lag (one-spacing blocks only).
std::vector<double> exact_spacing_correlation(const TransferSolution& s, int max_lag);

struct LdpRow {
  std::vector<double> x;
  double rate = 0.0;  // -1/beta log(rho(x) / rho(a))
  double w = 0.0;
};
std::vector<LdpRow> ldp_rate_check(const TransferSolution& s, const ValueFunction& vf,
                                   const std::vector<std::vector<double>>& points);

// Bound on C_q = sum_{k>q} var_k(h) from var_k(h) <= 2 sum_{j>k} alpha1 (j l0)^-s.
double variation_tail_Cq(const ModelParams& P, int q, double l0 = 0.7);

}  // namespace chainlab
