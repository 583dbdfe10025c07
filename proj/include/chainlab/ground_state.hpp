#pragma once

#include <vector>

#include "chainlab/potential.hpp"

namespace chainlab {

struct ModelParams {
  Potential v = Potential::lennard_jones();
  int m = 2;        // interaction range; 0 stands for m = infinity
  int M_cut = 50;   // effective range when m = infinity
  double p = 0.1;
  double z_min = 0.0;
  double z_max = 0.0;

  int range() const { return m > 0 ? m : M_cut; }
  bool infinite_range() const { return m <= 0; }
  // Validates assumptions and fills the window [z_min, z_max]; throws std::invalid_argument on failure.
  static ModelParams make(const Potential& v, int m, double p, int M_cut = 50);
};

// Bound on the energy per particle dropped by truncating at M_cut (zero for finite m).
double truncation_tail_bound(const ModelParams& P);

struct BandedMatrix {
  int n = 0;
  int bw = 0;                             // number of stored super-diagonals
  std::vector<std::vector<double>> diag;  // diag[k][i] = H(i, i+k)
  double operator()(int i, int j) const;
};

double energy(const std::vector<double>& z, const ModelParams& P);
std::vector<double> gradient(const std::vector<double>& z, const ModelParams& P);
BandedMatrix hessian(const std::vector<double>& z, const ModelParams& P);

struct GroundStateResult {
  std::vector<double> spacings;
  double energy = 0.0;
  double grad_norm = 0.0;  // sup-norm of the projected gradient
  int iterations = 0;
  bool converged = false;
  double tail_bound = 0.0;  // truncation bound for m = infinity
};

struct NewtonOptions {
  int max_iter = 200;
  double grad_tol = 1e-10;
  double step_tol = 1e-12;
};

// Box-constrained Newton minimization of a smooth convex function on [lo, hi]^n.
struct BoxProblem {
  virtual ~BoxProblem() = default;
  virtual double value(const std::vector<double>& z) const = 0;
  virtual std::vector<double> grad(const std::vector<double>& z) const = 0;
  virtual BandedMatrix hess(const std::vector<double>& z) const = 0;
};
GroundStateResult projected_newton(const BoxProblem& f, std::vector<double> z0, double lo, double hi,
                                   const NewtonOptions& opt = {});

GroundStateResult minimize_EN(int N, const ModelParams& P, const NewtonOptions& opt = {});

struct BulkConstants {
  double a = 0.0;
  double e0 = 0.0;
  double a0 = 0.0;
};
BulkConstants bulk_spacing_a(const ModelParams& P);

struct ConvergenceRow {
  int N;
  double per_particle;  // E_N / N
  double excess;        // E_N - N e0
};
std::vector<ConvergenceRow> convergence_study_e0(const ModelParams& P, const std::vector<int>& N_list);

}  // namespace chainlab
