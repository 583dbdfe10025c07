#pragma once

#include <vector>

#include "chainlab/ground_state.hpp"

namespace chainlab {

struct SurfaceResult {
  std::vector<double> profile;  // z_1..z_K, tail z_j = a for j > K
  double min_Esurf = 0.0;
  double e_surf = 0.0;
  std::vector<double> beta_coeffs;  // beta_j = sum_{k>j} (k-j) v'(ka), j = 1..m-1
  int tail_K = 0;
  int iterations = 0;
  double grad_norm = 0.0;
};

// h(z_j, ..., z_{j+m-1}) = p z_j + sum_k v(z_j + ... + z_{j+k-1})
double surface_energy(const std::vector<double>& profile, const ModelParams& P, const BulkConstants& bulk);
std::vector<double> surface_gradient(const std::vector<double>& profile, const ModelParams& P,
                                     const BulkConstants& bulk);
std::vector<double> beta_coefficients(const ModelParams& P, const BulkConstants& bulk);

// e_surf = 2 min E_surf - p a - sum_k k v(ka)
double e_surf_from_min(double min_Esurf, const ModelParams& P, const BulkConstants& bulk);

SurfaceResult minimize_Esurf(int K, const ModelParams& P, const BulkConstants& bulk);
// Same with the first entries of the profile held fixed at `pinned`.
SurfaceResult minimize_Esurf_pinned(int K, const ModelParams& P, const BulkConstants& bulk,
                                    const std::vector<double>& pinned);
// Doubles K from K0 until min E_surf moves by less than 1e-10.
SurfaceResult minimize_Esurf_adaptive(const ModelParams& P, const BulkConstants& bulk, int K0 = 25);
double e_surf(const ModelParams& P, const BulkConstants& bulk);

struct ValueGridSpec {
  int points = 0;        // per dimension; 0 picks 257 (d=1) or 65 (d=2)
  double eps = -1.0;     // A_eps margin; negative picks 0.1 (z_max - z_min)
  int max_iter = 500;
  double tol = 1e-10;
};

// Value function u on a tensor grid over A_eps = [z_min, z_max + eps]^d, normalized so that
// u(a, ..., a) = 0; u(x) is then the infimum of E_surf over profiles starting with x.
class ValueFunction {
 public:
  int d = 1;
  int n = 0;        // points per dimension
  double x0 = 0.0;  // first node
  double h = 0.0;   // spacing
  int anchor = 0;   // index of a along each axis
  double a = 0.0;
  double e0 = 0.0;
  double eps = 0.0;
  std::vector<double> u_values;  // row-major, first coordinate slowest
  std::vector<double> w_values;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;

  double node(int i) const { return x0 + i * h; }
  double lo() const { return x0; }
  double hi() const { return x0 + (n - 1) * h; }
  bool in_hull(const std::vector<double>& x) const;
  size_t size() const { return u_values.size(); }
  std::vector<double> point(size_t flat) const;

  // Multilinear interpolation; throws std::out_of_range outside the grid hull.
  double u(const std::vector<double>& x) const;
  double w(const std::vector<double>& x) const;
  double g(const std::vector<double>& x) const;  // (u(x) - u(sigma x)) / 2
};

ValueFunction value_iteration_u(const ModelParams& P, const BulkConstants& bulk, const ValueGridSpec& grid = {});

// One Bellman step from the converged grid: defines u at points outside the hull.
double u_extended(const std::vector<double>& x, const ValueFunction& vf, const ModelParams& P);

double H_block(const std::vector<double>& x, const std::vector<double>& y, const ModelParams& P, double e0);
double Hhat(const std::vector<double>& x, const std::vector<double>& y, const ValueFunction& vf, const ModelParams& P);
double rate_function_w(const std::vector<double>& x, const ValueFunction& vf);

struct HhatScan {
  double min_value = 0.0;
  double at_aa = 0.0;
  double max_asymmetry = 0.0;  // max |H(x,y) - H(sigma y, sigma x)|
  std::vector<std::vector<double>> near_zero_minima;  // grid points (x, y) other than (a, a) with H < 1e-8
};
// Evaluates H-hat on all pairs of grid nodes with the given stride.
HhatScan scan_Hhat(const ValueFunction& vf, const ModelParams& P, int stride = 1);

}  // namespace chainlab
