#pragma once

#include <vector>

#include "chainlab/ground_state.hpp"

namespace chainlab {

// Block decomposition of a finite-range chain into blocks of d = m-1 spacings.
// For m = 1 a block is a single spacing with no cross-block interaction.
int block_dim(const ModelParams& P);

// Energy of one block of d spacings (all pair windows inside it) plus p * sum(x).
double block_V(const double* x, const ModelParams& P);
// Interaction between adjacent blocks x (left) and y (right): windows that cross the cut.
double block_W(const double* x, const double* y, const ModelParams& P);

inline double block_V(const std::vector<double>& x, const ModelParams& P) { return block_V(x.data(), P); }
inline double block_W(const std::vector<double>& x, const std::vector<double>& y, const ModelParams& P) {
  return block_W(x.data(), y.data(), P);
}

// Second derivatives at x = y = (a, ..., a): V_xx, W_xx, W_xy, W_yy as d*d row-major arrays.
struct BlockHessians {
  int d = 1;
  std::vector<double> Vxx, Wxx, Wxy, Wyy;
};
BlockHessians block_hessians(const ModelParams& P, double a);

std::vector<double> reversed(const std::vector<double>& x);

}  // namespace chainlab
