#include "chainlab/blocks.hpp"

#include <algorithm>
#include <stdexcept>

namespace chainlab {

int block_dim(const ModelParams& P) {
  if (P.infinite_range()) throw std::invalid_argument("block decomposition needs finite m");
  return std::max(1, P.m - 1);
}

double block_V(const double* x, const ModelParams& P) {
  const int d = block_dim(P);
  double e = 0.0;
  for (int i = 0; i < d; ++i) {
    e += P.p * x[i];
    double S = 0.0;
    for (int j = i; j < d && j - i < P.m; ++j) {
      S += x[j];
      e += P.v(S);
    }
  }
  return e;
}

double block_W(const double* x, const double* y, const ModelParams& P) {
  const int d = block_dim(P);
  if (P.m == 1) return 0.0;
  double e = 0.0;
  // window of spacings [i, j] over the concatenation (x, y), i in x, j in y, j - i + 1 <= m
  for (int i = 0; i < d; ++i) {
    double S = 0.0;
    for (int t = i; t < d; ++t) S += x[t];
    for (int j = d; j < 2 * d && j - i + 1 <= P.m; ++j) {
      S += y[j - d];
      e += P.v(S);
    }
  }
  return e;
}

BlockHessians block_hessians(const ModelParams& P, double a) {
  const int d = block_dim(P);
  BlockHessians H;
  H.d = d;
  H.Vxx.assign(d * d, 0.0);
  H.Wxx.assign(d * d, 0.0);
  H.Wxy.assign(d * d, 0.0);
  H.Wyy.assign(d * d, 0.0);
  // inside a block: window [i, j] contributes v''((j-i+1) a) to every pair in it
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d && j - i < P.m; ++j) {
      double c = P.v.d2((j - i + 1) * a);
      for (int r = i; r <= j; ++r)
        for (int q = i; q <= j; ++q) H.Vxx[r * d + q] += c;
    }
  if (P.m >= 2) {
    for (int i = 0; i < d; ++i)
      for (int j = d; j < 2 * d && j - i + 1 <= P.m; ++j) {
        double c = P.v.d2((j - i + 1) * a);
        for (int r = i; r <= j; ++r)
          for (int q = i; q <= j; ++q) {
            if (r < d && q < d) H.Wxx[r * d + q] += c;
            else if (r < d && q >= d) H.Wxy[r * d + (q - d)] += c;
            else if (r >= d && q >= d) H.Wyy[(r - d) * d + (q - d)] += c;
          }
      }
  }
  return H;
}

std::vector<double> reversed(const std::vector<double>& x) { return {x.rbegin(), x.rend()}; }

}  // namespace chainlab
