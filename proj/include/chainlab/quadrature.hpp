#pragma once

#include <functional>
#include <vector>

namespace chainlab {

// Tensor-product composite Gauss-Legendre grid on [l0, l1]^d.
struct QuadratureGrid {
  int d = 1;
  double l0 = 0.0, l1 = 0.0;
  std::vector<double> nodes;    // 1D nodes, ascending
  std::vector<double> weights;  // 1D weights
  std::vector<double> edges;    // panel edges

  size_t n1() const { return nodes.size(); }
  size_t size() const;
  std::vector<double> point(size_t flat) const;
  double weight(size_t flat) const;
};

// Gauss-Legendre panels of the given order over the given edges.
QuadratureGrid composite_gauss_legendre(const std::vector<double>& edges, int d, int order = 8);

struct GridOptions {
  int nodes = 0;      // per dimension; 0 picks 128 (d=1) or 48 (d=2)
  int order = 8;      // Gauss-Legendre points per panel: 8, 16 or 32
  double l0 = 0.7;    // lower integration cutoff
  double tail = 32.3; // l1 = z_max + tail / (beta p), so that exp(-beta p (l1 - z_max)) < 1e-14
};

// Panel widths follow the local length scale of exp(-beta U) for the per-particle energy U of a
// uniform chain, 1 / sqrt(beta U'' + (beta U')^2): the thermal width near a, the wall width on the
// compressed side and 1/(beta p) in the pressure tail. U(x, k) returns the k-th derivative.
using SiteEnergy = std::function<double(double, int)>;
QuadratureGrid make_transfer_grid(int d, double beta, double p, double a, double z_max, const SiteEnergy& U,
                                  const GridOptions& opt = {});

}  // namespace chainlab
