#include "chainlab/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chainlab {

size_t QuadratureGrid::size() const {
  size_t s = 1;
  for (int k = 0; k < d; ++k) s *= nodes.size();
  return s;
}

std::vector<double> QuadratureGrid::point(size_t flat) const {
  std::vector<double> x(d);
  for (int k = d - 1; k >= 0; --k) {
    x[k] = nodes[flat % nodes.size()];
    flat /= nodes.size();
  }
  return x;
}

double QuadratureGrid::weight(size_t flat) const {
  double w = 1.0;
  for (int k = 0; k < d; ++k) {
    w *= weights[flat % nodes.size()];
    flat /= nodes.size();
  }
  return w;
}

template <int Order>
void reference_rule(std::vector<double>& t, std::vector<double>& w) {
  using rule = boost::math::quadrature::gauss<double, Order>;
  const auto& xa = rule::abscissa();
  const auto& wa = rule::weights();
  // boost stores the non-negative half; even orders have no zero node
  for (size_t i = 0; i < xa.size(); ++i) {
    t.push_back(-xa[i]);
    w.push_back(wa[i]);
    t.push_back(xa[i]);
    w.push_back(wa[i]);
  }
}

QuadratureGrid composite_gauss_legendre(const std::vector<double>& edges, int d, int order) {
  if (edges.size() < 2) throw std::invalid_argument("composite_gauss_legendre: need at least one panel");
  std::vector<double> t, w;
  switch (order) {
    case 8: reference_rule<8>(t, w); break;
    case 16: reference_rule<16>(t, w); break;
    case 32: reference_rule<32>(t, w); break;
    default: throw std::invalid_argument("composite_gauss_legendre: order must be 8, 16 or 32");
  }
  std::vector<size_t> perm(t.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(), [&](size_t a, size_t b) { return t[a] < t[b]; });

  QuadratureGrid g;
  g.d = d;
  g.l0 = edges.front();
  g.l1 = edges.back();
  g.edges = edges;
  for (size_t k = 0; k + 1 < edges.size(); ++k) {
    double lo = edges[k], hi = edges[k + 1];
    if (!(hi > lo)) throw std::invalid_argument("composite_gauss_legendre: edges must increase");
    for (size_t i : perm) {
      g.nodes.push_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * t[i]);
      g.weights.push_back(0.5 * (hi - lo) * w[i]);
    }
  }
  return g;
}

QuadratureGrid make_transfer_grid(int d, double beta, double p, double a, double z_max, const SiteEnergy& U,
                                  const GridOptions& opt) {
  if (!(beta > 0) || !(p > 0)) throw std::invalid_argument("transfer grid: beta and p must be positive");
  int n = opt.nodes > 0 ? opt.nodes : (d == 1 ? 128 : 48);
  int panels = std::max(2, static_cast<int>(std::lround(double(n) / opt.order)));
  double l0 = opt.l0, l1 = z_max + opt.tail / (beta * p);
  if (!(l1 > a) || !(a > l0)) throw std::invalid_argument("transfer grid: bulk spacing outside [l0, l1]");
  const double Ua = U(a, 0);
  auto density = [&](double x) {
    // panels per unit length: inverse local scale of f = exp(-beta (U - U(a))) damped by f^(1/q);
    // the q-point rule error on a panel behaves like (h f'/f)^(2q) f
    double e = beta * (U(x, 0) - Ua);
    if (!(e < 700.0)) return 0.0;
    double g = beta * U(x, 1);
    double k = beta * std::abs(U(x, 2));
    return std::sqrt(k + g * g) * std::exp(-e / opt.order);
  };
  // cumulative panel count by the trapezoid rule on a fine sampling
  const int fine = 20000;
  std::vector<double> xs(fine + 1), cum(fine + 1, 0.0);
  for (int i = 0; i <= fine; ++i) xs[i] = l0 + (l1 - l0) * i / fine;
  double prev = density(xs[0]);
  for (int i = 1; i <= fine; ++i) {
    double cur = density(xs[i]);
    cum[i] = cum[i - 1] + 0.5 * (prev + cur) * (xs[i] - xs[i - 1]);
    prev = cur;
  }
  std::vector<double> edges{l0};
  for (int k = 1; k < panels; ++k) {
    double target = cum.back() * k / panels;
    auto it = std::lower_bound(cum.begin(), cum.end(), target);
    size_t i = static_cast<size_t>(it - cum.begin());
    double t = (target - cum[i - 1]) / (cum[i] - cum[i - 1]);
    edges.push_back(xs[i - 1] + t * (xs[i] - xs[i - 1]));
  }
  edges.push_back(l1);
  return composite_gauss_legendre(edges, d, opt.order);
}

}  // namespace chainlab
