#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/rational.hpp>

#include <cmath>
#include <limits>

#include "chainlab/sampler.hpp"

using namespace chainlab;

namespace {

ModelParams model(int m, double p) { return ModelParams::make(Potential::lennard_jones(), m, p); }

SamplerOptions short_run(uint64_t seed, long steps = 100000) {
  SamplerOptions o;
  o.steps = steps;
  o.burn_in = steps / 10;
  o.thinning = 10;
  o.seed = seed;
  return o;
}

double one_spacing_mean(double beta, double p) {
  using boost::math::quadrature::gauss_kronrod;
  auto f = [&](double z) { return std::exp(-beta * (std::pow(z, -12) - std::pow(z, -6) + p * z)); };
  auto zf = [&](double z) { return z * f(z); };
  const double inf = std::numeric_limits<double>::infinity();
  double Z = gauss_kronrod<double, 61>::integrate(f, 0.6, 3.0, 15, 1e-14) +
             gauss_kronrod<double, 61>::integrate(f, 3.0, inf, 15, 1e-14);
  double Z1 = gauss_kronrod<double, 61>::integrate(zf, 0.6, 3.0, 15, 1e-14) +
              gauss_kronrod<double, 61>::integrate(zf, 3.0, inf, 15, 1e-14);
  return Z1 / Z;
}

}  // namespace

TEST_CASE("streams are reproducible and distinct") {
  auto a = make_stream(5, 0), b = make_stream(5, 0), c = make_stream(5, 1), d = make_stream(6, 0);
  for (int i = 0; i < 10; ++i) CHECK(a() == b());
  auto a2 = make_stream(5, 0);
  CHECK(a2() != c());
  auto a3 = make_stream(5, 0);
  CHECK(a3() != d());
}

TEST_CASE("metropolis acceptance satisfies detailed balance exactly on three states") {
  using Q = boost::rational<long long>;
  const Q pi[3] = {Q(1, 2), Q(1, 3), Q(1, 6)};
  Q K[3][3];
  for (int i = 0; i < 3; ++i) {
    Q stay(1);
    for (int j = 0; j < 3; ++j) {
      if (j == i) continue;
      K[i][j] = Q(1, 2) * metropolis_accept_ratio(pi[i], pi[j]);
      stay -= K[i][j];
    }
    K[i][i] = stay;
  }
  for (int i = 0; i < 3; ++i) {
    Q row(0), col(0);
    for (int j = 0; j < 3; ++j) {
      CHECK(pi[i] * K[i][j] == pi[j] * K[j][i]);
      CHECK(K[i][j] >= Q(0));
      row += K[i][j];
      col += pi[j] * K[j][i];
    }
    CHECK(row == Q(1));
    CHECK(col == pi[i]);
  }
}

TEST_CASE("energy form of the acceptance rule") {
  CHECK(metropolis_accept(1.0, 0.5, 3.0) == 1.0);
  CHECK(metropolis_accept(1.0, 1.0, 3.0) == 1.0);
  CHECK(metropolis_accept(0.0, 0.5, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(metropolis_accept(0.0, std::numeric_limits<double>::infinity(), 2.0) == 0.0);
}

TEST_CASE("identical seeds give identical runs") {
  auto P = model(2, 0.1);
  auto o = short_run(21, 20000);
  o.chains = 2;
  auto r1 = metropolis_run(32, P, 20.0, o);
  auto r2 = metropolis_run(32, P, 20.0, o);
  CHECK(r1.mean_spacing == r2.mean_spacing);
  CHECK(r1.mean_spacing_se == r2.mean_spacing_se);
  CHECK(r1.corr == r2.corr);
  CHECK(r1.hist_density == r2.hist_density);
  CHECK(r1.tail_freq == r2.tail_freq);
  CHECK(r1.proposal_width == r2.proposal_width);
  o.seed = 22;
  auto r3 = metropolis_run(32, P, 20.0, o);
  CHECK(r3.mean_spacing != r1.mean_spacing);
}

TEST_CASE("nearest-neighbour chain: independent spacings with the exact mean") {
  auto P = model(1, 0.1);
  auto r = metropolis_run(64, P, 5.0, short_run(31));
  CHECK(r.acceptance > 0.3);
  CHECK(r.acceptance < 0.5);
  CHECK(std::abs(r.mean_spacing - one_spacing_mean(5.0, 0.1)) <= 3 * r.mean_spacing_se);
  auto f = correlation_function(r, 8);
  CHECK(f.c[0] == 1.0);
  for (int l = 1; l <= 8; ++l) CHECK(std::abs(f.c[l]) <= 3 * f.se[l]);
}

TEST_CASE("kernel chain on the transfer grid") {
  auto P = model(2, 0.1);
  auto b = bulk_spacing_a(P);
  auto s = solve_transfer(P, b, 20.0);
  auto Pm = kernel_transition_matrix(s);
  CHECK((Pm.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14);
  CHECK(Pm.minCoeff() >= 0.0);

  SamplerOptions o;
  o.steps = 1000000;
  o.burn_in = 1000;
  o.thinning = 1;
  o.seed = 41;
  auto run = kernel_chain_run(s, o);

  // chi-square on the occupation, pooling cells with small expectation
  auto rho = marginal_density(s);
  const double n = static_cast<double>(run.samples);
  double chi2 = 0.0, pe = 0.0, po = 0.0;
  int cells = 0;
  for (size_t i = 0; i < rho.size(); ++i) {
    pe += n * rho[i] * s.grid.weights[i];
    po += n * run.occupation[i];
    if (pe >= 20.0) {
      chi2 += (po - pe) * (po - pe) / pe;
      ++cells;
      pe = po = 0.0;
    }
  }
  boost::math::chi_squared dist(cells - 1);
  CHECK(chi2 < boost::math::quantile(dist, 0.99));

  auto fit = correlation_function(run, 4);
  CHECK(!fit.used_lags.empty());
  double gamma = spectral_correlation_rate(s);
  CHECK(std::abs(fit.rate - gamma) <= 0.2 * gamma);

  auto met = metropolis_run(64, P, 20.0, short_run(43, 200000));
  double se = std::hypot(met.mean_spacing_se, run.mean_spacing_se);
  CHECK(std::abs(met.mean_spacing - run.mean_spacing) <= 3 * se);
  CHECK(std::abs(run.mean_spacing - mean_spacing(s)) <= 3 * run.mean_spacing_se);
}

TEST_CASE("nearest-neighbour kernel chain forgets its state in one step") {
  auto P = model(1, 0.1);
  auto s = solve_transfer(P, bulk_spacing_a(P), 5.0);
  auto Pm = kernel_transition_matrix(s);
  for (Eigen::Index i = 1; i < Pm.rows(); ++i) CHECK((Pm.row(i) - Pm.row(0)).cwiseAbs().maxCoeff() < 1e-12);
  SamplerOptions o;
  o.steps = 200000;
  o.burn_in = 100;
  o.thinning = 1;
  o.seed = 51;
  auto run = kernel_chain_run(s, o);
  auto f = correlation_function(run, 4);
  for (int l = 1; l <= 4; ++l) CHECK(std::abs(f.c[l]) <= 3 * f.se[l]);
}

TEST_CASE("tail frequencies respect the pressure bound") {
  auto P = model(2, 0.1);
  auto o = short_run(61);
  o.r_grid = {0.0, 0.5, 1.0, 2.0, 4.0};
  auto r = metropolis_run(64, P, 10.0, o);
  auto rows = tail_check(r);
  CHECK(rows[0].bound == 1.0);
  for (size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].ok);
    if (k > 0) CHECK(rows[k].bound < rows[k - 1].bound);
  }
  CHECK(rows[3].r == 2.0);
  CHECK(rows[3].freq <= std::exp(-2.0) + 3 * rows[3].se);
}

TEST_CASE("marginal distance") {
  auto P = model(2, 0.1);
  auto b = bulk_spacing_a(P);
  auto G = build_gaussian_model(P, b);

  // a histogram holding the exact Gaussian bin masses
  SampleRun exact;
  exact.beta = 40.0;
  const double sd = 1.0 / std::sqrt(40.0 * G.N(0, 0));
  auto cdf = [&](double z) { return 0.5 * std::erfc(-(z - b.a) / (sd * std::sqrt(2.0))); };
  const int bins = 400;
  for (int k = 0; k <= bins; ++k) exact.hist_edges.push_back(b.a - 10 * sd + 20 * sd * k / bins);
  for (int k = 0; k < bins; ++k) {
    double w = exact.hist_edges[k + 1] - exact.hist_edges[k];
    exact.hist_density.push_back((cdf(exact.hist_edges[k + 1]) - cdf(exact.hist_edges[k])) / w);
  }
  auto d = marginal_distance(exact, G);
  CHECK(d.distance < 1e-12);
  CHECK(d.distance_coarse < 1e-12);

  auto d20 = marginal_distance(solve_transfer(P, b, 20.0), G);
  auto d80 = marginal_distance(solve_transfer(P, b, 80.0), G);
  CHECK(d80.distance < d20.distance);
}
