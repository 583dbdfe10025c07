#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "chainlab/blocks.hpp"
#include "chainlab/gaussian.hpp"
#include "chainlab/transfer.hpp"

using namespace chainlab;

namespace {

ModelParams model(int m, double p) { return ModelParams::make(Potential::lennard_jones(), m, p); }

double maxabs(const Eigen::MatrixXd& M) { return M.cwiseAbs().maxCoeff(); }

// Block tridiagonal matrix with A on the diagonal, -B above and -B^T below.
Eigen::MatrixXd block_chain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int blocks) {
  const int d = static_cast<int>(A.rows());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(blocks * d, blocks * d);
  for (int b = 0; b < blocks; ++b) {
    H.block(b * d, b * d, d, d) = A;
    if (b + 1 < blocks) {
      H.block(b * d, (b + 1) * d, d, d) = -B;
      H.block((b + 1) * d, b * d, d, d) = -B.transpose();
    }
  }
  return H;
}

}  // namespace

TEST_CASE("hessian blocks for one-spacing blocks") {
  auto P = model(2, 0.1);
  auto b = bulk_spacing_a(P);
  auto hb = hessian_blocks(P, b);
  CHECK(hb.A(0, 0) == doctest::Approx(P.v.d2(b.a) + 2 * P.v.d2(2 * b.a)).epsilon(1e-14));
  CHECK(hb.B(0, 0) == doctest::Approx(-P.v.d2(2 * b.a)).epsilon(1e-14));
  auto hb0 = hessian_blocks(model(2, 0.0), b);
  CHECK(maxabs(hb.A - hb0.A) == 0.0);
  CHECK(maxabs(hb.B - hb0.B) == 0.0);
}

TEST_CASE("cross-block coupling matches finite differences") {
  auto P = model(3, 0.1);
  auto b = bulk_spacing_a(P);
  auto hb = hessian_blocks(P, b);
  const double h = 1e-4;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      auto W = [&](double si, double sj) {
        std::vector<double> x(2, b.a), y(2, b.a);
        x[i] += si;
        y[j] += sj;
        return block_W(x, y, P);
      };
      double fd = (W(h, h) - W(h, -h) - W(-h, h) + W(-h, -h)) / (4 * h * h);
      CHECK(-fd == doctest::Approx(hb.B(i, j)).epsilon(1e-6));
    }
}

TEST_CASE("scalar matrix Riccati equation") {
  Eigen::MatrixXd A(1, 1), B(1, 1), Z = Eigen::MatrixXd::Zero(1, 1);
  A << 3.0;
  B << 1.0;
  auto r = solve_riccati(A, B);
  CHECK(r.C(0, 0) == doctest::Approx((3 + std::sqrt(5.0)) / 2).epsilon(1e-13));
  auto ndm = matrices_NDM(A, B, r.C, Z);
  CHECK(ndm.N(0, 0) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-13));
  CHECK(maxabs(ndm.J) == 0.0);
  Eigen::MatrixXd Mh(2, 2);
  Mh << 1.5, -1.0, -1.0, 1.5;
  CHECK(maxabs(ndm.M_hat - Mh) < 1e-15);

  auto r0 = solve_riccati(A, Z);
  CHECK(r0.C(0, 0) == 3.0);
  CHECK(matrices_NDM(A, Z, r0.C, Z).N(0, 0) == 3.0);
}

TEST_CASE("matrix Riccati solution equals the semi-infinite Schur complement") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    Eigen::MatrixXd B(2, 2), A(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) B(i, j) = U(rng);
    Eigen::MatrixXd R(2, 2);
    R << U(rng), U(rng), U(rng), U(rng);
    A = R * R.transpose() + (2.5 * B.cwiseAbs().sum() + 1.0) * Eigen::MatrixXd::Identity(2, 2);
    auto r = solve_riccati(A, B);
    CHECK(r.residual < 1e-13);
    Eigen::MatrixXd H = block_chain(A, B, 40);
    Eigen::MatrixXd Hinv = H.inverse();
    Eigen::MatrixXd schur = Hinv.block(0, 0, 2, 2).inverse();
    // the first block sees the chain to its right: A - B S^-1 B^T with S the rest
    CHECK(maxabs(schur - r.C) < 1e-10);
  }
}

TEST_CASE("two-spacing blocks: reversal symmetry and positivity") {
  auto P = model(3, 0.1);
  auto G = build_gaussian_model(P, bulk_spacing_a(P));
  auto S = reversal_matrix(2);
  CHECK(maxabs(S * G.N * S - G.N) < 1e-12 * maxabs(G.N));
  CHECK(G.n_forms_gap < 1e-12 * maxabs(G.N));
  CHECK(G.M_hat_positive);
  CHECK(G.M_positive);
  CHECK(G.riccati_residual < 1e-12);
}

TEST_CASE("one-spacing blocks: closed forms") {
  auto P = model(2, 0.1);
  auto G = build_gaussian_model(P, bulk_spacing_a(P));
  double A = G.A(0, 0), B = G.B(0, 0);
  double C = (A + std::sqrt(A * A - 4 * B * B)) / 2;
  CHECK(G.C(0, 0) == doctest::Approx(C).epsilon(1e-13));
  CHECK(G.C(0, 0) == doctest::Approx(16.8009682491848).epsilon(1e-12));
  CHECK(G.N(0, 0) == doctest::Approx(16.80069766315).epsilon(1e-11));
  CHECK(G.det_C == G.C(0, 0));
  CHECK(maxabs(G.J) == 0.0);
}

TEST_CASE("harmonic free energy and principal eigenvalue") {
  GaussianModel G;
  G.d = 1;
  G.a = 1.0;
  G.C = Eigen::MatrixXd::Constant(1, 1, 2.0);
  G.N = G.C;
  G.det_C = 2.0;
  auto gp = gaussian_principal(1.0, G);
  CHECK(gp.lambda0 == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-15));

  auto P = model(2, 0.1);
  auto b = bulk_spacing_a(P);
  auto Gm = build_gaussian_model(P, b);
  CHECK(std::abs(gaussian_g(1e12, Gm) - b.e0) < 1e-10);

  for (double beta : {5.0, 40.0}) {
    auto gpm = gaussian_principal(beta, Gm);
    double k = gpm.precision(0, 0);
    auto f = [&](double x) {
      double e = gpm.norm_const * std::exp(-0.5 * k * (x - b.a) * (x - b.a));
      return e * e;
    };
    double l2 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, b.a - 3.0, b.a + 3.0, 10, 1e-14);
    CHECK(l2 == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("discretized harmonic kernel reproduces its eigenvalue") {
  for (int m : {2, 3}) {
    auto P = model(m, 0.1);
    auto b = bulk_spacing_a(P);
    auto G = build_gaussian_model(P, b);
    const double beta = 20.0;
    double sd = 1.0 / std::sqrt(beta * G.N.diagonal().minCoeff());
    std::vector<double> edges;
    int panels = m == 2 ? 16 : 6;
    for (int i = 0; i <= panels; ++i) edges.push_back(b.a - 12 * sd + 24 * sd * i / panels);
    auto grid = composite_gauss_legendre(edges, G.d, 8);
    auto K = assemble_G(G, grid, beta);
    auto e = principal_eig(K.M);
    double lam = e.lambda * std::exp(K.log_scale);
    CHECK(lam == doctest::Approx(gaussian_principal(beta, G).lambda0).epsilon(1e-6));
  }
}

TEST_CASE("harmonic marginals: three forms agree") {
  for (int m : {2, 3}) {
    auto P = model(m, 0.1);
    auto G = build_gaussian_model(P, bulk_spacing_a(P));
    const int d = G.d;
    auto Na = gaussian_marginal_precision(G, 1, 'a');
    auto Mb = gaussian_marginal_precision(G, 2, 'b');
    auto Mc = gaussian_marginal_precision(G, 2, 'c');
    CHECK(maxabs(Mb - Mc) < 1e-12 * maxabs(Mb));
    Eigen::MatrixXd M00 = Mb.topLeftCorner(d, d), M01 = Mb.topRightCorner(d, d);
    Eigen::MatrixXd M10 = Mb.bottomLeftCorner(d, d), M11 = Mb.bottomRightCorner(d, d);
    CHECK(maxabs(M00 - M01 * M11.inverse() * M10 - Na) < 1e-10 * maxabs(Na));
    CHECK(maxabs(M11 - M10 * M00.inverse() * M01 - Na) < 1e-10 * maxabs(Na));

    // n consecutive blocks of the long chain: covariance block inverse
    const int L = 60, n = 3;
    Eigen::MatrixXd H = block_chain(G.A, G.B, 2 * L + 1);
    Eigen::MatrixXd cov = H.inverse().block(L * d, L * d, n * d, n * d);
    auto Q = gaussian_marginal_precision(G, n, 'c');
    CHECK(maxabs(cov.inverse() - Q) < 1e-9 * maxabs(Q));
    CHECK(maxabs(Na.inverse() - H.inverse().block(L * d, L * d, d, d)) < 1e-12);
  }
}

TEST_CASE("single-spacing variance from the infinite Hessian") {
  auto P = model(2, 0.1);
  auto G = build_gaussian_model(P, bulk_spacing_a(P));
  CHECK(covariance_Hinv(G, 0, 0) == doctest::Approx(1.0 / G.N(0, 0)).epsilon(1e-12));
  CHECK(covariance_Hinv(G, 2, 5) == doctest::Approx(covariance_Hinv(G, 5, 2)).epsilon(1e-13));
  double r = G.B(0, 0) / G.C(0, 0);
  for (int n = 1; n <= 4; ++n)
    CHECK(covariance_Hinv(G, 0, n + 1) / covariance_Hinv(G, 0, n) == doctest::Approx(r).epsilon(1e-8));
  for (double beta : {20.0, 80.0}) {
    double var = 0.0, norm = 0.0;
    for (int i = -20000; i <= 20000; ++i) {
      double x = G.a + i * 5e-5;
      double rho = gaussian_marginal_density(G, beta, {x});
      norm += rho * 5e-5;
      var += rho * (x - G.a) * (x - G.a) * 5e-5;
    }
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(var == doctest::Approx(covariance_Hinv(G, 0, 0) / beta).epsilon(1e-8));
  }

  GaussianModel D;
  D.d = 1;
  D.A = Eigen::MatrixXd::Constant(1, 1, 4.0);
  D.B = Eigen::MatrixXd::Zero(1, 1);
  CHECK(covariance_Hinv(D, 0, 0, 10) == 0.25);
  CHECK(covariance_Hinv(D, 0, 1, 10) == 0.0);
}

TEST_CASE("harmonic free energy tracks the transfer free energy") {
  auto P = model(2, 0.1);
  auto b = bulk_spacing_a(P);
  auto G = build_gaussian_model(P, b);
  double prev = 1e300;
  for (double beta : {20.0, 40.0, 80.0}) {
    auto s = solve_transfer(P, b, beta);
    double scaled = beta * std::abs(gibbs_free_energy(s) - gaussian_g(beta, G));
    CHECK(scaled < prev);
    prev = scaled;
  }
}

TEST_CASE("long-range decay bound") {
  auto P = model(2, 0.1);
  auto r = brascamp_bound(P, 128);
  CHECK(r.eta > 0.0);
  const double s = P.v.s();
  for (size_t l = 1; l <= r.kappa.size(); ++l)
    CHECK(r.kappa[l - 1] <= P.v.alpha2() / (s * std::pow(P.z_min, s + 2) * std::pow(double(l), s)) * (1 + 1e-12));
  for (int i = 0; i < r.A_N.rows(); ++i) {
    double row = r.A_N(i, i);
    for (int j = 0; j < r.A_N.cols(); ++j)
      if (j != i) row -= std::abs(r.A_N(i, j));
    CHECK(row >= r.eta - 1e-12);
  }
  CHECK(r.fitted_exponent >= s - 0.5);
}
