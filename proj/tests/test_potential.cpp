#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "chainlab/potential.hpp"

using namespace chainlab;

namespace {

Potential tabulated_lj(double lo = 0.8, double hi = 6.0, int n = 4000) {
  std::vector<double> r, v;
  for (int i = 0; i < n; ++i) {
    double x = lo + (hi - lo) * i / (n - 1);
    r.push_back(x);
    v.push_back(std::pow(x, -12) - std::pow(x, -6));
  }
  return Potential::tabulated(r, v, 6.0);
}

}  // namespace

TEST_CASE("lennard-jones values and landmarks") {
  auto v = Potential::lennard_jones();
  CHECK(v(1.0) == 0.0);
  CHECK(v.d1(std::pow(2.0, 1.0 / 6.0)) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(v(2.0) == doctest::Approx(std::pow(2.0, -12) - std::pow(2.0, -6)).epsilon(1e-15));
  CHECK(v(2.0) == doctest::Approx(-0.0153808593750).epsilon(1e-12));

  double zmax = locate_zmax(v);
  CHECK(std::abs(zmax - std::pow(2.0, 1.0 / 6.0)) < 1e-12);
  CHECK(v(zmax) == doctest::Approx(-0.25).epsilon(1e-14));
  CHECK(p_star(v) == doctest::Approx(0.25 / std::pow(2.0, 1.0 / 6.0)).epsilon(1e-12));
  CHECK(p_star(v) == doctest::Approx(0.222724679).epsilon(1e-8));
}

TEST_CASE("scaling the potential scales p_star") {
  auto v = Potential::lennard_jones();
  auto v2 = Potential::lennard_jones(2.0);
  CHECK(p_star(v2) == doctest::Approx(2.0 * p_star(v)).epsilon(1e-12));
  CHECK(locate_zmax(v2) == doctest::Approx(locate_zmax(v)).epsilon(1e-12));
}

TEST_CASE("eval rejects bad input") {
  auto v = Potential::lennard_jones();
  CHECK_THROWS(v.eval(NAN, 0));
  CHECK_THROWS(v.eval(1.0, 3));
  CHECK_THROWS(v.eval(1.0, -1));
  auto t = tabulated_lj();
  CHECK(std::isinf(t(0.5)));
  CHECK_THROWS(t.eval(0.5, 1));
}

TEST_CASE("derivatives agree with central differences") {
  auto v = Potential::lennard_jones();
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> U(0.9, 3.0);
  for (int i = 0; i < 100; ++i) {
    double r = U(rng);
    double h = 1e-5 * r;
    double fd1 = (v(r + h) - v(r - h)) / (2 * h);
    double fd2 = (v.d1(r + h) - v.d1(r - h)) / (2 * h);
    CHECK(std::abs(fd1 - v.d1(r)) <= 1e-6 * std::max(std::abs(v.d1(r)), 1e-3));
    CHECK(std::abs(fd2 - v.d2(r)) <= 1e-6 * std::max(std::abs(v.d2(r)), 1e-3));
  }
}

TEST_CASE("monotone well shape on a fine grid") {
  auto v = Potential::lennard_jones();
  double zmax = locate_zmax(v);
  double prev = v(0.8);
  for (int i = 1; i <= 10000; ++i) {
    double r = 0.8 + (zmax - 0.8) * i / 10000.0;
    double cur = v(r);
    CHECK_MESSAGE(cur <= prev, "r = " << r);
    prev = cur;
  }
  prev = v(zmax);
  for (int i = 1; i <= 10000; ++i) {
    double r = zmax + 20.0 * i / 10000.0;
    double cur = v(r);
    CHECK(cur >= prev);
    CHECK(cur <= 0.0);
    prev = cur;
  }
}

TEST_CASE("tabulated copy reproduces the analytic landmarks") {
  auto v = Potential::lennard_jones();
  auto t = tabulated_lj();
  CHECK(std::abs(locate_zmax(t) - locate_zmax(v)) < 1e-8);
  CHECK(std::abs(p_star(t) - p_star(v)) < 1e-8);
  for (double r : {0.95, 1.1, 1.5, 2.3, 4.0}) {
    CHECK(t(r) == doctest::Approx(v(r)).epsilon(1e-8));
    CHECK(t.d2(r) == doctest::Approx(v.d2(r)).epsilon(1e-4));
  }
}

TEST_CASE("tabulated potential loads from a two-column file") {
  std::string path = "/tmp/chainlab_test_table.txt";
  {
    std::ofstream out(path);
    out << "# r v\n";
    for (int i = 0; i < 4000; ++i) {
      double x = 0.8 + 5.2 * i / 3999.0;
      out.precision(17);
      out << x << " " << std::pow(x, -12) - std::pow(x, -6) << "\n";
    }
  }
  auto t = Potential::load_table(path);
  CHECK(std::abs(locate_zmax(t) - std::pow(2.0, 1.0 / 6.0)) < 1e-8);
  CHECK_THROWS(Potential::load_table("/nonexistent/table.txt"));
  CHECK_THROWS(Potential::tabulated({1.0, 0.9, 1.2, 1.3}, {0, 0, 0, 0}));
}

TEST_CASE("z_min window and margins") {
  auto v = Potential::lennard_jones();
  double zmax = locate_zmax(v);
  double zmin = find_zmin(v);
  CHECK(zmin > 0.0);
  CHECK(zmin < zmax);
  CHECK(zmax < 2.0 * zmin);
  CHECK(zmin == doctest::Approx(0.9651964467).epsilon(1e-8));
  CHECK(growth_margin(v, zmin, zmax) >= 0.0);
  CHECK(curvature_margin(v, zmin, zmax) > 0.0);
  // growth must hold on the whole interval below z_min
  for (int i = 0; i <= 200; ++i) CHECK(growth_margin(v, 0.6 + (zmin - 0.6) * i / 200.0, zmax) >= 0.0);

  // independent summation of the curvature series at z_min
  double series = v.d2(zmax);
  for (int n = 2; n < 200000; ++n) series += double(n) * n * v.d2(n * zmin);
  CHECK(series == doctest::Approx(curvature_margin(v, zmin, zmax)).epsilon(1e-9));
}

TEST_CASE("a well without a repulsive core has no feasible z_min") {
  std::vector<double> r, vv;
  for (int i = 0; i < 400; ++i) {
    double x = 1.0 + 5.0 * i / 399.0;
    r.push_back(x);
    vv.push_back(-std::exp(-(x - 2.0) * (x - 2.0)));
  }
  auto t = Potential::tabulated(r, vv, 6.0);
  CHECK_THROWS(find_zmin(t));
  auto rep = validate(t, 0.0);
  CHECK_FALSE(rep.pass);
  CHECK_FALSE(rep.failure.empty());
}

TEST_CASE("validate reports the pressure bound") {
  auto v = Potential::lennard_jones();
  auto ok = validate(v, 0.1);
  CHECK(ok.pass);
  CHECK(ok.failure.empty());
  CHECK(ok.p_star == doctest::Approx(0.222724679).epsilon(1e-8));

  auto zero = validate(v, 0.0);
  CHECK(zero.pass);
  bool found = false;
  for (const auto& c : zero.checks)
    if (c.name.find("pressure") != std::string::npos) {
      found = true;
      CHECK(c.margin == doctest::Approx(0.222724679).epsilon(1e-8));
    }
  CHECK(found);

  auto bad = validate(v, 0.3);
  CHECK_FALSE(bad.pass);
  CHECK(bad.failure.find("pressure bound") != std::string::npos);
}
