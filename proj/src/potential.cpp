#include "chainlab/potential.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "chainlab/series.hpp"

namespace chainlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

struct SplineTable {
  std::vector<double> r, v;
  gsl_interp* interp = nullptr;
  double r_last = 0.0;
  // tail v(r) = c0 r^-s + c1 r^-(s+1) + c2 r^-(s+2), matched in value, v', v'' at r_last
  double c[3] = {0, 0, 0};
  double s = 6.0;

  SplineTable(std::vector<double> rr, std::vector<double> vv, double s_) : r(std::move(rr)), v(std::move(vv)), s(s_) {
    gsl_set_error_handler_off();
    interp = gsl_interp_alloc(gsl_interp_cspline, r.size());
    if (gsl_interp_init(interp, r.data(), v.data(), r.size()) != 0) throw std::invalid_argument("spline init failed");
    r_last = r.back();
    double f0 = v.back();
    double f1 = gsl_interp_eval_deriv(interp, r.data(), v.data(), r_last, nullptr);
    double f2 = gsl_interp_eval_deriv2(interp, r.data(), v.data(), r_last, nullptr);
    Eigen::Matrix3d M;
    Eigen::Vector3d rhs(f0, f1, f2);
    for (int k = 0; k < 3; ++k) {
      double q = s + k;
      M(0, k) = std::pow(r_last, -q);
      M(1, k) = -q * std::pow(r_last, -q - 1);
      M(2, k) = q * (q + 1) * std::pow(r_last, -q - 2);
    }
    Eigen::Vector3d sol = M.fullPivLu().solve(rhs);
    for (int k = 0; k < 3; ++k) c[k] = sol[k];
  }
  ~SplineTable() { gsl_interp_free(interp); }
  SplineTable(const SplineTable&) = delete;
  SplineTable& operator=(const SplineTable&) = delete;

  double eval(double x, int order) const {
    if (x <= r_last) {
      switch (order) {
        case 0: return gsl_interp_eval(interp, r.data(), v.data(), x, nullptr);
        case 1: return gsl_interp_eval_deriv(interp, r.data(), v.data(), x, nullptr);
        default: return gsl_interp_eval_deriv2(interp, r.data(), v.data(), x, nullptr);
      }
    }
    double out = 0.0;
    for (int k = 0; k < 3; ++k) {
      double q = s + k;
      if (order == 0) out += c[k] * std::pow(x, -q);
      else if (order == 1) out += -q * c[k] * std::pow(x, -q - 1);
      else out += q * (q + 1) * c[k] * std::pow(x, -q - 2);
    }
    return out;
  }
};

Potential Potential::lennard_jones(double scale) {
  if (!(scale > 0)) throw std::invalid_argument("lennard_jones: scale must be positive");
  Potential p;
  p.kind_ = PotentialKind::lennard_jones;
  p.scale_ = scale;
  p.r_hc_ = 0.0;
  p.s_ = 6.0;
  p.scan_alpha();
  return p;
}

Potential Potential::tabulated(std::vector<double> r, std::vector<double> v, double s) {
  if (r.size() != v.size() || r.size() < 4) throw std::invalid_argument("tabulated potential: need >= 4 (r, v) pairs");
  for (size_t i = 0; i < r.size(); ++i) {
    if (!std::isfinite(r[i]) || !std::isfinite(v[i])) throw std::invalid_argument("tabulated potential: non-finite entry");
    if (i > 0 && !(r[i] > r[i - 1])) throw std::invalid_argument("tabulated potential: r must be strictly increasing");
  }
  if (!(r.front() > 0)) throw std::invalid_argument("tabulated potential: r must be positive");
  if (!(s > 2)) throw std::invalid_argument("tabulated potential: decay exponent s must exceed 2");
  Potential p;
  p.kind_ = PotentialKind::tabulated;
  p.r_hc_ = r.front();
  p.s_ = s;
  p.table_ = std::make_shared<SplineTable>(std::move(r), std::move(v), s);
  p.scan_alpha();
  return p;
}

Potential Potential::load_table(const std::string& path, double s) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open potential table: " + path);
  std::vector<double> r, v;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double a, b;
    if (ls >> a >> b) {
      r.push_back(a);
      v.push_back(b);
    }
  }
  return tabulated(std::move(r), std::move(v), s);
}

double Potential::eval(double r, int order) const {
  if (!std::isfinite(r)) throw std::domain_error("potential eval: non-finite r");
  if (order < 0 || order > 2) throw std::invalid_argument("potential eval: order must be 0, 1 or 2");
  if (r <= r_hc_) {
    if (order == 0) return kInf;
    throw std::domain_error("potential eval: derivative inside hard core");
  }
  if (kind_ == PotentialKind::lennard_jones) {
    double i2 = 1.0 / (r * r);
    double i6 = i2 * i2 * i2;
    switch (order) {
      case 0: return scale_ * (i6 * i6 - i6);
      case 1: return scale_ * (-12.0 * i6 * i6 + 6.0 * i6) / r;
      default: return scale_ * (156.0 * i6 * i6 - 42.0 * i6) * i2;
    }
  }
  return table_->eval(r, order);
}

std::string Potential::describe() const {
  std::ostringstream os;
  if (kind_ == PotentialKind::lennard_jones) os << "lennard_jones(scale=" << scale_ << ")";
  else os << "tabulated(" << table_->r.size() << " nodes, r in [" << table_->r.front() << ", " << table_->r_last << "])";
  return os.str();
}

void Potential::scan_alpha() {
  double lo = std::max(r_hc_ * (1 + 1e-9), 1e-3);
  if (kind_ == PotentialKind::lennard_jones) lo = 0.5;
  const int n = 40000;
  double hi = 1e6;
  double a1 = 0.0, a2 = 0.0;
  for (int i = 0; i <= n; ++i) {
    double r = lo * std::pow(hi / lo, static_cast<double>(i) / n);
    a1 = std::max(a1, -eval(r, 0) * std::pow(r, s_));
    a2 = std::max(a2, -eval(r, 2) * std::pow(r, s_ + 2));
  }
  alpha1_ = a1 > 0 ? a1 : 1e-300;
  alpha2_ = a2 > 0 ? a2 : 1e-300;
}

double locate_zmax(const Potential& v) {
  double lo = v.r_hc() > 0 ? v.r_hc() : 1e-3;
  const double R = 1e3;
  const int n = 20000;
  double prev = lo * std::pow(R / lo, 1.0 / n);
  double fprev = v.d1(prev);
  for (int i = 2; i <= n; ++i) {
    double r = lo * std::pow(R / lo, static_cast<double>(i) / n);
    double f = v.d1(r);
    if (fprev < 0 && f >= 0) {
      boost::uintmax_t it = 200;
      auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-15 * std::abs(a); };
      auto br = boost::math::tools::toms748_solve([&](double x) { return v.d1(x); }, prev, r, fprev, f, tol, it);
      double z = 0.5 * (br.first + br.second);
      if (!(v.d2(z) > 0)) throw std::runtime_error("locate_zmax: stationary point is not a strict minimum");
      return z;
    }
    prev = r;
    fprev = f;
  }
  throw std::runtime_error("locate_zmax: no bracket for the minimizer found");
}

double p_star(const Potential& v) {
  double z = locate_zmax(v);
  return std::abs(v(z)) / z;
}

double growth_margin(const Potential& v, double z, double zmax) {
  // sum_{n>=2} (n z)^-s = z^-s (zeta(s) - 1)
  double zeta_m1 = std::riemann_zeta(v.s()) - 1.0;
  return v(z) + v(zmax) - 2.0 * v.alpha1() * std::pow(z, -v.s()) * zeta_m1;
}

double curvature_margin(const Potential& v, double z, double zmax) {
  double s = v.s();
  double zz = std::pow(z, -s - 2);
  auto sum = certified_sum([&](long n) { return double(n) * n * v.d2(n * z); }, 2,
                           [&](long N) { return v.alpha2() * zz * power_tail(N, s); });
  return v.d2(zmax) + sum.value;
}

double find_zmin(const Potential& v) {
  double zmax = locate_zmax(v);
  double lo = v.r_hc() > 0 ? v.r_hc() * (1 + 1e-9) : 0.5 * zmax;
  if (!(growth_margin(v, lo, zmax) > 0)) throw std::runtime_error("find_zmin: growth inequality fails at the hard core");
  // first sign change of the growth margin scanning upward from the core
  const int n = 4000;
  double a = lo, b = zmax;
  bool found = false;
  for (int i = 1; i <= n; ++i) {
    double z = lo + (zmax - lo) * i / n;
    if (!(growth_margin(v, z, zmax) > 0)) {
      b = z;
      found = true;
      break;
    }
    a = z;
  }
  if (!found) throw std::runtime_error("find_zmin: growth inequality never fails below z_max");
  for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
    double c = 0.5 * (a + b);
    if (growth_margin(v, c, zmax) > 0) a = c;
    else b = c;
  }
  double z = a;
  if (!(curvature_margin(v, z, zmax) > 0)) {
    // move down to the largest point where the curvature series is still positive
    double lo2 = lo, hi2 = z;
    bool ok = false;
    for (int i = 1; i <= n; ++i) {
      double t = z - (z - lo) * i / n;
      if (curvature_margin(v, t, zmax) > 0) {
        lo2 = t;
        ok = true;
        break;
      }
      hi2 = t;
    }
    if (!ok) throw std::runtime_error("find_zmin: curvature series inequality fails for every candidate z_min");
    for (int it = 0; it < 200 && hi2 - lo2 > 1e-15 * hi2; ++it) {
      double c = 0.5 * (lo2 + hi2);
      if (curvature_margin(v, c, zmax) > 0) lo2 = c;
      else hi2 = c;
    }
    z = lo2;
  }
  if (!(zmax < 2 * z)) throw std::runtime_error("find_zmin: z_max < 2 z_min violated");
  return z;
}

AssumptionReport validate(const Potential& v, double p) {
  AssumptionReport rep;
  rep.p = p;
  auto add = [&](std::string name, bool pass, double margin) {
    rep.checks.push_back({std::move(name), pass, margin});
    if (!pass && rep.failure.empty()) rep.failure = rep.checks.back().name;
  };
  double zmax = 0.0;
  try {
    zmax = locate_zmax(v);
  } catch (const std::exception& e) {
    add("potential well: z_max", false, 0.0);
    rep.pass = false;
    return rep;
  }
  rep.z_max = zmax;
  rep.p_star = std::abs(v(zmax)) / zmax;

  const int n = 10000;
  double lo = v.r_hc() > 0 ? v.r_hc() * (1 + 1e-6) : 0.5 * zmax;
  bool mono = v(zmax) < 0;
  double prev = v(lo);
  for (int i = 1; i <= n; ++i) {
    double r = lo + (zmax - lo) * i / n;
    double f = v(r);
    if (f > prev) mono = false;
    prev = f;
  }
  double far = 50 * zmax;
  prev = v(zmax);
  for (int i = 1; i <= n; ++i) {
    double r = zmax + (far - zmax) * i / n;
    double f = v(r);
    if (f < prev || f > 0) mono = false;
    prev = f;
  }
  add("potential well: shape of v", mono, -v(zmax));

  double gmin = std::numeric_limits<double>::infinity();
  double g2min = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    double r = lo * std::pow(1e4 / lo, double(i) / n);
    gmin = std::min(gmin, v(r) + v.alpha1() * std::pow(r, -v.s()));
    g2min = std::min(g2min, (v.d2(r) + v.alpha2() * std::pow(r, -v.s() - 2)) * std::pow(r, v.s() + 2));
  }
  double zmin = 0.0;
  std::string zmin_err;
  try {
    zmin = find_zmin(v);
  } catch (const std::exception& e) {
    zmin_err = e.what();
  }
  rep.z_min = zmin;
  bool have_zmin = zmin_err.empty();
  add("potential growth: v below z_min", gmin >= -1e-12 && have_zmin,
      have_zmin ? std::min(gmin, growth_margin(v, zmin, zmax)) : gmin);

  bool shape2 = have_zmin;
  if (have_zmin) {
    double prev2 = v.d2(zmin);
    for (int i = 1; i <= n; ++i) {
      double r = zmin + (zmax - zmin) * i / n;
      double f = v.d2(r);
      if (f > prev2) shape2 = false;
      prev2 = f;
    }
    prev2 = v.d2(2 * zmin);
    for (int i = 1; i <= n; ++i) {
      double r = 2 * zmin + (far - 2 * zmin) * i / n;
      double f = v.d2(r);
      if (f < prev2 || f > 0) shape2 = false;
      prev2 = f;
    }
  }
  add("curvature shape: v'' beyond 2 z_min", shape2, have_zmin ? -v.d2(2 * zmin) : 0.0);

  double cm = have_zmin ? curvature_margin(v, zmin, zmax) : 0.0;
  add("curvature growth: v'' margin", g2min >= -1e-9 && have_zmin && cm > 0, have_zmin ? cm : g2min);
  add("window r_hc < z_min < z_max < 2 z_min", have_zmin && v.r_hc() < zmin && zmin < zmax && zmax < 2 * zmin,
      have_zmin ? 2 * zmin - zmax : 0.0);
  add("pressure bound: 0 <= p < p*", p >= 0 && p < rep.p_star, rep.p_star - p);

  rep.pass = rep.failure.empty();
  return rep;
}

}  // namespace chainlab
