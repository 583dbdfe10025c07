#pragma once

#include <memory>
#include <string>
#include <vector>

namespace chainlab {

enum class PotentialKind { lennard_jones, tabulated };

struct SplineTable;

// Pair potential v(r). Lennard-Jones is v(r) = scale * (r^-12 - r^-6) with no
// hard core; the tabulated kind is a C2 cubic spline through (r, v) samples,
// +inf below the first sample and a fitted power-law tail past the last one.
class Potential {
 public:
  static Potential lennard_jones(double scale = 1.0);
  static Potential tabulated(std::vector<double> r, std::vector<double> v, double s = 6.0);
  static Potential load_table(const std::string& path, double s = 6.0);

  // order 0 returns +inf for r <= r_hc; derivatives throw there.
  double eval(double r, int order) const;
  double operator()(double r) const { return eval(r, 0); }
  double d1(double r) const { return eval(r, 1); }
  double d2(double r) const { return eval(r, 2); }

  PotentialKind kind() const { return kind_; }
  double r_hc() const { return r_hc_; }
  double s() const { return s_; }
  double alpha1() const { return alpha1_; }
  double alpha2() const { return alpha2_; }
  double scale() const { return scale_; }
  std::string describe() const;

  // Overrides for the growth constants (default: tightest values from a scan).
  void set_alpha(double a1, double a2) { alpha1_ = a1; alpha2_ = a2; }

 private:
  Potential() = default;
  void scan_alpha();

  PotentialKind kind_ = PotentialKind::lennard_jones;
  double r_hc_ = 0.0;
  double s_ = 6.0;
  double alpha1_ = 1.0;
  double alpha2_ = 1.0;
  double scale_ = 1.0;
  std::shared_ptr<const SplineTable> table_;
};

struct ClauseCheck {
  std::string name;
  bool pass = false;
  double margin = 0.0;
};

struct AssumptionReport {
  double z_min = 0.0;
  double z_max = 0.0;
  double p_star = 0.0;
  double p = 0.0;
  std::vector<ClauseCheck> checks;
  bool pass = false;
  std::string failure;  // first failing clause, empty on success
};

double locate_zmax(const Potential& v);
double p_star(const Potential& v);
// Largest z below z_max with the growth inequality holding on (r_hc, z] and the
// v'' series inequality holding at z. Throws if no such z exists.
double find_zmin(const Potential& v);
AssumptionReport validate(const Potential& v, double p);

// Margins used by find_zmin, exposed for tests and reports.
double growth_margin(const Potential& v, double z, double zmax);
double curvature_margin(const Potential& v, double z, double zmax);

}  // namespace chainlab
