#include "chainlab/acceptance.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "chainlab/gaussian.hpp"
#include "chainlab/sampler.hpp"
#include "chainlab/surface.hpp"
#include "chainlab/transfer.hpp"

namespace chainlab {

ModelParams canonical_model(int m) { return ModelParams::make(Potential::lennard_jones(), m, 0.1); }

std::pair<double, double> independent_spacing_oracle(const ModelParams& P, double beta) {
  using gk = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double lo = std::max(0.6, P.v.r_hc());
  auto weight = [&](double z) { return std::exp(-beta * (P.v(z) + P.p * z)); };
  auto integral = [&](auto&& f) {
    double err = 0.0;
    double a = gk::integrate(f, lo, 3.0, 15, 1e-15, &err);
    double b = gk::integrate(f, 3.0, std::numeric_limits<double>::infinity(), 15, 1e-15, &err);
    return a + b;
  };
  double Z = integral(weight);
  double Z1 = integral([&](double z) { return z * weight(z); });
  return {-std::log(Z) / beta, Z1 / Z};
}

std::vector<double> nested_quadrature_logQ(const ModelParams& P, double beta, int N_max) {
  if (P.range() != 2) throw std::invalid_argument("nested_quadrature_logQ: range 2 only");
  if (N_max < 2) throw std::invalid_argument("nested_quadrature_logQ: N_max >= 2");
  using rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  const auto& xa = rule::abscissa();
  const auto& wa = rule::weights();
  // fine uniform panels across the well, geometric panels into the pressure tail
  std::vector<double> edges;
  for (double x = 0.75; x < 2.0 - 1e-12; x += 0.05) edges.push_back(x);
  double x = 2.0, w = 0.1;
  const double top = P.z_max + 40.0 / (beta * P.p);
  while (x < top) {
    edges.push_back(x);
    x += w;
    w *= 1.25;
  }
  edges.push_back(top);
  std::vector<double> z, wt;
  for (size_t k = 0; k + 1 < edges.size(); ++k) {
    double c = 0.5 * (edges[k] + edges[k + 1]), h = 0.5 * (edges[k + 1] - edges[k]);
    for (size_t i = 0; i < xa.size(); ++i) {
      z.push_back(c + h * xa[i]);
      wt.push_back(h * wa[i]);
      if (xa[i] != 0.0) {
        z.push_back(c - h * xa[i]);
        wt.push_back(h * wa[i]);
      }
    }
  }
  const size_t n = z.size();
  std::vector<double> site(n);
  for (size_t i = 0; i < n; ++i) site[i] = std::exp(-beta * (P.p * z[i] + P.v(z[i])));
  std::vector<double> F = site, G(n);
  double logscale = 0.0;
  std::vector<double> out;
  for (int N = 2;; ++N) {
    double q = 0.0;
    for (size_t i = 0; i < n; ++i) q += wt[i] * F[i];
    out.push_back(std::log(q) + logscale);
    if (N == N_max) break;
    for (size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (size_t i = 0; i < n; ++i) s += wt[i] * F[i] * std::exp(-beta * P.v(z[i] + z[j]));
      G[j] = site[j] * s;
    }
    double mx = *std::max_element(G.begin(), G.end());
    for (size_t j = 0; j < n; ++j) F[j] = G[j] / mx;
    logscale += std::log(mx);
  }
  return out;
}

namespace {

using clock_type = std::chrono::steady_clock;

std::string fmtd(double x) { return fmt::format("{:.4g}", x); }

bool strictly_decreasing(const std::vector<double>& v) {
  for (size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmtd(v[i]);
  return s + "]";
}

CriterionResult c1() {
  CriterionResult r{1, "m=1 closed-form oracle at beta=5", false, {}, 0.0, 0.0};
  ModelParams P = canonical_model(1);
  BulkConstants bulk = bulk_spacing_a(P);
  const double beta = 5.0;
  TransferSolution s = solve_transfer(P, bulk, beta);
  double g = gibbs_free_energy(s), ell = mean_spacing(s);
  auto [g_ref, ell_ref] = independent_spacing_oracle(P, beta);
  SamplerOptions opt;
  opt.steps = 200000;
  opt.burn_in = 20000;
  opt.seed = 11;
  SampleRun run = metropolis_run(64, P, beta, opt);
  double dz = std::abs(run.mean_spacing - ell_ref) / run.mean_spacing_se;
  r.pass = std::abs(g - g_ref) < 1e-8 && std::abs(ell - ell_ref) < 1e-8 && dz <= 3.0;
  r.detail = fmt::format("|g-g_ref|={:.3g} |l-l_ref|={:.3g} sampler {:.6g}+-{:.2g} ({:.2f} SE)", std::abs(g - g_ref),
                         std::abs(ell - ell_ref), run.mean_spacing, run.mean_spacing_se, dz);
  return r;
}

CriterionResult c2() {
  CriterionResult r{2, "bulk periodicity of the N=200 minimizer", false, {}, 0.0, 0.0};
  ModelParams P = canonical_model();
  BulkConstants bulk = bulk_spacing_a(P);
  GroundStateResult gs = minimize_EN(200, P);
  auto [lo, hi] = std::minmax_element(gs.spacings.begin(), gs.spacings.end());
  double dev = std::abs(gs.spacings[99] - bulk.a);
  r.pass = gs.converged && *lo >= P.z_min && *hi <= P.z_max && dev < 1e-5;
  r.detail = fmt::format("spacings in [{:.6f}, {:.6f}] within [{:.6f}, {:.6f}], |z_100-a|={:.3g}", *lo, *hi, P.z_min,
                         P.z_max, dev);
  return r;
}

CriterionResult c3() {
  CriterionResult r{3, "surface energy from E_N - N e0 and from min E_surf", false, {}, 0.0, 0.0};
  ModelParams P = canonical_model();
  BulkConstants bulk = bulk_spacing_a(P);
  GroundStateResult gs = minimize_EN(400, P);
  double excess = gs.energy - 400 * bulk.e0;
  SurfaceResult sr = minimize_Esurf(100, P, bulk);
  double diff = std::abs(excess - sr.e_surf);
  r.pass = diff < 1e-6;
  r.detail = fmt::format("E_400-400e0={:.12g} e_surf={:.12g} diff={:.3g}", excess, sr.e_surf, diff);
  return r;
}

CriterionResult c4() {
  CriterionResult r{4, "zero-temperature limits of g and g_surf", false, {}, 0.0, 0.0};
  ModelParams P = canonical_model();
  BulkConstants bulk = bulk_spacing_a(P);
  double es = e_surf(P, bulk);
  std::vector<double> betas{10, 20, 40, 80}, dg, ds, Cfit;
  for (double b : betas) {
    TransferSolution s = solve_transfer(P, bulk, b);
    dg.push_back(std::abs(gibbs_free_energy(s) - bulk.e0));
    ds.push_back(std::abs(g_surf(s) - es));
    Cfit.push_back(dg.back() * b / std::log(b));
  }
  double cmin = *std::min_element(Cfit.begin() + 1, Cfit.end());
  double cmax = *std::max_element(Cfit.begin() + 1, Cfit.end());
  double cmid = 0.5 * (cmin + cmax);
  bool g_ok = strictly_decreasing(dg) && (cmax - cmin) <= 0.4 * cmid;
  bool s_ok = strictly_decreasing(ds) && ds.back() < 0.1 * std::abs(es);
  r.pass = g_ok && s_ok;
  r.detail = fmt::format("|g-e0|={} C={} |g_surf-e_surf|={} (need < {:.4g} at beta=80)", list(dg), list(Cfit),
                         list(ds), 0.1 * std::abs(es));
  return r;
}

CriterionResult c5() {
  CriterionResult r{5, "harmonic free energy", false, {}, 0.0, 0.0};
  ModelParams P = canonical_model();
  BulkConstants bulk = bulk_spacing_a(P);
  GaussianModel G = build_gaussian_model(P, bulk);
  std::vector<double> dev;
  for (double b : {20.0, 40.0, 80.0}) {
    TransferSolution s = solve_transfer(P, bulk, b);
    dev.push_back(b * std::abs(gibbs_free_energy(s) - gaussian_g(b, G)));
  }
  r.pass = strictly_decreasing(dev) && dev.back() < 0.05;
  r.detail = "beta|g-g_gauss|=" + list(dev);
  return r;
}

CriterionResult c6() {
  CriterionResult r{6, "Gaussian one-block marginal", false, {}, 0.0, 0.0};
  ModelParams P = canonical_model();
  BulkConstants bulk = bulk_spacing_a(P);
  GaussianModel G = build_gaussian_model(P, bulk);
  std::vector<double> dist;
  for (double b : {20.0, 40.0, 80.0}) dist.push_back(marginal_distance(solve_transfer(P, bulk, b), G).distance);
  r.pass = strictly_decreasing(dist) && dist.back() < 0.05;
  r.detail = "L1=" + list(dist);
  return r;
}

CriterionResult c7() {
  CriterionResult r{7, "spectral vs sampled correlation decay at beta=20", false, {}, 0.0, 0.0};
  ModelParams P = canonical_model();
  BulkConstants bulk = bulk_spacing_a(P);
  const double beta = 20.0;
  TransferSolution s = solve_transfer(P, bulk, beta);
  double gamma = spectral_correlation_rate(s) / s.d;
  SamplerOptions opt;
  opt.seed = 7;
  SampleRun run = metropolis_run(256, P, beta, opt);
  CorrelationFit f = correlation_function(run, 8);
  double rel = std::abs(f.rate - gamma) / gamma;
  r.pass = std::isfinite(f.rate) && rel < 0.2;
  std::string lags;
  for (int l : f.used_lags) lags += (lags.empty() ? "" : ",") + std::to_string(l);
  r.detail = fmt::format("fitted {:.4g} (lags {}) spectral {:.4g} rel {:.3g}", f.rate, lags, gamma, rel);
  return r;
}

CriterionResult c8() {
  CriterionResult r{8, "tail inequality at beta=10", false, {}, 0.0, 0.0};
  ModelParams P = canonical_model();
  SamplerOptions opt;
  opt.seed = 8;
  SampleRun run = metropolis_run(256, P, 10.0, opt);
  r.pass = true;
  for (const TailRow& t : tail_check(run)) {
    r.pass = r.pass && t.ok;
    r.detail += fmt::format("r={:g}: {:.4g}+-{:.2g} <= {:.4g}; ", t.r, t.freq, t.se, t.bound);
  }
  return r;
}

CriterionResult c9() {
  CriterionResult r{9, "Riccati and matrix identities", false, {}, 0.0, 0.0};
  ModelParams P = canonical_model();
  BulkConstants bulk = bulk_spacing_a(P);
  GaussianModel G = build_gaussian_model(P, bulk);
  const double beta = 20.0;
  TransferSolution s = solve_transfer(P, bulk, beta);
  ValueFunction vf = value_iteration_u(P, bulk);
  FreeEnergyPair fe = gibbs_free_energy_both(s, vf);
  double rel = std::abs(std::expm1(fe.log_lambda0_K - fe.log_lambda0_T - beta * s.d * bulk.e0));
  r.pass = G.riccati_residual < 1e-12 && G.n_forms_gap < 1e-12 && G.M_hat_positive && rel < 1e-8;
  r.detail = fmt::format("residual={:.3g} |N-N'|={:.3g} Mhat chol={} Lambda0 relation rel={:.3g}", G.riccati_residual,
                         G.n_forms_gap, G.M_hat_positive ? "ok" : "failed", rel);
  return r;
}

CriterionResult c10() {
  CriterionResult r{10, "covariance decay bound", false, {}, 0.0, 0.0};
  ModelParams P = canonical_model();
  BrascampReport br = brascamp_bound(P, 128);
  r.pass = br.eta > 0 && br.fitted_exponent >= 5.5;
  r.detail = fmt::format("rho={:.5g} eta={:.5g} exponent={:.4g}", br.rho, br.eta, br.fitted_exponent);
  return r;
}

CriterionResult c11() {
  CriterionResult r{11, "Bellman fixed point and normalized block energy", false, {}, 0.0, 0.0};
  ModelParams P = canonical_model();
  BulkConstants bulk = bulk_spacing_a(P);
  ValueFunction vf = value_iteration_u(P, bulk);
  HhatScan hs = scan_Hhat(vf, P, 1);
  // interpolation error bound h^2 max|u''| / 8 for each of the two interpolated terms
  double curv = 0.0;
  for (int i = 1; i + 1 < vf.n; ++i)
    curv = std::max(curv, std::abs(vf.u_values[i + 1] - 2 * vf.u_values[i] + vf.u_values[i - 1]));
  double tol = std::max(2.0 * curv / 8.0, 1e-12);
  r.pass = vf.residual < 1e-10 && std::abs(hs.at_aa) <= 1e-8 && hs.min_value >= -1e-8 && hs.max_asymmetry <= tol;
  r.detail = fmt::format("residual={:.3g} H(a,a)={:.3g} min H={:.3g} asymmetry={:.3g} (tol {:.3g})", vf.residual,
                         hs.at_aa, hs.min_value, hs.max_asymmetry, tol);
  return r;
}

CriterionResult c12() {
  CriterionResult r{12, "rate function vs transfer marginal", false, {}, 0.0, 0.0};
  ModelParams P = canonical_model();
  BulkConstants bulk = bulk_spacing_a(P);
  ValueFunction vf = value_iteration_u(P, bulk);
  std::vector<std::vector<double>> cand;
  for (size_t i = 0; i < vf.size(); ++i)
    if (vf.w_values[i] >= 0.01) cand.push_back(vf.point(i));
  if (cand.size() < 5) {
    r.detail = "fewer than five grid points with w >= 0.01";
    return r;
  }
  std::vector<std::vector<double>> pts;
  for (int k = 0; k < 5; ++k) pts.push_back(cand[k * (cand.size() - 1) / 4]);
  auto worst = [&](double beta) {
    double m = 0.0;
    for (const LdpRow& row : ldp_rate_check(solve_transfer(P, bulk, beta), vf, pts))
      m = std::max(m, std::abs(row.rate - row.w) / row.w);
    return m;
  };
  double d20 = worst(20.0), d40 = worst(40.0);
  r.pass = d40 < 0.15 && d40 < d20;
  std::string xs;
  for (const auto& x : pts) xs += (xs.empty() ? "" : ",") + fmt::format("{:.4f}", x[0]);
  r.detail = fmt::format("x={{{}}} max rel discrepancy beta=20: {:.3g}, beta=40: {:.3g}", xs, d20, d40);
  return r;
}

CriterionResult c13() {
  CriterionResult r{13, "nested-quadrature Gibbs oracle at beta=2", false, {}, 0.0, 0.0};
  ModelParams P = canonical_model();
  BulkConstants bulk = bulk_spacing_a(P);
  const double beta = 2.0;
  TransferSolution s = solve_transfer(P, bulk, beta);
  std::vector<double> logQ = nested_quadrature_logQ(P, beta, 6);
  double g_ref = -(logQ[4] - logQ[3]) / beta;
  double gs_ref = -logQ[4] / beta - 6 * g_ref;
  double g = gibbs_free_energy(s), gs = g_surf(s);
  r.pass = std::abs(g - g_ref) < 1e-4 && std::abs(gs - gs_ref) < 1e-4;
  r.detail = fmt::format("g={:.10g} oracle {:.10g}; g_surf={:.10g} oracle {:.10g}", g, g_ref, gs, gs_ref);
  return r;
}

}  // namespace

std::vector<int> all_criteria() { return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13}; }

CriterionResult criterion(int id) {
  static const double limits[] = {0, 10, 5, 30, 60, 60, 60, 180, 120, 5, 5, 30, 60, 60};
  if (id < 1 || id > 13) throw std::invalid_argument("criterion id must be 1..13");
  auto t0 = clock_type::now();
  CriterionResult r;
  try {
    switch (id) {
      case 1: r = c1(); break;
      case 2: r = c2(); break;
      case 3: r = c3(); break;
      case 4: r = c4(); break;
      case 5: r = c5(); break;
      case 6: r = c6(); break;
      case 7: r = c7(); break;
      case 8: r = c8(); break;
      case 9: r = c9(); break;
      case 10: r = c10(); break;
      case 11: r = c11(); break;
      case 12: r = c12(); break;
      default: r = c13(); break;
    }
  } catch (const std::exception& e) {
    r.id = id;
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
  r.time_limit = limits[id];
  if (r.seconds > r.time_limit) {
    r.pass = false;
    r.detail += fmt::format(" [runtime {:.1f}s over {:g}s]", r.seconds, r.time_limit);
  }
  return r;
}

std::string criterion_line(const CriterionResult& r) {
  return fmt::format("{} criterion {:2d} {}: {} ({:.1f}s)", r.pass ? "PASS" : "FAIL", r.id, r.name, r.detail,
                     r.seconds);
}

std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids,
                                            const std::function<void(const CriterionResult&)>& report) {
  std::vector<CriterionResult> out;
  for (int id : ids) {
    out.push_back(criterion(id));
    if (report) report(out.back());
  }
  return out;
}

}  // namespace chainlab
