#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "chainlab/acceptance.hpp"
#include "chainlab/gaussian.hpp"
#include "chainlab/io.hpp"
#include "chainlab/sampler.hpp"
#include "chainlab/surface.hpp"
#include "chainlab/transfer.hpp"

using namespace chainlab;

namespace {

constexpr int kExitNumerical = 1;
constexpr int kExitConfig = 2;

Potential make_potential(const ExperimentConfig& c) {
  if (c.get_text("potential") == "table")
    return Potential::load_table(c.get_text("potential_table"), c.get_real("tail_exponent"));
  return Potential::lennard_jones(c.get_real("lj_scale"));
}

ModelParams make_model(const ExperimentConfig& c) {
  Potential v = make_potential(c);
  AssumptionReport rep = validate(v, c.get_real("p"));
  if (!rep.pass) throw ConfigError("p", "model assumptions fail: " + rep.failure);
  return ModelParams::make(v, static_cast<int>(c.get_int("m")), c.get_real("p"), static_cast<int>(c.get_int("M_cut")));
}

std::string out_path(const ExperimentConfig& c, const std::string& stem, const std::string& fmt) {
  return c.output_dir() + "/" + stem + "." + fmt;
}

void emit(const ExperimentConfig& c, const std::string& stem, const Table& t, const std::string& fmt,
          std::map<std::string, std::string> extra = {}) {
  std::map<std::string, std::string> meta = c.resolved();
  for (auto& [k, v] : extra) meta["result." + k] = v;
  std::string path = out_path(c, stem, fmt);
  emit_table(t, path, fmt, meta);
  std::printf("wrote %s\n", path.c_str());
}

GridOptions grid_options(const ExperimentConfig& c) {
  GridOptions g;
  g.nodes = static_cast<int>(c.get_int("grid_nodes"));
  return g;
}

int cmd_validate(const ExperimentConfig& c) {
  Potential v = make_potential(c);
  AssumptionReport rep = validate(v, c.get_real("p"));
  Table t{{"pass", "margin"}, {}};
  std::map<std::string, std::string> extra{{"z_min", format_double(rep.z_min)},
                                           {"z_max", format_double(rep.z_max)},
                                           {"p_star", format_double(rep.p_star)}};
  for (const auto& ch : rep.checks) {
    std::printf("%-42s %s margin %.6g\n", ch.name.c_str(), ch.pass ? "ok  " : "FAIL", ch.margin);
    t.rows.push_back({ch.pass ? 1.0 : 0.0, ch.margin});
    extra["clause." + std::to_string(t.rows.size())] = ch.name;
  }
  emit(c, "validate", t, c.get_text("format"), extra);
  if (!rep.pass) {
    std::fprintf(stderr, "p: model assumptions fail: %s\n", rep.failure.c_str());
    return kExitConfig;
  }
  return 0;
}

int cmd_ground_state(const ExperimentConfig& c) {
  ModelParams P = make_model(c);
  BulkConstants bulk = bulk_spacing_a(P);
  Table conv{{"N", "per_particle", "excess"}, {}};
  for (const auto& row : convergence_study_e0(P, c.get_ints("N_list")))
    conv.rows.push_back({double(row.N), row.per_particle, row.excess});
  std::map<std::string, std::string> extra{{"a", format_double(bulk.a)},
                                           {"e0", format_double(bulk.e0)},
                                           {"a0", format_double(bulk.a0)},
                                           {"truncation_bound", format_double(truncation_tail_bound(P))}};
  emit(c, "ground_state_convergence", conv, c.get_text("format"), extra);
  GroundStateResult gs = minimize_EN(static_cast<int>(c.get_int("N")), P);
  Table prof{{"j", "z"}, {}};
  for (size_t j = 0; j < gs.spacings.size(); ++j) prof.rows.push_back({double(j + 1), gs.spacings[j]});
  extra["E_N"] = format_double(gs.energy);
  extra["grad_norm"] = format_double(gs.grad_norm);
  emit(c, "ground_state_profile", prof, "csv", extra);
  std::printf("a = %.15g  e0 = %.15g\n", bulk.a, bulk.e0);
  return 0;
}

int cmd_surface(const ExperimentConfig& c) {
  ModelParams P = make_model(c);
  BulkConstants bulk = bulk_spacing_a(P);
  SurfaceResult sr = minimize_Esurf(static_cast<int>(c.get_int("K")), P, bulk);
  Table prof{{"j", "z", "z_minus_a"}, {}};
  for (size_t j = 0; j < sr.profile.size(); ++j) prof.rows.push_back({double(j + 1), sr.profile[j], sr.profile[j] - bulk.a});
  std::map<std::string, std::string> extra{{"e_surf", format_double(sr.e_surf)},
                                           {"min_Esurf", format_double(sr.min_Esurf)},
                                           {"a", format_double(bulk.a)},
                                           {"e0", format_double(bulk.e0)}};
  emit(c, "surface_profile", prof, c.get_text("format"), extra);
  std::printf("e_surf = %.15g  min E_surf = %.6g\n", sr.e_surf, sr.min_Esurf);
  return 0;
}

int cmd_spectrum(const ExperimentConfig& c, bool single) {
  ModelParams P = make_model(c);
  BulkConstants bulk = bulk_spacing_a(P);
  std::vector<double> betas = single ? std::vector<double>{c.get_real("beta")} : c.get_reals("betas");
  Table t{{"beta", "log_lambda0", "gap_ratio", "g", "g_surf", "ell", "gamma"}, {}};
  for (double beta : betas) {
    TransferSolution s = solve_transfer(P, bulk, beta, grid_options(c));
    t.rows.push_back({beta, s.spectrum.log_lambda0, s.spectrum.gap_ratio, gibbs_free_energy(s), g_surf(s), mean_spacing(s),
                      spectral_correlation_rate(s)});
    if (s.d == 1) {
      Table m{{"z", "weight", "rho"}, {}};
      std::vector<double> rho = marginal_density(s);
      for (size_t i = 0; i < rho.size(); ++i) m.rows.push_back({s.grid.nodes[i], s.grid.weights[i], rho[i]});
      emit(c, "marginal_beta" + format_double(beta), m, "csv");
    }
    std::printf("beta %-6g g %.12g  g_surf %.10g  ell %.10g  gap %.4g\n", beta, t.rows.back()[3], t.rows.back()[4],
                t.rows.back()[5], t.rows.back()[2]);
  }
  emit(c, "spectrum", t, c.get_text("format"));
  return 0;
}

int cmd_gaussian(const ExperimentConfig& c) {
  ModelParams P = make_model(c);
  BulkConstants bulk = bulk_spacing_a(P);
  GaussianModel G = build_gaussian_model(P, bulk);
  Table t{{"i", "j", "A", "B", "C", "N", "D", "J"}, {}};
  for (int i = 0; i < G.d; ++i)
    for (int j = 0; j < G.d; ++j) t.rows.push_back({double(i), double(j), G.A(i, j), G.B(i, j), G.C(i, j), G.N(i, j), G.D(i, j), G.J(i, j)});
  std::map<std::string, std::string> extra{{"det_C", format_double(G.det_C)},
                                           {"riccati_residual", format_double(G.riccati_residual)},
                                           {"N_forms_gap", format_double(G.n_forms_gap)},
                                           {"M_hat_positive", G.M_hat_positive ? "true" : "false"}};
  if (G.d == 1) extra["C"] = format_double(G.C(0, 0));
  Table gt{{"beta", "g_gauss"}, {}};
  for (double beta : c.get_reals("betas")) gt.rows.push_back({beta, gaussian_g(beta, G)});
  emit(c, "gaussian_matrices", t, c.get_text("format"), extra);
  emit(c, "gaussian_free_energy", gt, c.get_text("format"));
  std::printf("d = %d  det C = %.15g  residual %.3g\n", G.d, G.det_C, G.riccati_residual);
  return 0;
}

int cmd_sample(const ExperimentConfig& c) {
  ModelParams P = make_model(c);
  SamplerOptions opt;
  opt.steps = c.get_int("steps");
  opt.burn_in = c.get_int("burn_in");
  opt.thinning = static_cast<int>(c.get_int("thinning"));
  opt.seed = c.get_uint("seed");
  opt.chains = static_cast<int>(c.get_int("chains"));
  opt.max_lag = static_cast<int>(c.get_int("max_lag"));
  const double beta = c.get_real("beta");
  SampleRun run = metropolis_run(static_cast<int>(c.get_int("N")), P, beta, opt);
  CorrelationFit fit = correlation_function(run, opt.max_lag);
  Table summary{{"beta", "acceptance", "proposal_width", "mean_spacing", "mean_spacing_se", "center_mean", "center_se",
                 "corr_rate"},
                {{beta, run.acceptance, run.proposal_width, run.mean_spacing, run.mean_spacing_se, run.center_mean,
                  run.center_se, fit.rate}}};
  emit(c, "sample_summary", summary, "json", {{"samples", std::to_string(run.samples)}});
  Table hist{{"lo", "hi", "density"}, {}};
  for (size_t k = 0; k < run.hist_density.size(); ++k)
    hist.rows.push_back({run.hist_edges[k], run.hist_edges[k + 1], run.hist_density[k]});
  emit(c, "sample_histogram", hist, "csv", {{"outside", std::to_string(run.hist_outside)}});
  Table corr{{"lag", "c", "se"}, {}};
  for (size_t l = 0; l < run.corr.size(); ++l) corr.rows.push_back({double(l), run.corr[l], run.corr_se[l]});
  emit(c, "sample_correlation", corr, "csv");
  Table tails{{"r", "freq", "se", "bound", "ok"}, {}};
  for (const TailRow& r : tail_check(run)) tails.rows.push_back({r.r, r.freq, r.se, r.bound, r.ok ? 1.0 : 0.0});
  emit(c, "sample_tails", tails, "csv");
  std::printf("mean spacing %.8g +- %.2g  acceptance %.3f\n", run.mean_spacing, run.mean_spacing_se, run.acceptance);
  return 0;
}

int cmd_verify(const ExperimentConfig& c, const std::vector<int>& ids) {
  Table t{{"criterion", "pass", "seconds"}, {}};
  int failed = 0;
  std::map<std::string, std::string> extra;
  run_acceptance(ids.empty() ? all_criteria() : ids, [&](const CriterionResult& r) {
    std::printf("%s\n", criterion_line(r).c_str());
    std::fflush(stdout);
    t.rows.push_back({double(r.id), r.pass ? 1.0 : 0.0, r.seconds});
    extra["criterion." + std::to_string(r.id)] = r.detail;
    if (!r.pass) ++failed;
  });
  emit(c, "verify", t, c.get_text("format"), extra);
  return failed == 0 ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-temperature chain of particles with pair interactions: ground states, transfer operators, "
               "harmonic approximation and Monte Carlo checks."};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--set", sets, "override any configuration key, key=value (repeatable)");

  // Typed shortcuts for the most used keys; they land in the same override map.
  struct Flag {
    const char* name;
    const char* key;
    const char* help;
  };
  const Flag flags[] = {{"--m", "m", "interaction range, 0 = infinite"},
                        {"--p", "p", "pressure"},
                        {"--beta", "beta", "inverse temperature"},
                        {"--betas", "betas", "comma-separated beta schedule"},
                        {"--N", "N", "particles"},
                        {"--K", "K", "surface profile length"},
                        {"--nodes", "grid_nodes", "transfer grid nodes per dimension"},
                        {"--steps", "steps", "sampler sweeps"},
                        {"--burn-in", "burn_in", "sampler burn-in sweeps"},
                        {"--seed", "seed", "RNG seed"},
                        {"--chains", "chains", "independent chains"},
                        {"--format", "format", "json or csv"},
                        {"--output-dir", "output_dir", "output directory"}};
  std::map<std::string, std::string> flag_values;
  auto add_flags = [&](CLI::App* sub) {
    for (const Flag& f : flags) sub->add_option(f.name, flag_values[f.key], f.help);
  };

  std::vector<int> verify_ids;
  const char* names[] = {"validate", "ground-state", "surface", "spectrum", "gaussian", "sample", "verify"};
  const char* helps[] = {"check the potential and pressure against the model assumptions",
                         "bulk spacing, e0 and the finite-N minimizer",
                         "boundary-layer profile and surface energy",
                         "transfer-operator free energies, spacing and spectral gap over the beta schedule",
                         "harmonic block matrices and the Gaussian free energy",
                         "Metropolis sampling of the finite chain",
                         "run the acceptance criteria"};
  std::map<std::string, CLI::App*> subs;
  for (int i = 0; i < 7; ++i) {
    subs[names[i]] = app.add_subcommand(names[i], helps[i]);
    add_flags(subs[names[i]]);
  }
  subs["verify"]->add_option("--only", verify_ids, "criterion ids to run, e.g. 1,4,7")->delimiter(',');
  bool single_beta = false;
  subs["spectrum"]->add_flag("--single", single_beta, "use beta instead of the beta schedule");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  for (const auto& [k, v] : flag_values)
    if (!v.empty()) overrides[k] = v;
  for (const std::string& s : sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "--set: expected key=value, got '%s'\n", s.c_str());
      return kExitConfig;
    }
    overrides[s.substr(0, eq)] = s.substr(eq + 1);
  }

  try {
    ExperimentConfig cfg = ExperimentConfig::load(config_path, overrides);
    std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "validate") return cmd_validate(cfg);
    if (cmd == "ground-state") return cmd_ground_state(cfg);
    if (cmd == "surface") return cmd_surface(cfg);
    if (cmd == "spectrum") return cmd_spectrum(cfg, single_beta);
    if (cmd == "gaussian") return cmd_gaussian(cfg);
    if (cmd == "sample") return cmd_sample(cfg);
    return cmd_verify(cfg, verify_ids);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  }
}
