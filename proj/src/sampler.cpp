#include "chainlab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <thread>

namespace chainlab {

std::mt19937_64 make_stream(uint64_t seed, uint64_t stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(stream),
                    static_cast<uint32_t>(stream >> 32), 0x9e3779b9u};
  return std::mt19937_64(seq);
}

double metropolis_accept(double energy_from, double energy_to, double beta) {
  if (!std::isfinite(energy_to)) return 0.0;
  return metropolis_accept_ratio(1.0, std::exp(-beta * (energy_to - energy_from)));
}

namespace {

// Per-batch sums for the estimators of SampleRun; one instance per chain.
struct Accumulator {
  int B, L, nr, bins;
  double hlo, hhi;
  std::vector<double> r_thresholds;
  struct Batch {
    double n = 0, s = 0;          // bulk spacings
    double cn = 0, cs = 0;        // center spacing
    std::vector<double> sx, sy, sxx, syy, sxy, cnt;
    std::vector<double> tail;
    double tail_n = 0;
  };
  std::vector<Batch> b;
  std::vector<double> hist;
  long outside = 0;

  Accumulator(int batches, int max_lag, const std::vector<double>& thr, int nbins, double lo, double hi)
      : B(batches), L(max_lag), nr(static_cast<int>(thr.size())), bins(nbins), hlo(lo), hhi(hi), r_thresholds(thr) {
    b.resize(B);
    for (auto& x : b) {
      for (auto* v : {&x.sx, &x.sy, &x.sxx, &x.syy, &x.sxy, &x.cnt}) v->assign(L + 1, 0.0);
      x.tail.assign(nr, 0.0);
    }
    hist.assign(bins, 0.0);
  }

  void add_hist(double z) {
    if (z < hlo || z >= hhi) {
      ++outside;
      return;
    }
    int k = static_cast<int>((z - hlo) / (hhi - hlo) * bins);
    hist[std::min(k, bins - 1)] += 1;
  }

  void add_tail(Batch& x, double z) {
    for (int k = 0; k < nr; ++k)
      if (z >= r_thresholds[k]) x.tail[k] += 1;
    x.tail_n += 1;
  }

  // A configuration of spacings: bulk window [lo, hi), tails over all spacings.
  void record_config(int batch, const std::vector<double>& z, int lo, int hi, int center) {
    Batch& x = b[batch];
    const int n = static_cast<int>(z.size());
    for (int i = lo; i < hi; ++i) {
      x.n += 1;
      x.s += z[i];
      add_hist(z[i]);
      for (int l = 0; l <= L && i + l < hi; ++l) {
        x.sx[l] += z[i];
        x.sy[l] += z[i + l];
        x.sxx[l] += z[i] * z[i];
        x.syy[l] += z[i + l] * z[i + l];
        x.sxy[l] += z[i] * z[i + l];
        x.cnt[l] += 1;
      }
    }
    for (int i = 0; i < n; ++i) add_tail(x, z[i]);
    x.cn += 1;
    x.cs += z[center];
  }

  // A time series: z[t] for t in a sliding window of length L+1, newest last.
  void record_series(int batch, const std::vector<double>& window, int filled) {
    Batch& x = b[batch];
    double z = window[L];
    x.n += 1;
    x.s += z;
    x.cn += 1;
    x.cs += z;
    add_hist(z);
    add_tail(x, z);
    for (int l = 0; l <= L && l < filled; ++l) {
      double zp = window[L - l];
      x.sx[l] += zp;
      x.sy[l] += z;
      x.sxx[l] += zp * zp;
      x.syy[l] += z * z;
      x.sxy[l] += zp * z;
      x.cnt[l] += 1;
    }
  }
};

double corr_from(double n, double sx, double sy, double sxx, double syy, double sxy) {
  double mx = sx / n, my = sy / n;
  double vx = sxx / n - mx * mx, vy = syy / n - my * my;
  if (!(vx > 0) || !(vy > 0)) return 0.0;
  return (sxy / n - mx * my) / std::sqrt(vx * vy);
}

// mean and batch-means standard error of per-batch values
std::pair<double, double> batch_stats(const std::vector<double>& v) {
  const double k = static_cast<double>(v.size());
  double m = std::accumulate(v.begin(), v.end(), 0.0) / k;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, k > 1 ? std::sqrt(ss / (k - 1) / k) : 0.0};
}

void finalize(SampleRun& run, const std::vector<Accumulator>& accs) {
  const Accumulator& a0 = accs.front();
  const int L = a0.L, nr = a0.nr;
  std::vector<const Accumulator::Batch*> batches;
  for (const auto& a : accs)
    for (const auto& x : a.b)
      if (x.n > 0) batches.push_back(&x);
  if (batches.size() < 2) throw std::runtime_error("sampler: too few samples for batch means");

  Accumulator::Batch tot;
  for (auto* v : {&tot.sx, &tot.sy, &tot.sxx, &tot.syy, &tot.sxy, &tot.cnt}) v->assign(L + 1, 0.0);
  tot.tail.assign(nr, 0.0);
  std::vector<double> mb, cb;
  std::vector<std::vector<double>> corr_b(L + 1), tail_b(nr);
  for (auto* x : batches) {
    tot.n += x->n;
    tot.s += x->s;
    tot.cn += x->cn;
    tot.cs += x->cs;
    tot.tail_n += x->tail_n;
    mb.push_back(x->s / x->n);
    cb.push_back(x->cs / x->cn);
    for (int l = 0; l <= L; ++l) {
      tot.sx[l] += x->sx[l];
      tot.sy[l] += x->sy[l];
      tot.sxx[l] += x->sxx[l];
      tot.syy[l] += x->syy[l];
      tot.sxy[l] += x->sxy[l];
      tot.cnt[l] += x->cnt[l];
      if (x->cnt[l] > 1)
        corr_b[l].push_back(corr_from(x->cnt[l], x->sx[l], x->sy[l], x->sxx[l], x->syy[l], x->sxy[l]));
    }
    for (int k = 0; k < nr; ++k) {
      tot.tail[k] += x->tail[k];
      tail_b[k].push_back(x->tail[k] / x->tail_n);
    }
  }
  run.mean_spacing = tot.s / tot.n;
  run.mean_spacing_se = batch_stats(mb).second;
  run.center_mean = tot.cs / tot.cn;
  run.center_se = batch_stats(cb).second;
  run.corr.assign(L + 1, 0.0);
  run.corr_se.assign(L + 1, 0.0);
  for (int l = 0; l <= L; ++l) {
    if (tot.cnt[l] > 1) run.corr[l] = corr_from(tot.cnt[l], tot.sx[l], tot.sy[l], tot.sxx[l], tot.syy[l], tot.sxy[l]);
    run.corr_se[l] = corr_b[l].size() > 1 ? batch_stats(corr_b[l]).second : std::numeric_limits<double>::infinity();
  }
  run.tail_freq.assign(nr, 0.0);
  run.tail_se.assign(nr, 0.0);
  for (int k = 0; k < nr; ++k) {
    run.tail_freq[k] = tot.tail[k] / tot.tail_n;
    run.tail_se[k] = batch_stats(tail_b[k]).second;
  }
  const int bins = a0.bins;
  std::vector<double> h(bins, 0.0);
  long outside = 0;
  for (const auto& a : accs) {
    for (int k = 0; k < bins; ++k) h[k] += a.hist[k];
    outside += a.outside;
  }
  double inside = std::accumulate(h.begin(), h.end(), 0.0);
  double bw = (a0.hhi - a0.hlo) / bins;
  run.hist_edges.resize(bins + 1);
  run.hist_density.resize(bins);
  for (int k = 0; k <= bins; ++k) run.hist_edges[k] = a0.hlo + k * bw;
  for (int k = 0; k < bins; ++k) run.hist_density[k] = inside > 0 ? h[k] / (inside * bw) : 0.0;
  run.hist_outside = outside;
}

void histogram_range(const SamplerOptions& opt, const ModelParams& P, double beta, double& lo, double& hi) {
  if (opt.hist_hi > opt.hist_lo) {
    lo = opt.hist_lo;
    hi = opt.hist_hi;
    return;
  }
  GridOptions g;
  lo = std::max(g.l0, P.v.r_hc());
  hi = P.z_max + g.tail / (beta * std::max(P.p, 1e-3));
}

void check_options(const SamplerOptions& opt) {
  if (opt.steps <= 0 || opt.burn_in < 0 || opt.thinning < 1) throw std::invalid_argument("sampler: bad step counts");
  if (opt.chains < 1 || opt.batches < 2 || opt.max_lag < 0 || opt.hist_bins < 1)
    throw std::invalid_argument("sampler: bad chain, batch, lag or bin counts");
  if (opt.steps / opt.thinning < opt.batches) throw std::invalid_argument("sampler: fewer samples than batches");
}

// Energy of all windows (length <= R) containing spacing j, with z_j replaced by zj.
double local_energy(const std::vector<double>& z, int j, double zj, const ModelParams& P) {
  const int n = static_cast<int>(z.size());
  const int R = P.range();
  double e = P.p * zj;
  double left = 0.0;
  for (int i = j; i >= 0 && i > j - R; --i) {
    if (i < j) left += z[i];
    double S = left + zj;
    for (int k = j;; ) {
      e += P.v(S);
      ++k;
      if (k >= n || k - i >= R) break;
      S += z[k];
    }
  }
  return e;
}

struct ChainOutcome {
  Accumulator acc;
  double acceptance = 0.0;
  double width = 0.0;
};

ChainOutcome metropolis_chain(int N, const ModelParams& P, double beta, double a, const SamplerOptions& opt,
                              uint64_t stream, double hlo, double hhi, const std::vector<double>& thr) {
  const int n = N - 1;
  std::mt19937_64 rng = make_stream(opt.seed, stream);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> z(n, a);
  double width = 0.3 / std::sqrt(beta * std::max(std::abs(P.v.d2(a)), 1.0));
  const double rhc = P.v.r_hc();

  long acc_count = 0, prop_count = 0;
  auto sweep = [&]() {
    for (int j = 0; j < n; ++j) {
      double zn = z[j] + width * gauss(rng);
      ++prop_count;
      if (!(zn > rhc)) continue;
      double e_old = local_energy(z, j, z[j], P);
      double e_new = local_energy(z, j, zn, P);
      double pa = metropolis_accept(e_old, e_new, beta);
      if (pa >= 1.0 || unif(rng) < pa) {
        z[j] = zn;
        ++acc_count;
      }
    }
  };

  const long tune_every = 50;
  for (long t = 1; t <= opt.burn_in; ++t) {
    sweep();
    if (t % tune_every == 0) {
      double rate = double(acc_count) / prop_count;
      width *= std::exp(2.0 * (rate - opt.target_acceptance));
      acc_count = prop_count = 0;
    }
  }
  acc_count = prop_count = 0;

  ChainOutcome out{Accumulator(opt.batches, opt.max_lag, thr, opt.hist_bins, hlo, hhi)};
  const long K = opt.steps / opt.thinning;
  const int lo = n / 4, hi = n - n / 4, center = n / 2;
  long k = 0;
  for (long t = 1; t <= opt.steps; ++t) {
    sweep();
    if (t % opt.thinning == 0 && k < K) {
      int batch = static_cast<int>(k * opt.batches / K);
      out.acc.record_config(batch, z, lo, hi, center);
      ++k;
    }
  }
  out.acceptance = prop_count > 0 ? double(acc_count) / prop_count : 0.0;
  out.width = width;
  return out;
}

template <class F>
std::vector<ChainOutcome> run_chains(int chains, F&& one) {
  std::vector<std::optional<ChainOutcome>> res(chains);
  std::vector<std::exception_ptr> err(chains);
  std::vector<std::thread> th;
  for (int c = 0; c < chains; ++c)
    th.emplace_back([&, c] {
      try {
        res[c].emplace(one(c));
      } catch (...) {
        err[c] = std::current_exception();
      }
    });
  for (auto& t : th) t.join();
  for (auto& e : err)
    if (e) std::rethrow_exception(e);
  std::vector<ChainOutcome> out;
  for (auto& r : res) out.push_back(std::move(*r));
  return out;
}

}  // namespace

SampleRun metropolis_run(int N, const ModelParams& P, double beta, const SamplerOptions& opt) {
  if (N < 3) throw std::invalid_argument("metropolis_run: N must be at least 3");
  if (!(beta > 0)) throw std::invalid_argument("metropolis_run: beta must be positive");
  check_options(opt);
  BulkConstants bulk = bulk_spacing_a(P);
  double hlo, hhi;
  histogram_range(opt, P, beta, hlo, hhi);
  std::vector<double> thr;
  for (double r : opt.r_grid) thr.push_back(P.z_max + r);

  auto outs = run_chains(opt.chains, [&](int c) {
    return metropolis_chain(N, P, beta, bulk.a, opt, static_cast<uint64_t>(c), hlo, hhi, thr);
  });

  SampleRun run;
  run.params = P;
  run.N = N;
  run.beta = beta;
  run.steps = opt.steps;
  run.burn_in = opt.burn_in;
  run.thinning = opt.thinning;
  run.seed = opt.seed;
  run.chains = opt.chains;
  run.source = 'M';
  run.samples = opt.chains * (opt.steps / opt.thinning);
  run.bulk_lo = (N - 1) / 4;
  run.bulk_hi = (N - 1) - (N - 1) / 4;
  run.r_grid = opt.r_grid;
  double acc = 0.0, wd = 0.0;
  std::vector<Accumulator> accs;
  for (auto& o : outs) {
    acc += o.acceptance;
    wd += o.width;
    accs.push_back(std::move(o.acc));
  }
  run.acceptance = acc / opt.chains;
  run.proposal_width = wd / opt.chains;
  if (!(run.acceptance >= 0.05))
    throw std::runtime_error("metropolis_run: acceptance " + std::to_string(run.acceptance) +
                             " below 0.05 after tuning the proposal width");
  finalize(run, accs);
  return run;
}

Eigen::MatrixXd kernel_transition_matrix(const TransferSolution& s) {
  const Eigen::MatrixXd& M = s.T.M;
  const Eigen::VectorXd& r = s.spectrum.phi_right;
  const Eigen::Index n = M.rows();
  Eigen::MatrixXd Pm(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double tot = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      double v = r[i] > 0 ? M(i, j) * std::max(r[j], 0.0) / (s.spectrum.lambda0 * r[i]) : 0.0;
      Pm(i, j) = v;
      tot += v;
    }
    // states where the eigenvector underflows are never reached; keep the row stochastic
    if (!(tot > 0)) {
      Pm.row(i).setZero();
      Pm(i, i) = 1.0;
    } else {
      Pm.row(i) /= tot;
    }
  }
  return Pm;
}

SampleRun kernel_chain_run(const TransferSolution& s, const SamplerOptions& opt) {
  check_options(opt);
  const int d = s.d;
  const size_t n = s.grid.size();
  Eigen::MatrixXd Pm = kernel_transition_matrix(s);
  // cumulative rows for inversion sampling
  std::vector<std::vector<double>> cum(n, std::vector<double>(n));
  for (size_t i = 0; i < n; ++i) {
    double c = 0.0;
    for (size_t j = 0; j < n; ++j) cum[i][j] = (c += Pm(i, j));
    cum[i][n - 1] = 1.0;
  }
  std::vector<double> rho = marginal_density(s);
  size_t start = 0;
  for (size_t i = 0; i < n; ++i)
    if (rho[i] * s.grid.weight(i) > rho[start] * s.grid.weight(start)) start = i;

  double hlo, hhi;
  histogram_range(opt, s.P, s.beta, hlo, hhi);
  std::vector<double> thr;
  for (double r : opt.r_grid) thr.push_back(s.P.z_max + r);
  const int L = opt.max_lag;
  std::vector<std::vector<double>> occ(opt.chains, std::vector<double>(n, 0.0));

  auto outs = run_chains(opt.chains, [&](int c) {
    std::mt19937_64 rng = make_stream(opt.seed, static_cast<uint64_t>(c));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto step = [&](size_t i) {
      const auto& row = cum[i];
      return static_cast<size_t>(std::upper_bound(row.begin(), row.end(), unif(rng)) - row.begin());
    };
    size_t x = start;
    for (long t = 0; t < opt.burn_in; ++t) x = std::min(step(x), n - 1);
    ChainOutcome out{Accumulator(opt.batches, L, thr, opt.hist_bins, hlo, hhi)};
    std::vector<double> window(L + 1, 0.0);
    int filled = 0;
    const long K = opt.steps / opt.thinning;
    long k = 0;
    for (long t = 1; t <= opt.steps; ++t) {
      x = std::min(step(x), n - 1);
      if (t % opt.thinning != 0 || k >= K) continue;
      occ[c][x] += 1;
      int batch = static_cast<int>(k * opt.batches / K);
      ++k;
      std::vector<double> pt = s.grid.point(x);
      // consecutive blocks flatten into consecutive spacings; thinning > 1 breaks this, so the
      // series estimators are fed only when the thinning is 1
      for (int q = 0; q < d; ++q) {
        std::rotate(window.begin(), window.begin() + 1, window.end());
        window[L] = pt[q];
        filled = opt.thinning == 1 ? std::min(filled + 1, L + 1) : 1;
        out.acc.record_series(batch, window, filled);
      }
    }
    out.acceptance = 1.0;
    return out;
  });

  SampleRun run;
  run.params = s.P;
  run.N = 0;
  run.beta = s.beta;
  run.steps = opt.steps;
  run.burn_in = opt.burn_in;
  run.thinning = opt.thinning;
  run.seed = opt.seed;
  run.chains = opt.chains;
  run.source = 'K';
  run.acceptance = 1.0;
  run.samples = opt.chains * (opt.steps / opt.thinning);
  run.r_grid = opt.r_grid;
  std::vector<Accumulator> accs;
  for (auto& o : outs) accs.push_back(std::move(o.acc));
  finalize(run, accs);
  run.occupation.assign(n, 0.0);
  double tot = 0.0;
  for (const auto& o : occ)
    for (size_t i = 0; i < n; ++i) {
      run.occupation[i] += o[i];
      tot += o[i];
    }
  for (double& v : run.occupation) v /= tot;
  return run;
}

std::vector<TailRow> tail_check(const SampleRun& run) {
  std::vector<TailRow> rows;
  for (size_t k = 0; k < run.r_grid.size(); ++k) {
    TailRow t;
    t.r = run.r_grid[k];
    t.freq = run.tail_freq[k];
    t.se = run.tail_se[k];
    t.bound = std::exp(-run.beta * run.params.p * t.r);
    t.ok = t.freq <= t.bound + 3.0 * t.se;
    rows.push_back(t);
  }
  return rows;
}

CorrelationFit correlation_function(const SampleRun& run, int max_lag) {
  if (max_lag < 1 || max_lag >= static_cast<int>(run.corr.size()))
    throw std::invalid_argument("correlation_function: lag beyond the recorded range");
  CorrelationFit f;
  f.c.assign(run.corr.begin(), run.corr.begin() + max_lag + 1);
  f.se.assign(run.corr_se.begin(), run.corr_se.begin() + max_lag + 1);
  double num = 0.0, den = 0.0;
  for (int l = 1; l <= max_lag; ++l) {
    if (f.c[l] > 3.0 * f.se[l] && f.se[l] > 0) {
      double w = (f.c[l] / f.se[l]) * (f.c[l] / f.se[l]);
      num += w * l * (-std::log(f.c[l]));
      den += w * l * l;
      f.used_lags.push_back(l);
    } else {
      f.insufficient = true;
    }
  }
  f.rate = den > 0 ? num / den : std::numeric_limits<double>::quiet_NaN();
  return f;
}

MarginalDistance marginal_distance(const TransferSolution& s, const GaussianModel& G) {
  if (G.d != s.d) throw std::invalid_argument("marginal_distance: block dimensions differ");
  // L1 distance is invariant under the affine map z -> sqrt(beta)(z - a)
  std::vector<double> rho = marginal_density(s);
  double dist = 0.0;
  for (size_t i = 0; i < rho.size(); ++i)
    dist += s.grid.weight(i) * std::abs(rho[i] - gaussian_marginal_density(G, s.beta, s.grid.point(i)));
  return {dist, dist};
}

MarginalDistance marginal_distance(const SampleRun& run, const GaussianModel& G) {
  if (G.d != 1) throw std::invalid_argument("marginal_distance: histogram path needs one-spacing blocks");
  const double sd = 1.0 / std::sqrt(run.beta * G.N(0, 0));
  auto cdf = [&](double z) { return 0.5 * std::erfc(-(z - G.a) / (sd * std::sqrt(2.0))); };
  auto dist = [&](int merge) {
    const size_t nb = run.hist_density.size();
    double d = 0.0, covered = 0.0;
    for (size_t k = 0; k < nb; k += merge) {
      size_t e = std::min(nb, k + merge);
      double mass = 0.0;
      for (size_t q = k; q < e; ++q) mass += run.hist_density[q] * (run.hist_edges[q + 1] - run.hist_edges[q]);
      double gm = cdf(run.hist_edges[e]) - cdf(run.hist_edges[k]);
      covered += gm;
      d += std::abs(mass - gm);
    }
    return d + (1.0 - covered);
  };
  return {dist(1), dist(2)};
}

}  // namespace chainlab
