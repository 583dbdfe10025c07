#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "chainlab/gaussian.hpp"
#include "chainlab/ground_state.hpp"
#include "chainlab/transfer.hpp"

namespace chainlab {

// Independent stream `stream` of the generator family identified by `seed`.
std::mt19937_64 make_stream(uint64_t seed, uint64_t stream);

struct SamplerOptions {
  long steps = 1000000;  // sweeps (Metropolis) or transitions (kernel chain) after burn-in
  long burn_in = 100000;
  int thinning = 10;
  uint64_t seed = 1;
  int chains = 1;            // independent chains on disjoint streams, run concurrently
  double target_acceptance = 0.4;
  int max_lag = 8;
  int batches = 50;          // batch-means batches per chain
  int hist_bins = 400;
  double hist_lo = 0.0;      // hist_hi <= hist_lo picks the transfer-grid support
  double hist_hi = 0.0;
  std::vector<double> r_grid{0.5, 1.0, 2.0, 4.0};
};

struct SampleRun {
  ModelParams params;
  int N = 0;
  double beta = 0.0;
  long steps = 0, burn_in = 0;
  int thinning = 1;
  uint64_t seed = 0;
  int chains = 1;
  char source = 'M';             // 'M' Metropolis, 'K' transfer-kernel chain
  double acceptance = 0.0;       // after tuning
  double proposal_width = 0.0;
  long samples = 0;              // recorded configurations (all chains)
  int bulk_lo = 0, bulk_hi = 0;  // spacing indices [lo, hi) used for bulk estimates

  double mean_spacing = 0.0, mean_spacing_se = 0.0;  // bulk window
  double center_mean = 0.0, center_se = 0.0;         // spacing at index (N-1)/2

  std::vector<double> hist_edges;    // bulk spacings
  std::vector<double> hist_density;  // integrates to 1 over [edges.front(), edges.back()]
  long hist_outside = 0;

  std::vector<double> corr, corr_se;  // lags 0..max_lag
  std::vector<double> r_grid, tail_freq, tail_se;

  std::vector<double> occupation;  // kernel chain: visit frequencies of the grid nodes
};

// Single-site Gaussian-proposal Metropolis for exp(-beta E_N) on (r_hc, inf)^(N-1).
// Throws std::runtime_error if the acceptance rate stays below 0.05 after tuning.
SampleRun metropolis_run(int N, const ModelParams& P, double beta, const SamplerOptions& opt = {});

// Metropolis acceptance min(1, pi_to / pi_from) for unnormalized target weights. Generic in the
// number type so that the rule can be checked in exact arithmetic.
template <class T>
T metropolis_accept_ratio(const T& pi_from, const T& pi_to) {
  if (!(pi_to < pi_from)) return T(1);
  return pi_to / pi_from;
}

// Acceptance used by metropolis_run: the rule above with pi = exp(-beta E), as a function of
// the energy change.
double metropolis_accept(double energy_from, double energy_to, double beta);

// Row-stochastic matrix P_ij = M_ij r_j / (lambda0 r_i) of the principal-eigenvector transform.
Eigen::MatrixXd kernel_transition_matrix(const TransferSolution& s);
// Markov chain on the quadrature nodes; consecutive states are consecutive blocks of the chain.
SampleRun kernel_chain_run(const TransferSolution& s, const SamplerOptions& opt = {});

struct TailRow {
  double r = 0.0;
  double freq = 0.0, se = 0.0;
  double bound = 1.0;  // exp(-beta p r)
  bool ok = true;      // freq <= bound + 3 se
};
std::vector<TailRow> tail_check(const SampleRun& run);

struct CorrelationFit {
  std::vector<double> c, se;
  std::vector<int> used_lags;  // lags with c > 3 se
  double rate = 0.0;           // NaN if no lag is significant
  bool insufficient = false;   // some lag in 1..max_lag not resolved
};
// Weighted least-squares fit of -log c(n) = rate * n through the origin over significant lags.
CorrelationFit correlation_function(const SampleRun& run, int max_lag);

struct MarginalDistance {
  double distance = 0.0;
  double distance_coarse = 0.0;  // histogram path only: same with bins merged pairwise
};
// L1 distance in the scaled variable sqrt(beta)(z - a) between the one-block transfer marginal
// and the Gaussian marginal with precision beta N.
MarginalDistance marginal_distance(const TransferSolution& s, const GaussianModel& G);
// Same for the bulk spacing histogram of a run (one-spacing blocks).
MarginalDistance marginal_distance(const SampleRun& run, const GaussianModel& G);

}  // namespace chainlab
