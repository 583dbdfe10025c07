#pragma once

#include <functional>
#include <string>
#include <vector>

#include "chainlab/ground_state.hpp"

namespace chainlab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  double time_limit = 0.0;
};

// Canonical model: Lennard-Jones, p = 0.1, range m.
ModelParams canonical_model(int m = 2);

// Closed-form one-spacing integrals for m = 1 by adaptive Gauss-Kronrod quadrature:
// returns {g, mean spacing}.
std::pair<double, double> independent_spacing_oracle(const ModelParams& P, double beta);

// Q_N for N = 2..N_max particles (m = 2) by nested quadrature on a Gauss-Kronrod panel rule,
// tabulating the inner integrals at the outer nodes. Entry k holds log Q_{k+2}.
std::vector<double> nested_quadrature_logQ(const ModelParams& P, double beta, int N_max);

CriterionResult criterion(int id);
std::vector<int> all_criteria();
std::string criterion_line(const CriterionResult& r);

// Runs the criteria in order, calling `report` after each one.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids,
                                            const std::function<void(const CriterionResult&)>& report = {});

}  // namespace chainlab
