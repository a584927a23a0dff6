#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bayesrake/table.hpp"

namespace bayesrake {

struct IpfOptions {
  double tol = 1e-8;    // relative, per margin row
  int max_iter = 1000;  // full sweeps over all margin terms
};

struct RakeResult {
  Eigen::VectorXd fitted;           // length J; zeros of the sample preserved
  int iterations = 0;               // sweeps performed
  double max_rel_margin_dev = 0.0;  // after the last sweep
  bool converged = false;
  double kl = 0.0;  // KL divergence of fitted vs sample proportions
};

// Iterative proportional fitting from the sample table scaled to N. Cycles
// over margin terms, rescaling each row's cells by target/current. Margins
// with target 0 force their cells to 0; a positive target whose contributing
// sample cells are all empty is structurally infeasible and throws.
RakeResult ipf_rake(const CellTable& table, const MarginSet& margins,
                    const LoadingMatrix& loading, const IpfOptions& opts = {});

// sum_j (fitted_j/N) log[(fitted_j/N) / (n_j/n)] over cells with positive
// fitted count. Mass on a cell the sample never saw makes it +infinity.
double kl_divergence(const Eigen::VectorXd& fitted, const CellTable& table,
                     double N);

struct RakeWeights {
  Eigen::VectorXd weights;        // length J; NaN where undefined
  std::vector<uint8_t> defined;   // 0 for empty sample cells
};

// Per-cell raking weights fitted_j / n_j. Only valid on a converged result.
RakeWeights rake_weights(const RakeResult& result, const CellTable& table);

}  // namespace bayesrake
