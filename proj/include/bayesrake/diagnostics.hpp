#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace bayesrake {

struct CoordinateDiagnostic {
  std::string name;
  double rhat = 0.0;  // NaN when unavailable
  double ess = 0.0;
  bool flagged = false;  // rhat > 1.05 or ess < 100
};

// Split R-hat over the given sequences (each chain is split in half first).
// Returns +inf when the within-chain variance vanishes but chains disagree.
double split_rhat(const std::vector<Eigen::VectorXd>& chains);

// Effective sample size from the variogram autocorrelation estimate with
// Geyer initial-positive-pair truncation, on split chains.
double effective_sample_size(const std::vector<Eigen::VectorXd>& chains);

}  // namespace bayesrake
