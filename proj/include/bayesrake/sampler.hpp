#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bayesrake/diagnostics.hpp"
#include "bayesrake/model.hpp"

namespace bayesrake {

// A differentiable log density. The gradient pointer is null when only the
// value is needed; implementations must return -inf (not throw) off support.
struct Target {
  int dim = 0;
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)> logp;
  std::vector<std::string> names;
};

struct SamplerConfig {
  int chains = 4;
  int warmup = 1000;
  int iters = 1000;
  std::uint64_t seed = 1;
  double target_accept = 0.8;
  int max_depth = 10;
  int threads = 1;

  void validate() const;
};

struct ChainStats {
  int divergences = 0;     // post-warmup
  int max_depth_hits = 0;  // post-warmup
  double mean_accept = 0.0;
  double step_size = 0.0;
};

struct Draws {
  int chains = 0, iters = 0, dim = 0;
  std::vector<Eigen::MatrixXd> chain_draws;  // per chain: iters x dim
  std::vector<ChainStats> stats;
  std::vector<std::string> names;

  Eigen::VectorXd coordinate(int chain, int coord) const {
    return chain_draws[chain].col(coord);
  }
  int total_draws() const { return chains * iters; }
  int total_divergences() const;
};

// Dynamic-trajectory HMC with dual-averaging step size and diagonal mass
// matrix adaptation during warmup. Deterministic given (seed, chain index);
// chains run concurrently when config.threads > 1.
Draws sample(const Target& target, const std::vector<Eigen::VectorXd>& inits,
             const SamplerConfig& config);

// ---- model-facing layer ---------------------------------------------------

struct DiagnosticsReport {
  std::vector<CoordinateDiagnostic> coords;
  bool rhat_available = true;
  double max_rhat = 0.0;
  double min_ess = 0.0;
  int divergences = 0;
  double divergence_rate = 0.0;
  int max_depth_hits = 0;
  bool any_flagged = false;
};

DiagnosticsReport diagnostics(const Draws& draws);

// Posterior sample of a JointModel plus the derived per-cell quantities the
// estimator consumes. Rows of the derived matrices are chain-major draws.
struct PosteriorDraws {
  Draws raw;
  Eigen::MatrixXd n_hat;        // draws x J (unnormalized for the soft method)
  Eigen::MatrixXd propensity;   // draws x J
  Eigen::MatrixXd expectation;  // draws x J; empty without an outcome model
  DiagnosticsReport diag;
  double N = 0.0;
  MarginMethod method = MarginMethod::soft;
  bool normalized = false;
};

// Per-chain initial states: log of the classical fit (floored at 0.5) plus
// jitter for the soft method; jitter around the feasible anchor for the
// subspace methods, retried (with shrinking scale) until feasible.
std::vector<Eigen::VectorXd> initialize(const JointModel& model,
                                        const Eigen::VectorXd& classical_fit,
                                        int chains, std::uint64_t seed);

PosteriorDraws sample_posterior(const JointModel& model,
                                const Eigen::VectorXd& classical_fit,
                                const SamplerConfig& config);

}  // namespace bayesrake
