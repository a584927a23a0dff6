#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bayesrake/estimate.hpp"
#include "bayesrake/ipf.hpp"
#include "bayesrake/model.hpp"
#include "bayesrake/sampler.hpp"
#include "bayesrake/table.hpp"

namespace bayesrake {

// Multiplicative tilt on the joint cell distribution for one variable pair;
// entry (a,b) scales cells with var1=a, var2=b.
struct Association {
  int var1 = 0, var2 = 0;
  Eigen::MatrixXd multiplier;
};

// Linear predictor on cell indicators: intercept, per-level main effects
// (reference level 0 carries none), and optional pairwise interactions.
struct EffectSpec {
  double intercept = 0.0;
  std::vector<Eigen::VectorXd> main;  // per variable, length d_k, entry 0 ignored
  std::vector<Association> interactions;  // multiplier reused as coefficients

  std::vector<std::pair<int, int>> pairs() const;
  // Coefficients ordered to match CellDesign::build(table, pairs(), ...).
  Eigen::VectorXd design_coefficients(const CellTable& table) const;
};

struct PopulationSpec {
  std::vector<RakingVariable> variables;
  std::vector<Eigen::VectorXd> level_probs;  // per variable, normalized
  std::vector<Association> assoc;            // optional dependence
  long N = 0;
  EffectSpec inclusion;  // logit of the unit inclusion probability
  OutcomeFamily family = OutcomeFamily::binary;
  EffectSpec outcome;     // unused for the reciprocal rule
  double noise_sd = 1.0;  // continuous: residual sd; reciprocal: sd multiplier
  std::uint64_t seed = 1;
};

struct Population {
  CellTable table;  // true cell counts
  std::vector<int> unit_cell;
  Eigen::VectorXd unit_p;  // true inclusion probabilities
  Eigen::VectorXd y;
  Eigen::VectorXd cell_p;  // per-cell inclusion propensity

  MarginSet margins(const std::vector<MarginTerm>& terms) const;
  double domain_mean(const Domain& domain) const;
};

Population generate_population(const PopulationSpec& spec);

struct SampleData {
  std::vector<int> unit_idx;  // rows of the population
  std::vector<int> unit_cell;
  Eigen::VectorXd y;
  CellTable table;

  bool empty() const { return unit_idx.empty(); }
};

// Independent Bernoulli(p_i) inclusion of every population unit.
SampleData draw_sample(const Population& population, std::uint64_t seed);

enum class FitMethod { ipf, soft, basis, projection };
std::string to_string(FitMethod m);
FitMethod fit_method_from_string(const std::string& s);

struct ScenarioConfig {
  PopulationSpec population;
  std::vector<MarginTerm> raking_terms;  // empty = one term per variable
  std::vector<FitMethod> methods;
  int replicates = 100;
  std::uint64_t base_seed = 1;

  bool overall = true;
  bool margin_level_domains = false;
  std::vector<std::pair<int, int>> interaction_domains;

  ModelConfig model;  // method field overridden per fit
  SamplerConfig sampler;
  IpfOptions ipf;
  int threads = 1;
};

struct EstimandMetrics {
  std::string method;
  std::string domain;
  double truth = 0.0;
  double mean = 0.0;      // mean of point estimates
  double bias = 0.0;      // mean - truth
  double rmse = 0.0;
  double se = 0.0;        // mean of per-replicate SEs
  double ci_len = 0.0;    // mean 95% interval length
  double coverage = 0.0;  // fraction of intervals containing the truth
  int used = 0;           // replicates contributing to the aggregates
  int failures = 0;       // method raised an error
  int missing = 0;        // domain carried no weight in the replicate
  int quality_flags = 0;  // IPF non-convergence or sampler diagnostics flags
};

struct ReplicationReport {
  std::vector<EstimandMetrics> rows;
  int replicates = 0;
  int skipped_empty = 0;  // replicates whose sample was empty
  std::string se_convention;
};

ReplicationReport run_replications(const ScenarioConfig& config);

}  // namespace bayesrake
