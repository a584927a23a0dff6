#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bayesrake/ipf.hpp"
#include "bayesrake/sampler.hpp"
#include "bayesrake/sim.hpp"

namespace bayesrake {

// Resolved configuration of one `ipf` or `bayes` run. Serializes to the
// manifest, from which the run is exactly reproducible.
struct RunConfig {
  int schema_version = 1;
  std::string command = "bayes";  // "ipf" or "bayes"
  std::string data;
  std::string margins;
  std::string method = "soft";  // soft|basis|projection (bayes) — ignored by ipf
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  int threads = 1;
  bool save_draws = true;

  // model block
  std::string outcome_family = "none";
  std::vector<std::vector<std::string>> inclusion_interactions;  // name pairs
  std::vector<std::vector<std::string>> outcome_interactions;
  bool cell_effects = false;
  std::string soft_family = "poisson";
  double coef_prior_sd = 5.0;
  double scale_prior_sd = 5.0;

  SamplerConfig sampler;
  IpfOptions ipf;

  // domains
  bool domains_overall = true;
  bool domains_margins = false;
  std::vector<std::vector<std::string>> domain_interactions;  // name pairs
  // explicit domains, each a list of "var=level" constraints
  std::vector<std::vector<std::string>> domain_specs;

  std::string to_json() const;
  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_json_file(const std::string& path);
};

// Executes a run, writing artifacts (estimates, diagnostics, draws, manifest)
// under out_dir. Throws typed errors; use exit_code_for to map them.
void run(const RunConfig& config);

// Scenario file -> replication study artifacts under out_dir.
void run_simulation(const std::string& scenario_path, const std::string& out_dir,
                    int threads);
ScenarioConfig parse_scenario_file(const std::string& path);

// R-hat / ESS report for a draws CSV.
void run_diagnose(const std::string& draws_path, const std::string& out_path);

std::string format_replication_table(const ReplicationReport& report);
void write_replication_csv(const std::string& path,
                           const ReplicationReport& report);

// file/parse -> 2, structural infeasibility -> 3, sampler init -> 4, other -> 1
int exit_code_for(const std::exception& e);
// Writes {error, type} JSON next to the other artifacts and to stderr.
void write_error_record(const std::string& out_dir, const std::exception& e);

}  // namespace bayesrake
