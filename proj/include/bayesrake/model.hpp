#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bayesrake/subspace.hpp"
#include "bayesrake/table.hpp"

namespace bayesrake {

enum class MarginMethod { soft, basis, projection };
enum class SoftFamily { poisson, normal };
enum class OutcomeFamily { none, continuous, binary, reciprocal };

std::string to_string(MarginMethod m);
MarginMethod margin_method_from_string(const std::string& s);
std::string to_string(OutcomeFamily f);
OutcomeFamily outcome_family_from_string(const std::string& s);

// Regression design over cells: intercept, main-effect indicators for the
// non-reference levels of every variable, plus indicator products for any
// declared variable pairs.
class CellDesign {
 public:
  static CellDesign build(const CellTable& table,
                          const std::vector<std::pair<int, int>>& interactions,
                          const std::string& prefix);

  const Eigen::MatrixXd& Z() const { return Z_; }
  int P() const { return static_cast<int>(Z_.cols()); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  Eigen::MatrixXd Z_;  // J x P
  std::vector<std::string> names_;
};

// Outcome observations reduced to per-cell sufficient statistics.
struct OutcomeData {
  Eigen::VectorXd cnt;    // units per cell
  Eigen::VectorXd sum;    // sum of outcomes (binary: successes)
  Eigen::VectorXd sumsq;  // sum of squared outcomes
  long units = 0;

  static OutcomeData from_units(int J, const std::vector<int>& unit_cell,
                                const Eigen::VectorXd& y);
};

struct ModelConfig {
  MarginMethod method = MarginMethod::soft;
  SoftFamily soft_family = SoftFamily::poisson;
  OutcomeFamily family = OutcomeFamily::none;
  std::vector<std::pair<int, int>> inclusion_interactions;
  std::vector<std::pair<int, int>> outcome_interactions;
  bool cell_effects = false;  // per-cell outcome effects with a common scale
  double coef_prior_sd = 5.0;
  double scale_prior_sd = 5.0;
};

// ---- component densities ----------------------------------------------

// Inverse-logit of the per-cell linear predictor.
Eigen::VectorXd cell_propensity(const Eigen::VectorXd& alpha,
                                const CellDesign& design);

// Poisson approximation to the multinomial inclusion model:
// n_j ~ Poisson(n_total * Nhat_j p_j / sum_j Nhat_j p_j).
double log_lik_inclusion(const Eigen::VectorXd& n, const Eigen::VectorXd& n_hat,
                         const Eigen::VectorXd& p, double n_total);

// Margins as Poisson (or mean-variance normal) realizations with mean L*Nhat.
// Non-integer Poisson targets are rounded; the flag records that it happened.
struct SoftMarginTargets {
  Eigen::VectorXd value;  // rounded for the Poisson family
  bool rounded = false;
};
SoftMarginTargets soft_margin_targets(const MarginSet& margins,
                                      SoftFamily family);
double log_prior_margins_soft(const Eigen::VectorXd& n_hat,
                              const MarginSet& margins, const LoadingMatrix& L,
                              SoftFamily family = SoftFamily::poisson);

// Half-Cauchy(10, 3) on the population count of cells the sample missed.
double log_prior_empty_cells(const Eigen::VectorXd& n_hat,
                             const CellTable& table);

double log_lik_outcome_continuous(const Eigen::VectorXd& theta, double sigma,
                                  const OutcomeData& data);
double log_lik_outcome_binary(const Eigen::VectorXd& theta,
                              const OutcomeData& data);
// y_i ~ N(1/p_j, (sigma/p_j)^2): the implicit inverse-propensity outcome.
double log_lik_outcome_reciprocal(const Eigen::VectorXd& p, double sigma,
                                  const OutcomeData& data);

// ---- joint model --------------------------------------------------------

struct ModelParts {
  double margin_prior = 0.0;  // subspace feasibility wall or soft margin prior
  double empty_prior = 0.0;
  double inclusion = 0.0;
  double outcome = 0.0;
  double coef_prior = 0.0;
  double jacobian = 0.0;

  double total() const {
    return margin_prior + empty_prior + inclusion + outcome + coef_prior +
           jacobian;
  }
};

// Unconstrained-coordinate joint density for one margin method. Layout:
// [margin block | alpha | outcome block], where the margin block is log N
// (soft), the null-space free vector t (basis), or v (projection), and the
// outcome block holds beta, optional cell effects, and log scales.
class JointModel {
 public:
  JointModel(const CellTable& table, const MarginSet& margins,
             const LoadingMatrix& loading, ModelConfig config,
             std::optional<OutcomeData> outcome = std::nullopt,
             std::optional<Eigen::VectorXd> n0 = std::nullopt,
             std::optional<SubspaceBasis> basis = std::nullopt);

  int dim() const { return dim_; }
  const std::vector<std::string>& coord_names() const { return names_; }

  double log_posterior(const Eigen::VectorXd& x) const;
  ModelParts components(const Eigen::VectorXd& x) const;
  // Returns the log density and fills the gradient; throws on a -inf state.
  double log_posterior_grad(const Eigen::VectorXd& x,
                            Eigen::VectorXd& grad) const;

  Eigen::VectorXd cell_counts(const Eigen::VectorXd& x) const;    // N-hat
  Eigen::VectorXd propensities(const Eigen::VectorXd& x) const;   // p_j
  // Per-cell expectation on the outcome scale (inverse-logit applied for the
  // binary family, 1/p for reciprocal). Empty when there is no outcome model.
  Eigen::VectorXd cell_expectation(const Eigen::VectorXd& x) const;

  // Layout.
  int margin_block_size() const { return margin_dim_; }
  int alpha_offset() const { return margin_dim_; }
  int alpha_size() const { return inc_design_.P(); }
  int outcome_offset() const { return margin_dim_ + inc_design_.P(); }

  const ModelConfig& config() const { return cfg_; }
  const CellTable& table() const { return table_; }
  const MarginSet& margins() const { return margins_; }
  const LoadingMatrix& loading() const { return loading_; }
  const CellDesign& inclusion_design() const { return inc_design_; }
  const CellDesign& outcome_design() const { return out_design_; }
  const Eigen::VectorXd& n0() const { return n0_; }
  const SubspaceBasis& basis() const { return basis_; }
  const Eigen::MatrixXd& projection() const { return P_; }
  bool margins_rounded() const { return soft_targets_.rounded; }

 private:
  struct Decoded;
  Decoded decode(const Eigen::VectorXd& x) const;

  const CellTable& table_;
  MarginSet margins_;
  const LoadingMatrix& loading_;
  ModelConfig cfg_;
  CellDesign inc_design_;
  CellDesign out_design_;
  std::optional<OutcomeData> outcome_;
  Eigen::VectorXd n0_;
  SubspaceBasis basis_;
  Eigen::MatrixXd P_;
  SoftMarginTargets soft_targets_;
  Eigen::VectorXd sample_counts_;
  std::vector<int> empty_cells_;
  int margin_dim_ = 0;
  int dim_ = 0;
  std::vector<std::string> names_;
};

}  // namespace bayesrake
