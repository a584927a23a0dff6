#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "bayesrake/sampler.hpp"
#include "bayesrake/table.hpp"

namespace bayesrake {

// A subset of cells to estimate over: the whole table, one margin level, or
// one interaction level.
struct Domain {
  std::string name;
  std::vector<int> cells;
};

Domain overall_domain(const CellTable& table);
Domain level_domain(const CellTable& table, int var, int level);
Domain interaction_domain(const CellTable& table,
                          const std::vector<std::pair<int, int>>& var_levels);

struct EstimateSummary {
  std::string domain;
  double mean = 0.0;
  double se = 0.0;  // posterior standard deviation
  double q025 = 0.0;
  double q975 = 0.0;
  int draws = 0;
  int missing_draws = 0;  // draws where the domain carried no weight
};

// Rescale every stored cell-count draw so it sums to N exactly. Subspace
// draws already satisfy this and pass through (up to roundoff).
void normalize_draws(PosteriorDraws& draws, double N);

// Population/domain mean: the cell-count-weighted average of the per-draw
// cell expectations, summarized over draws.
EstimateSummary mrp_estimate(const PosteriorDraws& draws, const Domain& domain);

std::vector<EstimateSummary> estimate_report(const PosteriorDraws& draws,
                                             const std::vector<Domain>& domains);

// Type-7 (linear interpolation) quantile of a copy of the values.
double quantile(std::vector<double> values, double prob);

}  // namespace bayesrake
