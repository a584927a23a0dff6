#include "bayesrake/estimate.hpp"

#include <algorithm>
#include <cmath>

#include "bayesrake/error.hpp"

namespace bayesrake {

Domain overall_domain(const CellTable& table) {
  Domain d;
  d.name = "overall";
  d.cells.resize(table.J());
  for (int j = 0; j < table.J(); ++j) d.cells[j] = j;
  return d;
}

Domain level_domain(const CellTable& table, int var, int level) {
  Domain d;
  d.name = table.variable(var).name + "=" + table.variable(var).levels[level];
  for (int j = 0; j < table.J(); ++j)
    if (table.level_of(j, var) == level) d.cells.push_back(j);
  return d;
}

Domain interaction_domain(const CellTable& table,
                          const std::vector<std::pair<int, int>>& var_levels) {
  Domain d;
  for (size_t i = 0; i < var_levels.size(); ++i) {
    auto [var, level] = var_levels[i];
    if (i) d.name += ":";
    d.name += table.variable(var).name + "=" + table.variable(var).levels[level];
  }
  for (int j = 0; j < table.J(); ++j) {
    bool in = true;
    for (auto [var, level] : var_levels)
      if (table.level_of(j, var) != level) in = false;
    if (in) d.cells.push_back(j);
  }
  if (d.cells.empty()) throw Error("domain '" + d.name + "' matches no cell");
  return d;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw Error("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

void normalize_draws(PosteriorDraws& draws, double N) {
  for (Eigen::Index r = 0; r < draws.n_hat.rows(); ++r) {
    const double total = draws.n_hat.row(r).sum();
    if (!(total > 0.0)) throw Error("draw with zero total cell count");
    draws.n_hat.row(r) *= N / total;
  }
  draws.N = N;
  draws.normalized = true;
}

EstimateSummary mrp_estimate(const PosteriorDraws& draws, const Domain& domain) {
  if (domain.cells.empty()) throw Error("empty domain '" + domain.name + "'");
  if (draws.expectation.size() == 0)
    throw Error("draws carry no outcome expectations");

  EstimateSummary s;
  s.domain = domain.name;
  std::vector<double> values;
  values.reserve(draws.n_hat.rows());
  for (Eigen::Index r = 0; r < draws.n_hat.rows(); ++r) {
    double num = 0.0, den = 0.0;
    for (int j : domain.cells) {
      num += draws.n_hat(r, j) * draws.expectation(r, j);
      den += draws.n_hat(r, j);
    }
    if (den > 0.0)
      values.push_back(num / den);
    else
      ++s.missing_draws;
  }
  if (values.empty()) throw Error("domain '" + domain.name + "' carried no weight");

  s.draws = static_cast<int>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= std::max<double>(static_cast<double>(values.size()) - 1.0, 1.0);
  s.mean = mean;
  s.se = std::sqrt(var);
  s.q025 = quantile(values, 0.025);
  s.q975 = quantile(values, 0.975);
  return s;
}

std::vector<EstimateSummary> estimate_report(const PosteriorDraws& draws,
                                             const std::vector<Domain>& domains) {
  std::vector<EstimateSummary> out;
  out.reserve(domains.size());
  for (const auto& d : domains) out.push_back(mrp_estimate(draws, d));
  return out;
}

}  // namespace bayesrake
