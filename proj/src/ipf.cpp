#include "bayesrake/ipf.hpp"

#include <cmath>
#include <limits>

#include "bayesrake/error.hpp"

namespace bayesrake {

namespace {

double max_relative_deviation(const Eigen::VectorXd& current,
                              const Eigen::VectorXd& target) {
  double dev = 0.0;
  for (Eigen::Index r = 0; r < target.size(); ++r) {
    const double d = target[r] > 0.0 ? std::abs(current[r] - target[r]) / target[r]
                                     : std::abs(current[r]);
    dev = std::max(dev, d);
  }
  return dev;
}

}  // namespace

RakeResult ipf_rake(const CellTable& table, const MarginSet& margins,
                    const LoadingMatrix& loading, const IpfOptions& opts) {
  if (table.n() <= 0) throw Error("ipf needs a nonempty sample");
  if (loading.cols() != table.J()) throw Error("loading matrix / table mismatch");
  const Eigen::VectorXd target = margins.stacked();
  if (target.size() != loading.rows())
    throw Error("margin vector / loading matrix mismatch");

  // A positive control total whose contributing sample cells are all empty
  // can never be matched by proportional scaling.
  {
    const Eigen::VectorXd sample_margins = loading.apply(table.counts_vec());
    for (Eigen::Index r = 0; r < target.size(); ++r)
      if (target[r] > 0.0 && sample_margins[r] == 0.0)
        throw InfeasibleError("margin '" + loading.row_label(r) +
                              "' is positive but unsupported by the sample");
  }

  const int J = table.J();
  RakeResult res;
  res.fitted.resize(J);
  for (int j = 0; j < J; ++j)
    res.fitted[j] = margins.N * static_cast<double>(table.count(j)) /
                    static_cast<double>(table.n());

  // Row offsets per term within the stacked margin vector.
  const int T = loading.terms();
  for (int sweep = 1; sweep <= opts.max_iter; ++sweep) {
    for (int t = 0; t < T; ++t) {
      Eigen::VectorXd current = Eigen::VectorXd::Zero(target.size());
      for (int j = 0; j < J; ++j) current[loading.column_rows(j)[t]] += res.fitted[j];
      for (int j = 0; j < J; ++j) {
        const int r = loading.column_rows(j)[t];
        if (current[r] > 0.0) {
          res.fitted[j] *= target[r] / current[r];
        } else if (target[r] > 0.0) {
          throw InfeasibleError("margin '" + loading.row_label(r) +
                                "' became unmatched during fitting");
        }
        // current == 0 and target == 0: cells already at 0, leave them.
      }
    }
    res.iterations = sweep;
    res.max_rel_margin_dev =
        max_relative_deviation(loading.apply(res.fitted), target);
    if (res.max_rel_margin_dev < opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.kl = kl_divergence(res.fitted, table, margins.N);
  return res;
}

double kl_divergence(const Eigen::VectorXd& fitted, const CellTable& table,
                     double N) {
  const double n = static_cast<double>(table.n());
  double kl = 0.0;
  for (int j = 0; j < table.J(); ++j) {
    if (fitted[j] <= 0.0) continue;  // zero fitted mass contributes nothing
    if (table.count(j) == 0) return std::numeric_limits<double>::infinity();
    const double p = fitted[j] / N;
    const double q = static_cast<double>(table.count(j)) / n;
    kl += p * std::log(p / q);
  }
  return kl;
}

RakeWeights rake_weights(const RakeResult& result, const CellTable& table) {
  if (!result.converged)
    throw Error("raking weights requested on a non-converged fit");
  RakeWeights w;
  w.weights.resize(table.J());
  w.defined.resize(table.J());
  for (int j = 0; j < table.J(); ++j) {
    if (table.count(j) > 0) {
      w.weights[j] = result.fitted[j] / static_cast<double>(table.count(j));
      w.defined[j] = 1;
    } else {
      w.weights[j] = std::numeric_limits<double>::quiet_NaN();
      w.defined[j] = 0;
    }
  }
  return w;
}

}  // namespace bayesrake
