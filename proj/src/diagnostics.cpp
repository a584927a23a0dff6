#include "bayesrake/diagnostics.hpp"

#include <cmath>
#include <limits>

namespace bayesrake {

namespace {

std::vector<Eigen::VectorXd> split_halves(
    const std::vector<Eigen::VectorXd>& chains) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& c : chains) {
    const Eigen::Index half = c.size() / 2;
    if (half < 2) continue;
    out.push_back(c.segment(0, half));
    out.push_back(c.segment(c.size() - half, half));  // drop middle if odd
  }
  return out;
}

struct PooledVariance {
  double W = 0.0;      // mean within-sequence variance
  double var_plus = 0.0;
  Eigen::Index n = 0;  // common sequence length
  std::vector<double> means;
};

PooledVariance pooled(const std::vector<Eigen::VectorXd>& seqs) {
  PooledVariance pv;
  pv.n = seqs.front().size();
  const double m = static_cast<double>(seqs.size());
  double grand = 0.0;
  for (const auto& s : seqs) {
    const double mean = s.mean();
    pv.means.push_back(mean);
    grand += mean / m;
    pv.W += (s.array() - mean).square().sum() / (static_cast<double>(pv.n) - 1.0) / m;
  }
  double B = 0.0;  // n * variance of sequence means
  for (double mu : pv.means) B += (mu - grand) * (mu - grand);
  B *= static_cast<double>(pv.n) / (m - 1.0);
  const double n = static_cast<double>(pv.n);
  pv.var_plus = (n - 1.0) / n * pv.W + B / n;
  return pv;
}

}  // namespace

double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  const auto seqs = split_halves(chains);
  if (seqs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const PooledVariance pv = pooled(seqs);
  if (pv.W == 0.0)
    return pv.var_plus == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(pv.var_plus / pv.W);
}

double effective_sample_size(const std::vector<Eigen::VectorXd>& chains) {
  const auto seqs = split_halves(chains);
  if (seqs.empty()) return std::numeric_limits<double>::quiet_NaN();
  const PooledVariance pv = pooled(seqs);
  const Eigen::Index n = pv.n;
  const double m = static_cast<double>(seqs.size());
  const double total = m * static_cast<double>(n);
  if (pv.var_plus == 0.0) return std::numeric_limits<double>::quiet_NaN();

  // rho_t = 1 - V_t / (2 var_plus) with V_t the pooled variogram at lag t.
  auto rho = [&](Eigen::Index t) {
    double v = 0.0;
    for (const auto& s : seqs) {
      double acc = 0.0;
      for (Eigen::Index i = t; i < n; ++i) {
        const double d = s[i] - s[i - t];
        acc += d * d;
      }
      v += acc / static_cast<double>(n - t);
    }
    v /= m;
    return 1.0 - v / (2.0 * pv.var_plus);
  };

  // Geyer: sum autocorrelations while consecutive pairs stay positive, and
  // force the pair sums to be non-increasing.
  double tau = 1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 1; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  return total / tau;
}

}  // namespace bayesrake
