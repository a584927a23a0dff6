#include "bayesrake/model.hpp"

#include <cmath>
#include <limits>

#include "bayesrake/error.hpp"
#include "bayesrake/stats.hpp"

namespace bayesrake {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEmptyCellLoc = 10.0;
constexpr double kEmptyCellScale = 3.0;
}  // namespace

std::string to_string(MarginMethod m) {
  switch (m) {
    case MarginMethod::soft: return "soft";
    case MarginMethod::basis: return "basis";
    case MarginMethod::projection: return "projection";
  }
  return "?";
}

MarginMethod margin_method_from_string(const std::string& s) {
  if (s == "soft") return MarginMethod::soft;
  if (s == "basis") return MarginMethod::basis;
  if (s == "projection") return MarginMethod::projection;
  throw ParseError("unknown method '" + s + "' (want soft|basis|projection)");
}

std::string to_string(OutcomeFamily f) {
  switch (f) {
    case OutcomeFamily::none: return "none";
    case OutcomeFamily::continuous: return "continuous";
    case OutcomeFamily::binary: return "binary";
    case OutcomeFamily::reciprocal: return "reciprocal";
  }
  return "?";
}

OutcomeFamily outcome_family_from_string(const std::string& s) {
  if (s == "none") return OutcomeFamily::none;
  if (s == "continuous") return OutcomeFamily::continuous;
  if (s == "binary") return OutcomeFamily::binary;
  if (s == "reciprocal") return OutcomeFamily::reciprocal;
  throw ParseError("unknown outcome family '" + s + "'");
}

CellDesign CellDesign::build(const CellTable& table,
                             const std::vector<std::pair<int, int>>& interactions,
                             const std::string& prefix) {
  const int J = table.J();
  int P = 1;
  for (int k = 0; k < table.K(); ++k) P += table.levels(k) - 1;
  for (auto [a, b] : interactions)
    P += (table.levels(a) - 1) * (table.levels(b) - 1);

  CellDesign d;
  d.Z_ = Eigen::MatrixXd::Zero(J, P);
  d.names_.reserve(P);
  d.names_.push_back(prefix + "(Intercept)");
  d.Z_.col(0).setOnes();

  int col = 1;
  for (int k = 0; k < table.K(); ++k) {
    const auto& var = table.variable(k);
    for (int c = 1; c < table.levels(k); ++c) {
      d.names_.push_back(prefix + var.name + "=" + var.levels[c]);
      for (int j = 0; j < J; ++j)
        if (table.level_of(j, k) == c) d.Z_(j, col) = 1.0;
      ++col;
    }
  }
  for (auto [a, b] : interactions) {
    const auto& va = table.variable(a);
    const auto& vb = table.variable(b);
    for (int ca = 1; ca < table.levels(a); ++ca)
      for (int cb = 1; cb < table.levels(b); ++cb) {
        d.names_.push_back(prefix + va.name + "=" + va.levels[ca] + ":" +
                           vb.name + "=" + vb.levels[cb]);
        for (int j = 0; j < J; ++j)
          if (table.level_of(j, a) == ca && table.level_of(j, b) == cb)
            d.Z_(j, col) = 1.0;
        ++col;
      }
  }
  return d;
}

OutcomeData OutcomeData::from_units(int J, const std::vector<int>& unit_cell,
                                    const Eigen::VectorXd& y) {
  if (static_cast<Eigen::Index>(unit_cell.size()) != y.size())
    throw Error("outcome / cell assignment length mismatch");
  OutcomeData d;
  d.cnt = Eigen::VectorXd::Zero(J);
  d.sum = Eigen::VectorXd::Zero(J);
  d.sumsq = Eigen::VectorXd::Zero(J);
  d.units = y.size();
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const int j = unit_cell[i];
    if (j < 0 || j >= J) throw Error("unit assigned to invalid cell");
    d.cnt[j] += 1.0;
    d.sum[j] += y[i];
    d.sumsq[j] += y[i] * y[i];
  }
  return d;
}

Eigen::VectorXd cell_propensity(const Eigen::VectorXd& alpha,
                                const CellDesign& design) {
  if (alpha.size() != design.P()) throw Error("coefficient length mismatch");
  Eigen::VectorXd eta = design.Z() * alpha;
  for (Eigen::Index j = 0; j < eta.size(); ++j) eta[j] = logistic(eta[j]);
  return eta;
}

double log_lik_inclusion(const Eigen::VectorXd& n, const Eigen::VectorXd& n_hat,
                         const Eigen::VectorXd& p, double n_total) {
  const double S = n_hat.dot(p);
  if (!(S > 0.0)) return n.sum() > 0.0 ? -kInf : 0.0;
  double ll = 0.0;
  for (Eigen::Index j = 0; j < n.size(); ++j) {
    const double lambda = n_total * n_hat[j] * p[j] / S;
    if (lambda == 0.0) {
      if (n[j] > 0.0) return -kInf;
      continue;
    }
    ll += n[j] * std::log(lambda) - lambda - std::lgamma(n[j] + 1.0);
  }
  return ll;
}

SoftMarginTargets soft_margin_targets(const MarginSet& margins,
                                      SoftFamily family) {
  SoftMarginTargets t;
  t.value = margins.stacked();
  if (family == SoftFamily::poisson) {
    for (Eigen::Index r = 0; r < t.value.size(); ++r) {
      const double rounded = std::round(t.value[r]);
      if (std::abs(rounded - t.value[r]) > 1e-9) t.rounded = true;
      t.value[r] = rounded;
    }
  }
  return t;
}

double log_prior_margins_soft(const Eigen::VectorXd& n_hat,
                              const MarginSet& margins, const LoadingMatrix& L,
                              SoftFamily family) {
  const SoftMarginTargets targets = soft_margin_targets(margins, family);
  const Eigen::VectorXd mu = L.apply(n_hat);
  double lp = 0.0;
  for (Eigen::Index r = 0; r < mu.size(); ++r) {
    const double m = mu[r];
    const double obs = targets.value[r];
    if (family == SoftFamily::poisson) {
      lp += poisson_logpmf(obs, m);
    } else {
      if (m == 0.0) {
        if (obs != 0.0) return -kInf;
        continue;
      }
      lp += -0.5 * (kLog2Pi + std::log(m)) - (obs - m) * (obs - m) / (2.0 * m);
    }
    if (lp == -kInf) return -kInf;
  }
  return lp;
}

double log_prior_empty_cells(const Eigen::VectorXd& n_hat,
                             const CellTable& table) {
  double lp = 0.0;
  for (int j = 0; j < table.J(); ++j)
    if (table.count(j) == 0)
      lp += half_cauchy_logpdf(n_hat[j], kEmptyCellLoc, kEmptyCellScale);
  return lp;
}

double log_lik_outcome_continuous(const Eigen::VectorXd& theta, double sigma,
                                  const OutcomeData& data) {
  if (!(sigma > 0.0)) return -kInf;
  const double inv2 = 1.0 / (2.0 * sigma * sigma);
  double ll = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (data.cnt[j] == 0.0) continue;
    const double sse =
        data.sumsq[j] - 2.0 * theta[j] * data.sum[j] + data.cnt[j] * theta[j] * theta[j];
    ll += -data.cnt[j] * (0.5 * kLog2Pi + std::log(sigma)) - sse * inv2;
  }
  return ll;
}

double log_lik_outcome_binary(const Eigen::VectorXd& theta,
                              const OutcomeData& data) {
  double ll = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (data.cnt[j] == 0.0) continue;
    ll += theta[j] * data.sum[j] - data.cnt[j] * log1p_exp(theta[j]);
  }
  return ll;
}

double log_lik_outcome_reciprocal(const Eigen::VectorXd& p, double sigma,
                                  const OutcomeData& data) {
  if (!(sigma > 0.0)) return -kInf;
  const double inv2 = 1.0 / (2.0 * sigma * sigma);
  double ll = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (data.cnt[j] == 0.0) continue;
    const double sse =
        p[j] * p[j] * data.sumsq[j] - 2.0 * p[j] * data.sum[j] + data.cnt[j];
    ll += data.cnt[j] * (std::log(p[j]) - std::log(sigma) - 0.5 * kLog2Pi) -
          sse * inv2;
  }
  return ll;
}

// ---- JointModel ----------------------------------------------------------

struct JointModel::Decoded {
  Eigen::VectorXd margin_coords;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  Eigen::VectorXd u;
  double log_sigma = 0.0, sigma = 1.0;
  double log_sigma_theta = 0.0, sigma_theta = 1.0;
  Eigen::VectorXd n_hat;
  Eigen::VectorXd p;
  Eigen::VectorXd theta;  // linear scale
  bool has_sigma = false, has_beta = false, has_u = false;
};

JointModel::JointModel(const CellTable& table, const MarginSet& margins,
                       const LoadingMatrix& loading, ModelConfig config,
                       std::optional<OutcomeData> outcome,
                       std::optional<Eigen::VectorXd> n0,
                       std::optional<SubspaceBasis> basis)
    : table_(table),
      margins_(margins),
      loading_(loading),
      cfg_(std::move(config)),
      inc_design_(CellDesign::build(table, cfg_.inclusion_interactions, "")),
      out_design_(CellDesign::build(table, cfg_.outcome_interactions, "")),
      outcome_(std::move(outcome)),
      soft_targets_(soft_margin_targets(margins, cfg_.soft_family)),
      sample_counts_(table.counts_vec()) {
  if (cfg_.family != OutcomeFamily::none && !outcome_.has_value())
    throw Error("outcome model requested without outcome data");
  if (cfg_.method != MarginMethod::soft) {
    if (!n0.has_value() || !basis.has_value())
      throw Error("subspace methods need an initial table and a basis");
    n0_ = std::move(*n0);
    basis_ = std::move(*basis);
    if (basis_.d_null < 1)
      throw Error("margins fully determine the table; nothing to sample");
    const double dev = (loading_.apply(n0_) - margins_.stacked()).cwiseAbs().maxCoeff();
    if (dev > 1e-8 * std::max(margins_.N, 1.0))
      throw Error("initial table does not satisfy the margins");
    if (cfg_.method == MarginMethod::projection)
      P_ = projection_matrix(basis_);
  }
  for (int j = 0; j < table_.J(); ++j)
    if (table_.count(j) == 0) empty_cells_.push_back(j);

  const int J = table_.J();
  margin_dim_ = cfg_.method == MarginMethod::basis ? basis_.d_null : J;

  if (cfg_.method == MarginMethod::soft) {
    for (int j = 0; j < J; ++j) names_.push_back("logN[" + table_.cell_label(j) + "]");
  } else if (cfg_.method == MarginMethod::basis) {
    for (int i = 0; i < basis_.d_null; ++i) names_.push_back("t[" + std::to_string(i) + "]");
  } else {
    for (int i = 0; i < J; ++i) names_.push_back("v[" + std::to_string(i) + "]");
  }
  for (const auto& nm : inc_design_.names()) names_.push_back("alpha." + nm);
  if (cfg_.family == OutcomeFamily::continuous ||
      cfg_.family == OutcomeFamily::binary) {
    for (const auto& nm : out_design_.names()) names_.push_back("beta." + nm);
    if (cfg_.cell_effects)
      for (int j = 0; j < J; ++j) names_.push_back("u[" + std::to_string(j) + "]");
  }
  if (cfg_.family == OutcomeFamily::continuous ||
      cfg_.family == OutcomeFamily::reciprocal)
    names_.push_back("log_sigma");
  if (cfg_.cell_effects && (cfg_.family == OutcomeFamily::continuous ||
                            cfg_.family == OutcomeFamily::binary))
    names_.push_back("log_sigma_theta");
  dim_ = static_cast<int>(names_.size());
}

JointModel::Decoded JointModel::decode(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw Error("state dimension mismatch");
  Decoded d;
  d.margin_coords = x.segment(0, margin_dim_);
  int at = margin_dim_;
  d.alpha = x.segment(at, inc_design_.P());
  at += inc_design_.P();

  const int J = table_.J();
  if (cfg_.family == OutcomeFamily::continuous ||
      cfg_.family == OutcomeFamily::binary) {
    d.has_beta = true;
    d.beta = x.segment(at, out_design_.P());
    at += out_design_.P();
    if (cfg_.cell_effects) {
      d.has_u = true;
      d.u = x.segment(at, J);
      at += J;
    }
  }
  if (cfg_.family == OutcomeFamily::continuous ||
      cfg_.family == OutcomeFamily::reciprocal) {
    d.has_sigma = true;
    d.log_sigma = x[at++];
    d.sigma = std::exp(d.log_sigma);
  }
  if (d.has_u) {
    d.log_sigma_theta = x[at++];
    d.sigma_theta = std::exp(d.log_sigma_theta);
  }

  switch (cfg_.method) {
    case MarginMethod::soft:
      d.n_hat = d.margin_coords.array().exp();
      break;
    case MarginMethod::basis:
      d.n_hat = n0_ + basis_.C * d.margin_coords;
      break;
    case MarginMethod::projection:
      d.n_hat = n0_ + P_ * d.margin_coords;
      break;
  }
  d.p = cell_propensity(d.alpha, inc_design_);
  if (d.has_beta) {
    d.theta = out_design_.Z() * d.beta;
    if (d.has_u) d.theta += d.u;
  }
  return d;
}

ModelParts JointModel::components(const Eigen::VectorXd& x) const {
  const Decoded d = decode(x);
  ModelParts parts;

  if (cfg_.method == MarginMethod::soft) {
    if (!d.n_hat.allFinite()) {
      parts.margin_prior = -kInf;
      return parts;
    }
    parts.margin_prior =
        log_prior_margins_soft(d.n_hat, margins_, loading_, cfg_.soft_family);
    parts.empty_prior = log_prior_empty_cells(d.n_hat, table_);
    parts.jacobian = d.margin_coords.sum();
  } else {
    if (!d.n_hat.allFinite() || (d.n_hat.array() < 0.0).any()) {
      parts.margin_prior = -kInf;
      return parts;
    }
  }

  parts.inclusion = log_lik_inclusion(sample_counts_, d.n_hat, d.p,
                                      static_cast<double>(table_.n()));

  switch (cfg_.family) {
    case OutcomeFamily::none:
      break;
    case OutcomeFamily::continuous:
      parts.outcome = log_lik_outcome_continuous(d.theta, d.sigma, *outcome_);
      break;
    case OutcomeFamily::binary:
      parts.outcome = log_lik_outcome_binary(d.theta, *outcome_);
      break;
    case OutcomeFamily::reciprocal:
      parts.outcome = log_lik_outcome_reciprocal(d.p, d.sigma, *outcome_);
      break;
  }

  double prior = 0.0;
  for (Eigen::Index i = 0; i < d.alpha.size(); ++i)
    prior += normal_logpdf(d.alpha[i], 0.0, cfg_.coef_prior_sd);
  if (d.has_beta)
    for (Eigen::Index i = 0; i < d.beta.size(); ++i)
      prior += normal_logpdf(d.beta[i], 0.0, cfg_.coef_prior_sd);
  if (d.has_sigma)
    prior += half_normal_logpdf(d.sigma, cfg_.scale_prior_sd) + d.log_sigma;
  if (d.has_u) {
    for (Eigen::Index j = 0; j < d.u.size(); ++j)
      prior += normal_logpdf(d.u[j], 0.0, d.sigma_theta);
    prior += half_normal_logpdf(d.sigma_theta, cfg_.scale_prior_sd) +
             d.log_sigma_theta;
  }
  parts.coef_prior = prior;
  return parts;
}

double JointModel::log_posterior(const Eigen::VectorXd& x) const {
  return components(x).total();
}

double JointModel::log_posterior_grad(const Eigen::VectorXd& x,
                                      Eigen::VectorXd& grad) const {
  const double value = components(x).total();
  if (!std::isfinite(value))
    throw Error("gradient requested at a zero-density state");

  const Decoded d = decode(x);
  const int J = table_.J();
  const double n_total = static_cast<double>(table_.n());
  grad = Eigen::VectorXd::Zero(dim_);

  Eigen::VectorXd g_n = Eigen::VectorXd::Zero(J);    // d value / d N-hat
  Eigen::VectorXd g_eta = Eigen::VectorXd::Zero(J);  // d value / d logit(p)

  // Inclusion likelihood.
  const double S = d.n_hat.dot(d.p);
  for (int j = 0; j < J; ++j) {
    const double lambda = n_total * d.n_hat[j] * d.p[j] / S;
    if (sample_counts_[j] > 0.0) g_n[j] += sample_counts_[j] / d.n_hat[j];
    g_n[j] -= n_total * d.p[j] / S;
    g_eta[j] += (sample_counts_[j] - lambda) * (1.0 - d.p[j]);
  }

  // Soft margin prior and empty-cell prior.
  if (cfg_.method == MarginMethod::soft) {
    const Eigen::VectorXd mu = loading_.apply(d.n_hat);
    Eigen::VectorXd g_mu(mu.size());
    for (Eigen::Index r = 0; r < mu.size(); ++r) {
      const double obs = soft_targets_.value[r];
      if (cfg_.soft_family == SoftFamily::poisson) {
        g_mu[r] = obs / mu[r] - 1.0;
      } else {
        const double del = obs - mu[r];
        g_mu[r] = -0.5 / mu[r] + del / mu[r] + del * del / (2.0 * mu[r] * mu[r]);
      }
    }
    g_n += loading_.apply_transpose(g_mu);
    for (int j : empty_cells_)
      g_n[j] += half_cauchy_dlogpdf(d.n_hat[j], kEmptyCellLoc, kEmptyCellScale);
  }

  // Outcome likelihood.
  Eigen::VectorXd g_theta;
  double g_log_sigma = 0.0;
  if (cfg_.family == OutcomeFamily::continuous) {
    g_theta = Eigen::VectorXd::Zero(J);
    const double inv_s2 = 1.0 / (d.sigma * d.sigma);
    double sse = 0.0;
    for (int j = 0; j < J; ++j) {
      if (outcome_->cnt[j] == 0.0) continue;
      g_theta[j] = (outcome_->sum[j] - outcome_->cnt[j] * d.theta[j]) * inv_s2;
      sse += outcome_->sumsq[j] - 2.0 * d.theta[j] * outcome_->sum[j] +
             outcome_->cnt[j] * d.theta[j] * d.theta[j];
    }
    g_log_sigma += -static_cast<double>(outcome_->units) + sse * inv_s2;
  } else if (cfg_.family == OutcomeFamily::binary) {
    g_theta = Eigen::VectorXd::Zero(J);
    for (int j = 0; j < J; ++j) {
      if (outcome_->cnt[j] == 0.0) continue;
      g_theta[j] = outcome_->sum[j] - outcome_->cnt[j] * logistic(d.theta[j]);
    }
  } else if (cfg_.family == OutcomeFamily::reciprocal) {
    const double inv_s2 = 1.0 / (d.sigma * d.sigma);
    double sse = 0.0;
    for (int j = 0; j < J; ++j) {
      const double cnt = outcome_->cnt[j];
      if (cnt == 0.0) continue;
      const double pj = d.p[j];
      g_eta[j] += (1.0 - pj) * cnt -
                  pj * (1.0 - pj) * (pj * outcome_->sumsq[j] - outcome_->sum[j]) * inv_s2;
      sse += pj * pj * outcome_->sumsq[j] - 2.0 * pj * outcome_->sum[j] + cnt;
    }
    g_log_sigma += -static_cast<double>(outcome_->units) + sse * inv_s2;
  }

  // Margin block.
  switch (cfg_.method) {
    case MarginMethod::soft:
      grad.segment(0, J) =
          (d.n_hat.array() * g_n.array() + 1.0).matrix();  // +1: Jacobian
      break;
    case MarginMethod::basis:
      grad.segment(0, margin_dim_) = basis_.C.transpose() * g_n;
      break;
    case MarginMethod::projection:
      grad.segment(0, J) = P_ * g_n;
      break;
  }

  // Coefficients.
  const double inv_coef_var = 1.0 / (cfg_.coef_prior_sd * cfg_.coef_prior_sd);
  grad.segment(alpha_offset(), inc_design_.P()) =
      inc_design_.Z().transpose() * g_eta - d.alpha * inv_coef_var;

  int at = outcome_offset();
  if (d.has_beta) {
    grad.segment(at, out_design_.P()) =
        out_design_.Z().transpose() * g_theta - d.beta * inv_coef_var;
    at += out_design_.P();
    if (d.has_u) {
      const double inv_t2 = 1.0 / (d.sigma_theta * d.sigma_theta);
      grad.segment(at, J) = g_theta - d.u * inv_t2;
      at += J;
    }
  }
  const double inv_scale_var =
      1.0 / (cfg_.scale_prior_sd * cfg_.scale_prior_sd);
  if (d.has_sigma) {
    grad[at++] = g_log_sigma + 1.0 - d.sigma * d.sigma * inv_scale_var;
  }
  if (d.has_u) {
    const double inv_t2 = 1.0 / (d.sigma_theta * d.sigma_theta);
    grad[at++] = d.u.squaredNorm() * inv_t2 - static_cast<double>(J) + 1.0 -
                 d.sigma_theta * d.sigma_theta * inv_scale_var;
  }
  return value;
}

Eigen::VectorXd JointModel::cell_counts(const Eigen::VectorXd& x) const {
  return decode(x).n_hat;
}

Eigen::VectorXd JointModel::propensities(const Eigen::VectorXd& x) const {
  return decode(x).p;
}

Eigen::VectorXd JointModel::cell_expectation(const Eigen::VectorXd& x) const {
  const Decoded d = decode(x);
  switch (cfg_.family) {
    case OutcomeFamily::none:
      return Eigen::VectorXd();
    case OutcomeFamily::continuous:
      return d.theta;
    case OutcomeFamily::binary: {
      Eigen::VectorXd e(d.theta.size());
      for (Eigen::Index j = 0; j < e.size(); ++j) e[j] = logistic(d.theta[j]);
      return e;
    }
    case OutcomeFamily::reciprocal:
      return d.p.cwiseInverse();
  }
  return Eigen::VectorXd();
}

}  // namespace bayesrake
