#include <cmath>
#include <limits>

#include "bayesrake/error.hpp"
#include "bayesrake/rng.hpp"
#include "bayesrake/sampler.hpp"

namespace bayesrake {

DiagnosticsReport diagnostics(const Draws& draws) {
  DiagnosticsReport rep;
  rep.rhat_available = draws.chains >= 2;
  rep.max_rhat = 0.0;
  rep.min_ess = std::numeric_limits<double>::infinity();
  for (int k = 0; k < draws.dim; ++k) {
    std::vector<Eigen::VectorXd> per_chain;
    per_chain.reserve(draws.chains);
    for (int c = 0; c < draws.chains; ++c)
      per_chain.push_back(draws.coordinate(c, k));

    CoordinateDiagnostic cd;
    cd.name = k < static_cast<int>(draws.names.size()) ? draws.names[k]
                                                       : std::to_string(k);
    cd.rhat = rep.rhat_available ? split_rhat(per_chain)
                                 : std::numeric_limits<double>::quiet_NaN();
    cd.ess = effective_sample_size(per_chain);
    cd.flagged = (rep.rhat_available && !(cd.rhat < 1.05)) || !(cd.ess >= 100.0);
    rep.any_flagged = rep.any_flagged || cd.flagged;
    if (rep.rhat_available && std::isfinite(cd.rhat))
      rep.max_rhat = std::max(rep.max_rhat, cd.rhat);
    if (rep.rhat_available && std::isinf(cd.rhat))
      rep.max_rhat = std::numeric_limits<double>::infinity();
    if (std::isfinite(cd.ess)) rep.min_ess = std::min(rep.min_ess, cd.ess);
    rep.coords.push_back(std::move(cd));
  }
  for (const auto& s : draws.stats) {
    rep.divergences += s.divergences;
    rep.max_depth_hits += s.max_depth_hits;
  }
  rep.divergence_rate =
      draws.total_draws() > 0
          ? static_cast<double>(rep.divergences) / draws.total_draws()
          : 0.0;
  return rep;
}

std::vector<Eigen::VectorXd> initialize(const JointModel& model,
                                        const Eigen::VectorXd& classical_fit,
                                        int chains, std::uint64_t seed) {
  const int J = model.table().J();
  std::vector<Eigen::VectorXd> inits;
  for (int c = 0; c < chains; ++c) {
    Rng rng = Rng::stream(seed, 0x10000ull + static_cast<std::uint64_t>(c));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(model.dim());

    if (model.config().method == MarginMethod::soft) {
      for (int j = 0; j < J; ++j)
        x[j] = std::log(std::max(classical_fit[j], 0.5)) + rng.uniform(-0.1, 0.1);
    } else {
      const int m = model.margin_block_size();
      double scale = 1.0;
      bool feasible = false;
      for (int attempt = 0; attempt < 100 && !feasible; ++attempt) {
        Eigen::VectorXd free(m);
        for (int i = 0; i < m; ++i) free[i] = scale * rng.uniform(-0.1, 0.1);
        x.segment(0, m) = free;
        Eigen::VectorXd n_hat =
            model.config().method == MarginMethod::basis
                ? Eigen::VectorXd(model.n0() + model.basis().C * free)
                : Eigen::VectorXd(model.n0() + model.projection() * free);
        feasible = (n_hat.array() >= 0.0).all();
        if (attempt % 10 == 9) scale *= 0.5;
      }
      if (!feasible)
        throw InitError("no feasible subspace point found near the anchor");
    }
    for (int i = model.alpha_offset(); i < model.dim(); ++i)
      x[i] = rng.uniform(-0.1, 0.1);

    if (!std::isfinite(model.log_posterior(x)))
      throw InitError("initial state has zero posterior density");
    inits.push_back(std::move(x));
  }
  return inits;
}

PosteriorDraws sample_posterior(const JointModel& model,
                                const Eigen::VectorXd& classical_fit,
                                const SamplerConfig& config) {
  Target target;
  target.dim = model.dim();
  target.names = model.coord_names();
  target.logp = [&model](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    if (grad == nullptr) return model.log_posterior(x);
    try {
      return model.log_posterior_grad(x, *grad);
    } catch (const Error&) {
      grad->setZero();
      return -std::numeric_limits<double>::infinity();
    }
  };

  const auto inits = initialize(model, classical_fit, config.chains, config.seed);
  PosteriorDraws pd;
  pd.raw = sample(target, inits, config);
  pd.N = model.margins().N;
  pd.method = model.config().method;

  const int J = model.table().J();
  const int total = pd.raw.total_draws();
  const bool has_outcome = model.config().family != OutcomeFamily::none;
  pd.n_hat.resize(total, J);
  pd.propensity.resize(total, J);
  if (has_outcome) pd.expectation.resize(total, J);
  int row = 0;
  for (int c = 0; c < pd.raw.chains; ++c)
    for (int i = 0; i < pd.raw.iters; ++i, ++row) {
      const Eigen::VectorXd x = pd.raw.chain_draws[c].row(i);
      pd.n_hat.row(row) = model.cell_counts(x);
      pd.propensity.row(row) = model.propensities(x);
      if (has_outcome) pd.expectation.row(row) = model.cell_expectation(x);
    }
  pd.diag = diagnostics(pd.raw);
  return pd;
}

}  // namespace bayesrake
