#include "bayesrake/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "bayesrake/error.hpp"
#include "bayesrake/rng.hpp"
#include "bayesrake/stats.hpp"
#include "bayesrake/subspace.hpp"

namespace bayesrake {

std::string to_string(FitMethod m) {
  switch (m) {
    case FitMethod::ipf: return "ipf";
    case FitMethod::soft: return "soft";
    case FitMethod::basis: return "basis";
    case FitMethod::projection: return "projection";
  }
  return "?";
}

FitMethod fit_method_from_string(const std::string& s) {
  if (s == "ipf") return FitMethod::ipf;
  if (s == "soft") return FitMethod::soft;
  if (s == "basis") return FitMethod::basis;
  if (s == "projection") return FitMethod::projection;
  throw ParseError("unknown fit method '" + s + "'");
}

std::vector<std::pair<int, int>> EffectSpec::pairs() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& a : interactions) out.emplace_back(a.var1, a.var2);
  return out;
}

Eigen::VectorXd EffectSpec::design_coefficients(const CellTable& table) const {
  if (static_cast<int>(main.size()) != table.K())
    throw Error("effect spec needs one main-effect vector per variable");
  int P = 1;
  for (int k = 0; k < table.K(); ++k) {
    if (main[k].size() != table.levels(k))
      throw Error("main-effect vector length mismatch");
    P += table.levels(k) - 1;
  }
  for (const auto& a : interactions)
    P += (table.levels(a.var1) - 1) * (table.levels(a.var2) - 1);

  Eigen::VectorXd coef(P);
  coef[0] = intercept;
  int at = 1;
  for (int k = 0; k < table.K(); ++k)
    for (int c = 1; c < table.levels(k); ++c) coef[at++] = main[k][c];
  for (const auto& a : interactions) {
    if (a.multiplier.rows() != table.levels(a.var1) ||
        a.multiplier.cols() != table.levels(a.var2))
      throw Error("interaction coefficient matrix shape mismatch");
    for (int ca = 1; ca < table.levels(a.var1); ++ca)
      for (int cb = 1; cb < table.levels(a.var2); ++cb)
        coef[at++] = a.multiplier(ca, cb);
  }
  return coef;
}

Population generate_population(const PopulationSpec& spec) {
  if (spec.N < 1) throw Error("population size must be at least 1");
  if (spec.level_probs.size() != spec.variables.size())
    throw Error("need level probabilities per variable");

  CellTable layout = CellTable::empty(spec.variables);
  const int J = layout.J();

  // Joint cell distribution: product of marginals times association tilts.
  Eigen::VectorXd prob(J);
  for (int j = 0; j < J; ++j) {
    double p = 1.0;
    for (int k = 0; k < layout.K(); ++k)
      p *= spec.level_probs[k][layout.level_of(j, k)];
    for (const auto& a : spec.assoc)
      p *= a.multiplier(layout.level_of(j, a.var1), layout.level_of(j, a.var2));
    prob[j] = p;
  }
  const double total = prob.sum();
  if (!(total > 0.0)) throw Error("degenerate joint cell distribution");
  prob /= total;

  Eigen::VectorXd cum(J);
  double acc = 0.0;
  for (int j = 0; j < J; ++j) cum[j] = (acc += prob[j]);

  Rng rng = Rng::stream(spec.seed, 0x706f70ull);
  std::vector<long> counts(J, 0);
  std::vector<int> unit_cell(spec.N);
  for (long i = 0; i < spec.N; ++i) {
    const double u = rng.u01();
    const int j = static_cast<int>(
        std::lower_bound(cum.data(), cum.data() + J, u) - cum.data());
    const int cell = std::min(j, J - 1);
    unit_cell[i] = cell;
    ++counts[cell];
  }

  Population pop{CellTable(spec.variables, std::move(counts)),
                 std::move(unit_cell), Eigen::VectorXd(spec.N),
                 Eigen::VectorXd(spec.N), Eigen::VectorXd(J)};

  const CellDesign inc_design =
      CellDesign::build(pop.table, spec.inclusion.pairs(), "");
  pop.cell_p =
      cell_propensity(spec.inclusion.design_coefficients(pop.table), inc_design);
  for (long i = 0; i < spec.N; ++i) pop.unit_p[i] = pop.cell_p[pop.unit_cell[i]];

  Eigen::VectorXd outcome_eta;
  if (spec.family == OutcomeFamily::binary ||
      spec.family == OutcomeFamily::continuous) {
    const CellDesign out_design =
        CellDesign::build(pop.table, spec.outcome.pairs(), "");
    outcome_eta = out_design.Z() * spec.outcome.design_coefficients(pop.table);
  }
  for (long i = 0; i < spec.N; ++i) {
    const int j = pop.unit_cell[i];
    switch (spec.family) {
      case OutcomeFamily::binary:
        pop.y[i] = rng.bernoulli(logistic(outcome_eta[j])) ? 1.0 : 0.0;
        break;
      case OutcomeFamily::continuous:
        pop.y[i] = outcome_eta[j] + spec.noise_sd * rng.normal();
        break;
      case OutcomeFamily::reciprocal:
        pop.y[i] =
            1.0 / pop.unit_p[i] + (spec.noise_sd / pop.unit_p[i]) * rng.normal();
        break;
      case OutcomeFamily::none:
        pop.y[i] = 0.0;
        break;
    }
  }
  return pop;
}

MarginSet Population::margins(const std::vector<MarginTerm>& terms) const {
  const LoadingMatrix L = LoadingMatrix::build(table, terms);
  const Eigen::VectorXd stacked = L.apply(table.counts_vec());
  MarginSet m;
  m.terms = terms;
  m.N = static_cast<double>(table.n());
  int at = 0;
  for (const auto& term : terms) {
    int d = 1;
    for (int k : term.vars) d *= table.levels(k);
    m.values.push_back(stacked.segment(at, d));
    at += d;
  }
  return m;
}

double Population::domain_mean(const Domain& domain) const {
  std::vector<char> in(table.J(), 0);
  for (int j : domain.cells) in[j] = 1;
  double sum = 0.0;
  long count = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!in[unit_cell[i]]) continue;
    sum += y[i];
    ++count;
  }
  if (count == 0)
    throw Error("domain '" + domain.name + "' is empty in the population");
  return sum / static_cast<double>(count);
}

SampleData draw_sample(const Population& population, std::uint64_t seed) {
  Rng rng(seed);
  SampleData s{{}, {}, {}, CellTable::empty(population.table.variables())};
  std::vector<double> ys;
  std::vector<long> counts(population.table.J(), 0);
  for (Eigen::Index i = 0; i < population.y.size(); ++i) {
    if (!rng.bernoulli(population.unit_p[i])) continue;
    s.unit_idx.push_back(static_cast<int>(i));
    s.unit_cell.push_back(population.unit_cell[i]);
    ys.push_back(population.y[i]);
    ++counts[population.unit_cell[i]];
  }
  s.y = Eigen::Map<Eigen::VectorXd>(ys.data(),
                                    static_cast<Eigen::Index>(ys.size()));
  s.table = CellTable(population.table.variables(), std::move(counts));
  return s;
}

namespace {

struct ReplicateEstimate {
  double est = 0.0, se = 0.0, lo = 0.0, hi = 0.0;
  bool ok = false;       // estimate produced
  bool missing = false;  // domain had no weight
  bool flagged = false;  // non-convergence or bad sampler diagnostics
};

// Weighted-ratio estimate with with-replacement linearization SE and a
// normal 95% interval, from per-cell sufficient statistics.
ReplicateEstimate ipf_domain_estimate(const RakeWeights& weights,
                                      const OutcomeData& data,
                                      const Domain& domain, bool flagged) {
  double num = 0.0, den = 0.0;
  for (int j : domain.cells) {
    if (data.cnt[j] == 0.0) continue;
    num += weights.weights[j] * data.sum[j];
    den += weights.weights[j] * data.cnt[j];
  }
  ReplicateEstimate r;
  if (!(den > 0.0)) {
    r.missing = true;
    return r;
  }
  const double est = num / den;
  double var = 0.0;
  for (int j : domain.cells) {
    if (data.cnt[j] == 0.0) continue;
    const double w = weights.weights[j];
    var += w * w *
           (data.sumsq[j] - 2.0 * est * data.sum[j] + data.cnt[j] * est * est);
  }
  var /= den * den;
  r.est = est;
  r.se = std::sqrt(std::max(var, 0.0));
  r.lo = est - 1.959963984540054 * r.se;
  r.hi = est + 1.959963984540054 * r.se;
  r.ok = true;
  r.flagged = flagged;
  return r;
}

struct ReplicateResult {
  std::vector<std::vector<ReplicateEstimate>> cells;  // [method][domain]
  bool skipped = false;
  std::vector<bool> failed;  // per method
};

}  // namespace

ReplicationReport run_replications(const ScenarioConfig& config) {
  if (config.replicates < 2) throw Error("need at least 2 replicates");
  const Population pop = generate_population(config.population);

  std::vector<MarginTerm> terms = config.raking_terms;
  if (terms.empty())
    for (int k = 0; k < pop.table.K(); ++k) terms.push_back(MarginTerm{{k}});
  const MarginSet margins = pop.margins(terms);
  const LoadingMatrix loading = LoadingMatrix::build(pop.table, terms);

  std::vector<Domain> domains;
  if (config.overall) domains.push_back(overall_domain(pop.table));
  if (config.margin_level_domains)
    for (int k = 0; k < pop.table.K(); ++k)
      for (int c = 0; c < pop.table.levels(k); ++c)
        domains.push_back(level_domain(pop.table, k, c));
  for (auto [a, b] : config.interaction_domains)
    for (int ca = 0; ca < pop.table.levels(a); ++ca)
      for (int cb = 0; cb < pop.table.levels(b); ++cb)
        domains.push_back(interaction_domain(pop.table, {{a, ca}, {b, cb}}));
  std::vector<double> truth;
  truth.reserve(domains.size());
  for (const auto& d : domains) truth.push_back(pop.domain_mean(d));

  const bool needs_subspace =
      std::any_of(config.methods.begin(), config.methods.end(), [](FitMethod m) {
        return m == FitMethod::basis || m == FitMethod::projection;
      });
  SubspaceBasis basis;
  if (needs_subspace) basis = null_space_basis(loading);

  const int M = static_cast<int>(config.methods.size());
  const int D = static_cast<int>(domains.size());
  std::vector<ReplicateResult> results(config.replicates);

  auto run_one = [&](int r) {
    ReplicateResult& rr = results[r];
    rr.cells.assign(M, std::vector<ReplicateEstimate>(D));
    rr.failed.assign(M, false);
    const std::uint64_t seed_r = Rng::derive(
        config.base_seed, 0x726570ull + static_cast<std::uint64_t>(r));
    const SampleData sample = draw_sample(pop, seed_r);
    if (sample.empty()) {
      rr.skipped = true;
      return;
    }
    const OutcomeData data =
        OutcomeData::from_units(pop.table.J(), sample.unit_cell, sample.y);

    RakeResult rake;
    bool have_rake = false;
    try {
      rake = ipf_rake(sample.table, margins, loading, config.ipf);
      have_rake = true;
    } catch (const Error&) {
      have_rake = false;
    }

    for (int m = 0; m < M; ++m) {
      const FitMethod method = config.methods[m];
      try {
        if (method == FitMethod::ipf) {
          if (!have_rake) throw InfeasibleError("raking infeasible");
          // Use the final table whether or not the sweep limit was hit; the
          // convergence state rides along as a quality flag.
          RakeResult usable = rake;
          usable.converged = true;
          const RakeWeights w = rake_weights(usable, sample.table);
          for (int d = 0; d < D; ++d)
            rr.cells[m][d] =
                ipf_domain_estimate(w, data, domains[d], !rake.converged);
          continue;
        }

        ModelConfig mc = config.model;
        mc.method = method == FitMethod::soft    ? MarginMethod::soft
                    : method == FitMethod::basis ? MarginMethod::basis
                                                 : MarginMethod::projection;
        Eigen::VectorXd classical = have_rake && rake.converged
                                        ? rake.fitted
                                        : independence_init(margins, sample.table);
        std::optional<Eigen::VectorXd> n0;
        std::optional<SubspaceBasis> sb;
        if (mc.method != MarginMethod::soft) {
          n0 = classical;
          sb = basis;
        }
        JointModel model(sample.table, margins, loading, mc, data, n0, sb);

        SamplerConfig sc = config.sampler;
        sc.seed = Rng::derive(seed_r, 0xfeedull + static_cast<std::uint64_t>(m));
        sc.threads = 1;
        PosteriorDraws draws = sample_posterior(model, classical, sc);
        normalize_draws(draws, margins.N);
        const bool flagged = draws.diag.any_flagged;
        for (int d = 0; d < D; ++d) {
          ReplicateEstimate& e = rr.cells[m][d];
          try {
            const EstimateSummary s = mrp_estimate(draws, domains[d]);
            e.est = s.mean;
            e.se = s.se;
            e.lo = s.q025;
            e.hi = s.q975;
            e.ok = true;
            e.flagged = flagged;
          } catch (const Error&) {
            e.missing = true;
          }
        }
      } catch (const Error&) {
        rr.failed[m] = true;
      }
    }
  };

  const int workers = std::max(1, std::min(config.threads, config.replicates));
  if (workers == 1) {
    for (int r = 0; r < config.replicates; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < config.replicates;
             r = next.fetch_add(1))
          run_one(r);
      });
    for (auto& t : pool) t.join();
  }

  ReplicationReport report;
  report.replicates = config.replicates;
  report.se_convention =
      "ipf: weighted-ratio linearization SE with normal 95% intervals; "
      "bayes: posterior SD with central 95% quantile intervals";
  for (const auto& rr : results)
    if (rr.skipped) ++report.skipped_empty;

  for (int m = 0; m < M; ++m) {
    for (int d = 0; d < D; ++d) {
      EstimandMetrics em;
      em.method = to_string(config.methods[m]);
      em.domain = domains[d].name;
      em.truth = truth[d];
      double sum = 0.0, sumsq = 0.0, se_sum = 0.0, len_sum = 0.0;
      int covered = 0;
      for (const auto& rr : results) {
        if (rr.skipped) continue;
        if (rr.failed[m]) {
          ++em.failures;
          continue;
        }
        const ReplicateEstimate& e = rr.cells[m][d];
        if (!e.ok) {
          if (e.missing) ++em.missing;
          continue;
        }
        ++em.used;
        sum += e.est;
        sumsq += (e.est - truth[d]) * (e.est - truth[d]);
        se_sum += e.se;
        len_sum += e.hi - e.lo;
        if (e.lo <= truth[d] && truth[d] <= e.hi) ++covered;
        if (e.flagged) ++em.quality_flags;
      }
      if (em.used > 0) {
        em.mean = sum / em.used;
        em.bias = em.mean - truth[d];
        em.rmse = std::sqrt(sumsq / em.used);
        em.se = se_sum / em.used;
        em.ci_len = len_sum / em.used;
        em.coverage = static_cast<double>(covered) / em.used;
      }
      report.rows.push_back(std::move(em));
    }
  }
  return report;
}

}  // namespace bayesrake
