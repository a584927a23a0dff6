#include "bayesrake/run.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "bayesrake/csv.hpp"
#include "bayesrake/error.hpp"
#include "bayesrake/estimate.hpp"
#include "bayesrake/subspace.hpp"

namespace bayesrake {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

json sampler_to_json(const SamplerConfig& s) {
  return json{{"chains", s.chains},
              {"warmup", s.warmup},
              {"iters", s.iters},
              {"seed", s.seed},
              {"target_accept", s.target_accept},
              {"max_depth", s.max_depth}};
}

void sampler_from_json(const json& j, SamplerConfig& s) {
  s.chains = j.value("chains", s.chains);
  s.warmup = j.value("warmup", s.warmup);
  s.iters = j.value("iters", s.iters);
  s.seed = j.value("seed", s.seed);
  s.target_accept = j.value("target_accept", s.target_accept);
  s.max_depth = j.value("max_depth", s.max_depth);
}

json config_to_json(const RunConfig& c) {
  return json{{"schema_version", c.schema_version},
              {"command", c.command},
              {"data", c.data},
              {"margins", c.margins},
              {"method", c.method},
              {"out", c.out_dir},
              {"seed", c.seed},
              {"threads", c.threads},
              {"save_draws", c.save_draws},
              {"model",
               {{"outcome", c.outcome_family},
                {"inclusion_interactions", c.inclusion_interactions},
                {"outcome_interactions", c.outcome_interactions},
                {"cell_effects", c.cell_effects},
                {"soft_family", c.soft_family},
                {"coef_prior_sd", c.coef_prior_sd},
                {"scale_prior_sd", c.scale_prior_sd}}},
              {"sampler", sampler_to_json(c.sampler)},
              {"ipf", {{"tol", c.ipf.tol}, {"max_iter", c.ipf.max_iter}}},
              {"domains",
               {{"overall", c.domains_overall},
                {"margins", c.domains_margins},
                {"interactions", c.domain_interactions},
                {"explicit", c.domain_specs}}}};
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  return out;
}

std::pair<int, int> resolve_pair(const CellTable& table,
                                 const std::vector<std::string>& names) {
  if (names.size() != 2) throw ParseError("interaction needs exactly 2 variables");
  const int a = table.variable_index(names[0]);
  const int b = table.variable_index(names[1]);
  if (a < 0 || b < 0)
    throw ParseError("unknown interaction variable '" +
                     (a < 0 ? names[0] : names[1]) + "'");
  return {a, b};
}

struct Ingested {
  CellTable table;
  MarginSet margins;
  LoadingMatrix loading;
  std::vector<int> unit_cell;
  Eigen::VectorXd outcome;
  bool has_outcome = false;
};

Ingested ingest(const RunConfig& config) {
  const MarginFile mf = read_margins_csv(config.margins);
  const Microdata md = read_microdata_csv(config.data);

  // Map microdata columns onto the margin file's variables by name.
  std::vector<int> col_of_var;
  for (const auto& v : mf.variables) {
    auto it = std::find(md.columns.begin(), md.columns.end(), v.name);
    if (it == md.columns.end())
      throw ParseError("microdata lacks column '" + v.name + "'");
    col_of_var.push_back(static_cast<int>(it - md.columns.begin()));
  }

  std::vector<std::vector<std::string>> units;
  units.reserve(md.rows.size());
  for (const auto& row : md.rows) {
    std::vector<std::string> u;
    u.reserve(col_of_var.size());
    for (int c : col_of_var) u.push_back(row[c]);
    units.push_back(std::move(u));
  }

  CellTable table = CellTable::build(mf.variables, units);
  MarginSet margins = assemble_margins(mf, table);
  const MarginConsistency consistency = check_margin_consistency(margins);
  if (!consistency.consistent && !consistency.degenerate)
    throw InfeasibleError("inconsistent control totals (max deviation " +
                          std::to_string(consistency.max_abs_deviation) + ")");
  LoadingMatrix loading = LoadingMatrix::build(table, margins.terms);

  Ingested in{std::move(table), std::move(margins), std::move(loading), {}, {}, false};
  in.unit_cell.reserve(units.size());
  for (const auto& u : units) in.unit_cell.push_back(in.table.cell_of(u));
  in.has_outcome = md.has_outcome;
  if (md.has_outcome) in.outcome = md.outcome;
  return in;
}

json estimate_to_json(const EstimateSummary& e) {
  return json{{"domain", e.domain},   {"mean", e.mean},
              {"se", e.se},           {"q025", e.q025},
              {"q975", e.q975},       {"draws", e.draws},
              {"missing_draws", e.missing_draws}};
}

void write_estimates(const fs::path& dir,
                     const std::vector<EstimateSummary>& estimates) {
  {
    auto out = open_out(dir / "estimates.csv");
    out << "domain,mean,se,q025,q975,draws,missing_draws\n"
        << std::setprecision(12);
    for (const auto& e : estimates)
      out << '"' << e.domain << "\"," << e.mean << ',' << e.se << ',' << e.q025
          << ',' << e.q975 << ',' << e.draws << ',' << e.missing_draws << '\n';
  }
  json j = json::array();
  for (const auto& e : estimates) j.push_back(estimate_to_json(e));
  open_out(dir / "estimates.json") << j.dump(2) << '\n';
}

json diagnostics_to_json(const DiagnosticsReport& diag) {
  json coords = json::array();
  for (const auto& c : diag.coords) {
    json jc{{"name", c.name}, {"ess", c.ess}, {"flagged", c.flagged}};
    if (std::isfinite(c.rhat))
      jc["rhat"] = c.rhat;
    else
      jc["rhat"] = nullptr;
    coords.push_back(std::move(jc));
  }
  return json{{"rhat_available", diag.rhat_available},
              {"max_rhat", std::isfinite(diag.max_rhat) ? json(diag.max_rhat) : json(nullptr)},
              {"min_ess", std::isfinite(diag.min_ess) ? json(diag.min_ess) : json(nullptr)},
              {"divergences", diag.divergences},
              {"divergence_rate", diag.divergence_rate},
              {"max_depth_hits", diag.max_depth_hits},
              {"any_flagged", diag.any_flagged},
              {"coordinates", std::move(coords)}};
}

void write_manifest(const fs::path& dir, const json& config_json) {
  json manifest{{"tool", "rake"},
                {"version", kVersion},
                {"config", config_json}};
  open_out(dir / "manifest.json") << manifest.dump(2) << '\n';
}

std::vector<Domain> build_domains(const RunConfig& config, const CellTable& table) {
  std::vector<Domain> domains;
  if (config.domains_overall) domains.push_back(overall_domain(table));
  if (config.domains_margins)
    for (int k = 0; k < table.K(); ++k)
      for (int c = 0; c < table.levels(k); ++c)
        domains.push_back(level_domain(table, k, c));
  for (const auto& names : config.domain_interactions) {
    auto [a, b] = resolve_pair(table, names);
    for (int ca = 0; ca < table.levels(a); ++ca)
      for (int cb = 0; cb < table.levels(b); ++cb)
        domains.push_back(interaction_domain(table, {{a, ca}, {b, cb}}));
  }
  for (const auto& spec : config.domain_specs) {
    std::vector<std::pair<int, int>> constraints;
    for (const auto& item : spec) {
      const auto eq = item.find('=');
      if (eq == std::string::npos)
        throw ParseError("domain constraint '" + item + "' is not var=level");
      const int k = table.variable_index(item.substr(0, eq));
      if (k < 0) throw ParseError("unknown domain variable in '" + item + "'");
      const int c = table.level_index(k, item.substr(eq + 1));
      if (c < 0) throw ParseError("unknown domain level in '" + item + "'");
      constraints.emplace_back(k, c);
    }
    domains.push_back(interaction_domain(table, constraints));
  }
  if (domains.empty()) throw ParseError("no estimand domains configured");
  return domains;
}

void run_ipf_command(const RunConfig& config, const fs::path& dir) {
  Ingested in = ingest(config);
  const RakeResult result = ipf_rake(in.table, in.margins, in.loading, config.ipf);

  json cells = json::array();
  for (int j = 0; j < in.table.J(); ++j)
    cells.push_back({{"cell", in.table.cell_label(j)},
                     {"n", in.table.count(j)},
                     {"fitted", result.fitted[j]}});
  json out{{"converged", result.converged},
           {"iterations", result.iterations},
           {"max_rel_margin_dev", result.max_rel_margin_dev},
           {"kl", std::isfinite(result.kl) ? json(result.kl) : json("inf")},
           {"N", in.margins.N},
           {"n", in.table.n()},
           {"cells", std::move(cells)}};
  if (result.converged) {
    const RakeWeights w = rake_weights(result, in.table);
    json weights = json::array();
    for (int j = 0; j < in.table.J(); ++j)
      if (w.defined[j])
        weights.push_back(
            {{"cell", in.table.cell_label(j)}, {"weight", w.weights[j]}});
    out["weights"] = std::move(weights);
  }
  open_out(dir / "ipf.json") << out.dump(2) << '\n';
}

void run_bayes_command(const RunConfig& config, const fs::path& dir) {
  Ingested in = ingest(config);

  ModelConfig mc;
  mc.method = margin_method_from_string(config.method);
  mc.soft_family = config.soft_family == "normal" ? SoftFamily::normal
                                                  : SoftFamily::poisson;
  mc.family = outcome_family_from_string(config.outcome_family);
  mc.cell_effects = config.cell_effects;
  mc.coef_prior_sd = config.coef_prior_sd;
  mc.scale_prior_sd = config.scale_prior_sd;
  for (const auto& names : config.inclusion_interactions)
    mc.inclusion_interactions.push_back(resolve_pair(in.table, names));
  for (const auto& names : config.outcome_interactions)
    mc.outcome_interactions.push_back(resolve_pair(in.table, names));

  std::optional<OutcomeData> data;
  if (mc.family != OutcomeFamily::none) {
    if (!in.has_outcome)
      throw ParseError("outcome model requested but microdata has no outcome column");
    data = OutcomeData::from_units(in.table.J(), in.unit_cell, in.outcome);
  }

  RakeResult rake;
  bool raked = false;
  try {
    rake = ipf_rake(in.table, in.margins, in.loading, config.ipf);
    raked = true;
  } catch (const InfeasibleError&) {
    if (mc.method != MarginMethod::soft) throw;
  }
  const Eigen::VectorXd classical = raked && rake.converged
                                        ? rake.fitted
                                        : independence_init(in.margins, in.table);

  std::optional<Eigen::VectorXd> n0;
  std::optional<SubspaceBasis> basis;
  if (mc.method != MarginMethod::soft) {
    basis = null_space_basis(in.loading);
    n0 = classical;
  }
  JointModel model(in.table, in.margins, in.loading, mc, data, n0, basis);

  SamplerConfig sc = config.sampler;
  sc.seed = config.seed;
  sc.threads = config.threads;
  PosteriorDraws draws = sample_posterior(model, classical, sc);
  normalize_draws(draws, in.margins.N);

  if (mc.family != OutcomeFamily::none) {
    const auto domains = build_domains(config, in.table);
    write_estimates(dir, estimate_report(draws, domains));
  }

  // Posterior cell counts always reported.
  {
    auto out = open_out(dir / "cells.csv");
    out << "cell,n,mean_count,se_count\n" << std::setprecision(12);
    for (int j = 0; j < in.table.J(); ++j) {
      const Eigen::VectorXd col = draws.n_hat.col(j);
      const double mean = col.mean();
      const double sd = std::sqrt(
          (col.array() - mean).square().sum() /
          std::max<double>(1.0, static_cast<double>(col.size()) - 1.0));
      out << '"' << in.table.cell_label(j) << "\"," << in.table.count(j) << ','
          << mean << ',' << sd << '\n';
    }
  }
  open_out(dir / "diagnostics.json") << diagnostics_to_json(draws.diag).dump(2)
                                     << '\n';
  if (config.save_draws) write_draws_csv((dir / "draws.csv").string(), draws.raw);
}

}  // namespace

std::string RunConfig::to_json() const { return config_to_json(*this).dump(2); }

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config parse error: ") + e.what());
  }
  RunConfig c;
  c.schema_version = j.value("schema_version", 1);
  if (c.schema_version != 1)
    throw ParseError("unsupported config schema version");
  c.command = j.value("command", c.command);
  c.data = j.value("data", c.data);
  c.margins = j.value("margins", c.margins);
  c.method = j.value("method", c.method);
  c.out_dir = j.value("out", c.out_dir);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  c.save_draws = j.value("save_draws", c.save_draws);
  if (j.contains("model")) {
    const json& m = j["model"];
    c.outcome_family = m.value("outcome", c.outcome_family);
    c.inclusion_interactions =
        m.value("inclusion_interactions", c.inclusion_interactions);
    c.outcome_interactions =
        m.value("outcome_interactions", c.outcome_interactions);
    c.cell_effects = m.value("cell_effects", c.cell_effects);
    c.soft_family = m.value("soft_family", c.soft_family);
    c.coef_prior_sd = m.value("coef_prior_sd", c.coef_prior_sd);
    c.scale_prior_sd = m.value("scale_prior_sd", c.scale_prior_sd);
  }
  if (j.contains("sampler")) sampler_from_json(j["sampler"], c.sampler);
  if (j.contains("ipf")) {
    c.ipf.tol = j["ipf"].value("tol", c.ipf.tol);
    c.ipf.max_iter = j["ipf"].value("max_iter", c.ipf.max_iter);
  }
  if (j.contains("domains")) {
    const json& d = j["domains"];
    c.domains_overall = d.value("overall", c.domains_overall);
    c.domains_margins = d.value("margins", c.domains_margins);
    c.domain_interactions = d.value("interactions", c.domain_interactions);
    c.domain_specs = d.value("explicit", c.domain_specs);
  }
  return c;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void run(const RunConfig& config) {
  const fs::path dir(config.out_dir);
  fs::create_directories(dir);
  if (config.command == "ipf")
    run_ipf_command(config, dir);
  else if (config.command == "bayes")
    run_bayes_command(config, dir);
  else
    throw ParseError("unknown command '" + config.command + "'");
  write_manifest(dir, config_to_json(config));
}

// ---- simulate -------------------------------------------------------------

namespace {

EffectSpec parse_effect(const json& j, const CellTable& layout) {
  EffectSpec e;
  e.intercept = j.value("intercept", 0.0);
  e.main.resize(layout.K());
  for (int k = 0; k < layout.K(); ++k)
    e.main[k] = Eigen::VectorXd::Zero(layout.levels(k));
  if (j.contains("main")) {
    for (const auto& [name, coefs] : j["main"].items()) {
      const int k = layout.variable_index(name);
      if (k < 0) throw ParseError("effect references unknown variable '" + name + "'");
      const auto vals = coefs.get<std::vector<double>>();
      if (static_cast<int>(vals.size()) != layout.levels(k))
        throw ParseError("effect for '" + name + "' needs one value per level");
      for (int c = 0; c < layout.levels(k); ++c) e.main[k][c] = vals[c];
    }
  }
  if (j.contains("interactions")) {
    for (const auto& ji : j["interactions"]) {
      auto [a, b] = resolve_pair(layout, ji.at("vars").get<std::vector<std::string>>());
      Association assoc;
      assoc.var1 = a;
      assoc.var2 = b;
      const auto rows = ji.at("coef").get<std::vector<std::vector<double>>>();
      assoc.multiplier = Eigen::MatrixXd::Zero(layout.levels(a), layout.levels(b));
      if (static_cast<int>(rows.size()) != layout.levels(a))
        throw ParseError("interaction coef needs one row per level");
      for (int ca = 0; ca < layout.levels(a); ++ca) {
        if (static_cast<int>(rows[ca].size()) != layout.levels(b))
          throw ParseError("interaction coef row width mismatch");
        for (int cb = 0; cb < layout.levels(b); ++cb)
          assoc.multiplier(ca, cb) = rows[ca][cb];
      }
      e.interactions.push_back(std::move(assoc));
    }
  }
  return e;
}

}  // namespace

ScenarioConfig parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario parse error: ") + e.what());
  }
  if (j.value("schema_version", 1) != 1)
    throw ParseError("unsupported scenario schema version");

  ScenarioConfig sc;
  const json& jp = j.at("population");
  for (const auto& jv : jp.at("variables")) {
    RakingVariable v;
    v.name = jv.at("name").get<std::string>();
    v.levels = jv.at("levels").get<std::vector<std::string>>();
    v.validate();
    sc.population.variables.push_back(std::move(v));
    const auto probs = jv.at("probs").get<std::vector<double>>();
    Eigen::VectorXd p(probs.size());
    for (size_t i = 0; i < probs.size(); ++i) p[i] = probs[i];
    const double total = p.sum();
    if (!(total > 0)) throw ParseError("level probabilities must sum positive");
    sc.population.level_probs.push_back(p / total);
  }
  const CellTable layout = CellTable::empty(sc.population.variables);

  sc.population.N = jp.at("N").get<long>();
  sc.population.seed = jp.value("seed", 1);
  if (jp.contains("assoc")) {
    for (const auto& ja : jp["assoc"]) {
      auto [a, b] = resolve_pair(layout, ja.at("vars").get<std::vector<std::string>>());
      Association assoc;
      assoc.var1 = a;
      assoc.var2 = b;
      const auto rows = ja.at("multipliers").get<std::vector<std::vector<double>>>();
      assoc.multiplier = Eigen::MatrixXd::Ones(layout.levels(a), layout.levels(b));
      for (int ca = 0; ca < layout.levels(a) && ca < static_cast<int>(rows.size()); ++ca)
        for (int cb = 0; cb < layout.levels(b) &&
                         cb < static_cast<int>(rows[ca].size()); ++cb)
          assoc.multiplier(ca, cb) = rows[ca][cb];
      sc.population.assoc.push_back(std::move(assoc));
    }
  }
  sc.population.inclusion = parse_effect(jp.at("inclusion"), layout);
  const json& jo = jp.at("outcome");
  sc.population.family = outcome_family_from_string(jo.at("family").get<std::string>());
  if (sc.population.family == OutcomeFamily::binary ||
      sc.population.family == OutcomeFamily::continuous)
    sc.population.outcome = parse_effect(jo, layout);
  sc.population.noise_sd = jo.value("noise_sd", 1.0);

  if (j.contains("raking_terms")) {
    for (const auto& jt : j["raking_terms"]) {
      MarginTerm term;
      for (const auto& name : jt.get<std::vector<std::string>>()) {
        const int k = layout.variable_index(name);
        if (k < 0) throw ParseError("raking term references unknown variable");
        term.vars.push_back(k);
      }
      sc.raking_terms.push_back(std::move(term));
    }
  }
  for (const auto& m : j.at("methods").get<std::vector<std::string>>())
    sc.methods.push_back(fit_method_from_string(m));
  sc.replicates = j.value("replicates", 100);
  sc.base_seed = j.value("base_seed", 1);
  sc.threads = j.value("threads", 1);

  if (j.contains("estimands")) {
    const json& je = j["estimands"];
    sc.overall = je.value("overall", true);
    sc.margin_level_domains = je.value("margins", false);
    if (je.contains("interactions"))
      for (const auto& ji : je["interactions"])
        sc.interaction_domains.push_back(
            resolve_pair(layout, ji.get<std::vector<std::string>>()));
  }

  // Fitted model defaults to the generative structure.
  sc.model.family = sc.population.family;
  sc.model.inclusion_interactions = sc.population.inclusion.pairs();
  sc.model.outcome_interactions = sc.population.outcome.pairs();
  sc.sampler.chains = 2;
  sc.sampler.warmup = 500;
  sc.sampler.iters = 500;
  if (j.contains("fit")) {
    const json& jf = j["fit"];
    if (jf.contains("model")) {
      const json& jm = jf["model"];
      if (jm.contains("outcome"))
        sc.model.family =
            outcome_family_from_string(jm["outcome"].get<std::string>());
      sc.model.soft_family = jm.value("soft_family", std::string("poisson")) ==
                                     "normal"
                                 ? SoftFamily::normal
                                 : SoftFamily::poisson;
      sc.model.cell_effects = jm.value("cell_effects", false);
      sc.model.coef_prior_sd = jm.value("coef_prior_sd", 5.0);
      sc.model.scale_prior_sd = jm.value("scale_prior_sd", 5.0);
      if (jm.contains("inclusion_interactions")) {
        sc.model.inclusion_interactions.clear();
        for (const auto& ji : jm["inclusion_interactions"])
          sc.model.inclusion_interactions.push_back(
              resolve_pair(layout, ji.get<std::vector<std::string>>()));
      }
      if (jm.contains("outcome_interactions")) {
        sc.model.outcome_interactions.clear();
        for (const auto& ji : jm["outcome_interactions"])
          sc.model.outcome_interactions.push_back(
              resolve_pair(layout, ji.get<std::vector<std::string>>()));
      }
    }
    if (jf.contains("sampler")) sampler_from_json(jf["sampler"], sc.sampler);
    if (jf.contains("ipf")) {
      sc.ipf.tol = jf["ipf"].value("tol", sc.ipf.tol);
      sc.ipf.max_iter = jf["ipf"].value("max_iter", sc.ipf.max_iter);
    }
  }
  return sc;
}

std::string format_replication_table(const ReplicationReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "method" << std::setw(34) << "estimand"
     << std::right << std::setw(10) << "Mean" << std::setw(10) << "Bias"
     << std::setw(10) << "RMSE" << std::setw(10) << "SE" << std::setw(10)
     << "CI-len" << std::setw(10) << "Coverage" << std::setw(7) << "used"
     << std::setw(6) << "fail" << '\n';
  os << std::string(119, '-') << '\n';
  os << std::fixed << std::setprecision(3);
  for (const auto& r : report.rows) {
    os << std::left << std::setw(12) << r.method << std::setw(34)
       << (r.domain.size() > 33 ? r.domain.substr(0, 33) : r.domain)
       << std::right << std::setw(10) << r.mean << std::setw(10) << r.bias
       << std::setw(10) << r.rmse << std::setw(10) << r.se << std::setw(10)
       << r.ci_len << std::setw(10) << r.coverage << std::setw(7) << r.used
       << std::setw(6) << r.failures << '\n';
  }
  os << "replicates: " << report.replicates
     << "  skipped-empty: " << report.skipped_empty << '\n'
     << "intervals: " << report.se_convention << '\n';
  return os.str();
}

void write_replication_csv(const std::string& path,
                           const ReplicationReport& report) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << "method,domain,truth,mean,bias,rmse,se,ci_len,coverage,used,failures,"
         "missing,quality_flags\n"
      << std::setprecision(12);
  for (const auto& r : report.rows)
    out << r.method << ",\"" << r.domain << "\"," << r.truth << ',' << r.mean
        << ',' << r.bias << ',' << r.rmse << ',' << r.se << ',' << r.ci_len
        << ',' << r.coverage << ',' << r.used << ',' << r.failures << ','
        << r.missing << ',' << r.quality_flags << '\n';
}

void run_simulation(const std::string& scenario_path, const std::string& out_dir,
                    int threads) {
  ScenarioConfig sc = parse_scenario_file(scenario_path);
  if (threads > 0) sc.threads = threads;
  const ReplicationReport report = run_replications(sc);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_replication_csv((dir / "report.csv").string(), report);
  open_out(dir / "report.txt") << format_replication_table(report);

  std::ifstream in(scenario_path);
  std::stringstream ss;
  ss << in.rdbuf();
  json manifest{{"tool", "rake"},
                {"version", kVersion},
                {"command", "simulate"},
                {"scenario", json::parse(ss.str())}};
  open_out(dir / "manifest.json") << manifest.dump(2) << '\n';
  std::cout << format_replication_table(report);
}

void run_diagnose(const std::string& draws_path, const std::string& out_path) {
  const Draws draws = read_draws_csv(draws_path);
  const DiagnosticsReport rep = diagnostics(draws);
  const json j = diagnostics_to_json(rep);
  if (!out_path.empty()) open_out(out_path) << j.dump(2) << '\n';
  std::cout << "coordinates: " << rep.coords.size()
            << "  max R-hat: " << rep.max_rhat << "  min ESS: " << rep.min_ess
            << (rep.any_flagged ? "  [FLAGGED]" : "  [clean]") << '\n';
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return 2;
  if (dynamic_cast<const InfeasibleError*>(&e)) return 3;
  if (dynamic_cast<const InitError*>(&e)) return 4;
  return 1;
}

void write_error_record(const std::string& out_dir, const std::exception& e) {
  std::string type = "error";
  if (dynamic_cast<const ParseError*>(&e)) type = "parse";
  else if (dynamic_cast<const InfeasibleError*>(&e)) type = "infeasible";
  else if (dynamic_cast<const InitError*>(&e)) type = "init";
  const json j{{"error", e.what()}, {"type", type}};
  std::cerr << j.dump() << '\n';
  try {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "error.json");
    out << j.dump(2) << '\n';
  } catch (...) {
  }
}

}  // namespace bayesrake
