#include "bayesrake/sampler.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "bayesrake/error.hpp"
#include "bayesrake/rng.hpp"

namespace bayesrake {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDivergenceThreshold = 1000.0;  // in H - H0

double logaddexp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

struct State {
  Eigen::VectorXd q, p, grad;
  double logp = -kInf;
};

double kinetic(const Eigen::VectorXd& p, const Eigen::VectorXd& inv_mass) {
  return 0.5 * p.dot(inv_mass.cwiseProduct(p));
}

void leapfrog(const Target& target, const Eigen::VectorXd& inv_mass, State& s,
              double eps) {
  s.p += 0.5 * eps * s.grad;
  s.q += eps * inv_mass.cwiseProduct(s.p);
  s.logp = target.logp(s.q, &s.grad);
  if (!std::isfinite(s.logp)) s.grad.setZero();
  s.p += 0.5 * eps * s.grad;
}

bool uturn(const State& minus, const State& plus,
           const Eigen::VectorXd& inv_mass) {
  const Eigen::VectorXd dq = plus.q - minus.q;
  return dq.dot(inv_mass.cwiseProduct(minus.p)) < 0.0 ||
         dq.dot(inv_mass.cwiseProduct(plus.p)) < 0.0;
}

struct Tree {
  State minus, plus;
  Eigen::VectorXd q_prop;
  double lsw = -kInf;  // log sum of exp(H0 - H) over the subtree
  bool ok = false;     // expandable: no divergence, no internal u-turn
  bool divergent = false;
};

// Multinomial NUTS subtree of 2^depth leapfrog steps from one endpoint.
Tree build_tree(int depth, const State& from, int dir, double eps, double h0,
                const Target& target, const Eigen::VectorXd& inv_mass,
                Rng& rng, double& sum_alpha, int& n_alpha) {
  if (depth == 0) {
    Tree t;
    State s = from;
    leapfrog(target, inv_mass, s, dir * eps);
    const double h = std::isfinite(s.logp) ? -s.logp + kinetic(s.p, inv_mass) : kInf;
    const double dh = h0 - h;  // log weight of the new state
    sum_alpha += std::isfinite(dh) ? std::exp(std::min(0.0, dh)) : 0.0;
    ++n_alpha;
    t.divergent = !(h - h0 < kDivergenceThreshold);
    t.ok = !t.divergent;
    t.lsw = t.divergent ? -kInf : dh;
    t.q_prop = s.q;
    t.minus = s;
    t.plus = std::move(s);
    return t;
  }
  Tree first = build_tree(depth - 1, from, dir, eps, h0, target, inv_mass, rng,
                          sum_alpha, n_alpha);
  if (!first.ok) return first;
  const State& edge = dir == 1 ? first.plus : first.minus;
  Tree second = build_tree(depth - 1, edge, dir, eps, h0, target, inv_mass, rng,
                           sum_alpha, n_alpha);
  Tree t;
  t.divergent = first.divergent || second.divergent;
  if (!second.ok) {
    t.ok = false;
    return t;
  }
  t.minus = dir == 1 ? std::move(first.minus) : std::move(second.minus);
  t.plus = dir == 1 ? std::move(second.plus) : std::move(first.plus);
  t.lsw = logaddexp(first.lsw, second.lsw);
  t.q_prop = std::log(rng.u01()) < second.lsw - t.lsw ? std::move(second.q_prop)
                                                      : std::move(first.q_prop);
  t.ok = !uturn(t.minus, t.plus, inv_mass);
  return t;
}

struct Transition {
  bool divergent = false;
  bool hit_max_depth = false;
  double accept_stat = 0.0;
};

Transition nuts_transition(const Target& target, const Eigen::VectorXd& inv_mass,
                           double eps, int max_depth, State& s, Rng& rng) {
  for (Eigen::Index i = 0; i < s.p.size(); ++i)
    s.p[i] = rng.normal() / std::sqrt(inv_mass[i]);
  const double h0 = -s.logp + kinetic(s.p, inv_mass);

  Tree tree;
  tree.minus = s;
  tree.plus = s;
  tree.q_prop = s.q;
  tree.lsw = 0.0;
  double sum_alpha = 0.0;
  int n_alpha = 0;

  Transition tr;
  int depth = 0;
  for (; depth < max_depth; ++depth) {
    const int dir = rng.u01() < 0.5 ? -1 : 1;
    const State& from = dir == 1 ? tree.plus : tree.minus;
    Tree sub = build_tree(depth, from, dir, eps, h0, target, inv_mass, rng,
                          sum_alpha, n_alpha);
    tr.divergent = tr.divergent || sub.divergent;
    if (!sub.ok) break;
    // Biased progressive sampling toward the new subtree.
    if (std::log(rng.u01()) < sub.lsw - tree.lsw) tree.q_prop = sub.q_prop;
    tree.lsw = logaddexp(tree.lsw, sub.lsw);
    if (dir == 1)
      tree.plus = std::move(sub.plus);
    else
      tree.minus = std::move(sub.minus);
    if (uturn(tree.minus, tree.plus, inv_mass)) {
      ++depth;
      break;
    }
  }
  tr.hit_max_depth = depth >= max_depth;
  tr.accept_stat = n_alpha > 0 ? sum_alpha / n_alpha : 0.0;

  if (tree.q_prop != s.q) {
    s.q = tree.q_prop;
    s.logp = target.logp(s.q, &s.grad);
  }
  return tr;
}

double find_reasonable_step(const Target& target, const Eigen::VectorXd& inv_mass,
                            const State& anchor, Rng& rng) {
  State s0 = anchor;
  for (Eigen::Index i = 0; i < s0.q.size(); ++i)
    s0.p[i] = rng.normal() / std::sqrt(inv_mass[i]);
  const double h0 = -s0.logp + kinetic(s0.p, inv_mass);

  auto accept_at = [&](double eps) {
    State s = s0;
    leapfrog(target, inv_mass, s, eps);
    if (!std::isfinite(s.logp)) return 0.0;
    const double h = -s.logp + kinetic(s.p, inv_mass);
    return std::exp(std::min(0.0, h0 - h));
  };

  double eps = 1.0;
  const int dir = accept_at(eps) > 0.5 ? 1 : -1;
  for (int i = 0; i < 100; ++i) {
    eps *= dir == 1 ? 2.0 : 0.5;
    const double a = accept_at(eps);
    if ((dir == 1 && a < 0.5) || (dir == -1 && a > 0.5)) break;
    if (eps > 1e6 || eps < 1e-10) break;
  }
  return std::clamp(eps, 1e-10, 1e6);
}

// Nesterov dual averaging toward the target acceptance statistic.
struct DualAverage {
  double target = 0.8;
  double mu = 0.0, log_eps = 0.0, log_eps_bar = 0.0, h_bar = 0.0;
  int m = 0;

  void restart(double eps0) {
    mu = std::log(10.0 * eps0);
    log_eps = std::log(eps0);
    log_eps_bar = std::log(eps0);
    h_bar = 0.0;
    m = 0;
  }
  void update(double alpha) {
    constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;
    ++m;
    h_bar += (target - alpha - h_bar) / (m + t0);
    log_eps = mu - std::sqrt(static_cast<double>(m)) / gamma * h_bar;
    const double w = std::pow(static_cast<double>(m), -kappa);
    log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
  }
};

struct Welford {
  Eigen::VectorXd mean, m2;
  long n = 0;

  void reset(int dim) {
    mean = Eigen::VectorXd::Zero(dim);
    m2 = Eigen::VectorXd::Zero(dim);
    n = 0;
  }
  void add(const Eigen::VectorXd& x) {
    ++n;
    const Eigen::VectorXd delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta.cwiseProduct(x - mean);
  }
  // Regularized variance estimate (shrunk toward a small diagonal).
  Eigen::VectorXd variance() const {
    const double dn = static_cast<double>(n);
    Eigen::VectorXd var = m2 / std::max(dn - 1.0, 1.0);
    return (dn / (dn + 5.0)) * var +
           Eigen::VectorXd::Constant(var.size(), 1e-3 * (5.0 / (dn + 5.0)));
  }
};

void run_chain(const Target& target, const Eigen::VectorXd& init,
               const SamplerConfig& cfg, int chain, Eigen::MatrixXd& out,
               ChainStats& stats) {
  Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(chain) + 1);

  State s;
  s.q = init;
  s.p = Eigen::VectorXd::Zero(target.dim);
  s.logp = target.logp(s.q, &s.grad);
  if (!std::isfinite(s.logp))
    throw InitError("chain " + std::to_string(chain) +
                    ": zero density at the initial state");

  Eigen::VectorXd inv_mass = Eigen::VectorXd::Ones(target.dim);
  DualAverage da;
  da.target = cfg.target_accept;
  da.restart(find_reasonable_step(target, inv_mass, s, rng));

  // Mass-matrix adaptation windows: an initial step-size-only buffer, then
  // doubling variance-estimation windows, then a final step-size buffer.
  int init_buffer = 75, term_buffer = 50, base_window = 25;
  if (cfg.warmup < init_buffer + term_buffer + base_window) {
    init_buffer = static_cast<int>(0.15 * cfg.warmup);
    term_buffer = static_cast<int>(0.10 * cfg.warmup);
    base_window = cfg.warmup - init_buffer - term_buffer;
  }
  const int adapt_end = cfg.warmup - term_buffer;
  int window_size = base_window;
  int window_close = init_buffer + window_size;
  if (window_close + 2 * window_size > adapt_end) window_close = adapt_end;
  Welford wf;
  wf.reset(target.dim);

  double eps_final = std::exp(da.log_eps_bar);
  double accept_sum = 0.0;

  const int total = cfg.warmup + cfg.iters;
  for (int iter = 0; iter < total; ++iter) {
    const bool warm = iter < cfg.warmup;
    const double eps = warm ? std::exp(da.log_eps) : eps_final;
    const Transition tr =
        nuts_transition(target, inv_mass, eps, cfg.max_depth, s, rng);

    if (warm) {
      da.update(tr.accept_stat);
      if (base_window > 0 && iter >= init_buffer && iter < adapt_end) {
        wf.add(s.q);
        if (iter + 1 == window_close) {
          inv_mass = wf.variance();
          wf.reset(target.dim);
          da.restart(find_reasonable_step(target, inv_mass, s, rng));
          window_size *= 2;
          window_close = std::min(window_close + window_size, adapt_end);
          if (window_close + 2 * window_size > adapt_end) window_close = adapt_end;
        }
      }
      if (iter + 1 == cfg.warmup) eps_final = std::exp(da.log_eps_bar);
    } else {
      out.row(iter - cfg.warmup) = s.q;
      stats.divergences += tr.divergent ? 1 : 0;
      stats.max_depth_hits += tr.hit_max_depth ? 1 : 0;
      accept_sum += tr.accept_stat;
    }
  }
  stats.mean_accept = accept_sum / cfg.iters;
  stats.step_size = eps_final;
}

}  // namespace

void SamplerConfig::validate() const {
  if (chains < 1 || warmup < 1 || iters < 1)
    throw Error("sampler counts must be at least 1");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw Error("target acceptance must lie in (0,1)");
  if (max_depth < 1 || max_depth > 20) throw Error("max depth out of range");
}

int Draws::total_divergences() const {
  int d = 0;
  for (const auto& s : stats) d += s.divergences;
  return d;
}

Draws sample(const Target& target, const std::vector<Eigen::VectorXd>& inits,
             const SamplerConfig& config) {
  config.validate();
  if (static_cast<int>(inits.size()) != config.chains)
    throw Error("need one initial state per chain");

  Draws draws;
  draws.chains = config.chains;
  draws.iters = config.iters;
  draws.dim = target.dim;
  draws.names = target.names;
  draws.chain_draws.assign(config.chains,
                           Eigen::MatrixXd(config.iters, target.dim));
  draws.stats.assign(config.chains, ChainStats{});

  const int workers = std::max(1, std::min(config.threads, config.chains));
  if (workers == 1) {
    for (int c = 0; c < config.chains; ++c)
      run_chain(target, inits[c], config, c, draws.chain_draws[c], draws.stats[c]);
    return draws;
  }

  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(config.chains);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int c = next.fetch_add(1); c < config.chains; c = next.fetch_add(1)) {
        try {
          run_chain(target, inits[c], config, c, draws.chain_draws[c],
                    draws.stats[c]);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return draws;
}

}  // namespace bayesrake
