#include "aaa/bayes_engine.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

#include "aaa/errors.hpp"
#include "aaa/random.hpp"

namespace aaa {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// y log(p) + (n - y) log(1 - p) with p = logistic(eta).
inline double binomial_logit_term(double eta, int y, int n) {
  return -n * softplus(-eta) - (n - y) * eta;
}

double log_cauchy(double x, double scale) {
  const double r = x / scale;
  return -std::log(std::numbers::pi * scale) - std::log1p(r * r);
}

// Gamma(shape 0.5, rate 0.5).
double log_gamma_half(double x) {
  constexpr double shape = 0.5;
  constexpr double rate = 0.5;
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Sampling-scale layout for one model.
struct Layout {
  ModelId model;
  bool quad_a;
  bool quad_b;
  std::size_t dim;
  std::size_t idx_beta3;  // valid only if quad_a
  std::size_t idx_beta4;  // valid only if quad_b

  explicit Layout(ModelId m)
      : model(m), quad_a(has_quadratic_a(m)), quad_b(has_quadratic_b(m)) {
    dim = 6;
    idx_beta3 = quad_a ? dim++ : 0;
    idx_beta4 = quad_b ? dim++ : 0;
  }

  ToxicityParams tox(std::span<const double> t) const {
    return {t[0], std::exp(t[1]), std::exp(t[2])};
  }

  EfficacyParams eff(std::span<const double> t) const {
    EfficacyParams e;
    e.model = model;
    e.beta0 = t[3];
    e.beta1 = t[4];
    e.beta2 = t[5];
    e.beta3 = quad_a ? t[idx_beta3] : 0.0;
    e.beta4 = quad_b ? t[idx_beta4] : 0.0;
    return e;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Data table

void DoseDataTable::add(DosePair x, int y, int z, int n) {
  if (n < 0 || y < 0 || z < 0 || y > n || z > n) {
    throw ValidationError("outcomes", "counts must satisfy 0 <= y, z <= n");
  }
  for (auto& row : rows_) {
    if (row.x == x) {
      row.y += y;
      row.z += z;
      row.n += n;
      return;
    }
  }
  rows_.push_back({x, y, z, n});
}

const DoseRecord* DoseDataTable::find(DosePair x) const {
  for (const auto& row : rows_) {
    if (row.x == x) return &row;
  }
  return nullptr;
}

int DoseDataTable::n_at(DosePair x) const {
  const DoseRecord* r = find(x);
  return r ? r->n : 0;
}

int DoseDataTable::total_n() const {
  int n = 0;
  for (const auto& row : rows_) n += row.n;
  return n;
}

// ---------------------------------------------------------------------------
// Configuration

void IMomHyperparams::validate() const {
  if (!(k > 0.0)) throw ValidationError("imom.k", "k must be positive");
  if (!(nu > 0.0)) throw ValidationError("imom.nu", "nu must be positive");
  if (!(tau > 0.0)) throw ValidationError("imom.tau", "tau must be positive");
}

void McmcConfig::validate() const {
  if (burn_in < 0) throw ValidationError("mcmc.burnIn", "burn-in must be non-negative");
  if (retained() < 100) {
    throw ValidationError("mcmc.iterations", "at least 100 retained draws are required");
  }
  for (double s : proposal_scales) {
    if (!(s > 0.0)) throw ValidationError("mcmc.proposalScales", "scales must be positive");
  }
}

McmcConfig McmcConfig::fast() { return McmcConfig{}; }

McmcConfig McmcConfig::long_run() {
  McmcConfig cfg;
  cfg.total = 10000;
  cfg.burn_in = 5000;
  return cfg;
}

std::vector<std::string> Chain::parameter_names(ModelId model) {
  std::vector<std::string> names = {"alpha0", "alpha1", "alpha2", "beta0", "beta1", "beta2"};
  if (has_quadratic_a(model)) names.emplace_back("beta3");
  if (has_quadratic_b(model)) names.emplace_back("beta4");
  return names;
}

// ---------------------------------------------------------------------------
// Densities

double log_imom_density(double beta, const IMomHyperparams& h) {
  if (beta == 0.0) return kNegInf;
  const double b2 = beta * beta;
  return std::log(h.k) + 0.5 * h.nu * std::log(h.tau) - std::lgamma(h.nu / (2.0 * h.k)) -
         (h.nu + 1.0) * std::log(std::abs(beta)) - std::pow(h.tau / b2, h.k);
}

double log_prior(const ToxicityParams& tox, const EfficacyParams& eff,
                 const IMomHyperparams& hyper) {
  eff.validate();
  if (!(tox.alpha1 > 0.0) || !(tox.alpha2 > 0.0)) return kNegInf;
  double lp = log_cauchy(tox.alpha0, 10.0) + log_gamma_half(tox.alpha1) +
              log_gamma_half(tox.alpha2);
  lp += log_cauchy(eff.beta0, 10.0) + log_cauchy(eff.beta1, 2.5) + log_cauchy(eff.beta2, 2.5);
  if (has_quadratic_a(eff.model)) lp += log_imom_density(eff.beta3, hyper);
  if (has_quadratic_b(eff.model)) lp += log_imom_density(eff.beta4, hyper);
  return lp;
}

double toxicity_log_likelihood(const DoseDataTable& data, const ToxicityParams& tox) {
  double ll = 0.0;
  for (const auto& r : data.rows()) {
    if (r.n > 0) ll += binomial_logit_term(toxicity_logit(tox, r.x), r.y, r.n);
  }
  return ll;
}

double efficacy_log_likelihood(const DoseDataTable& data, const EfficacyParams& eff) {
  double ll = 0.0;
  for (const auto& r : data.rows()) {
    if (r.n > 0) ll += binomial_logit_term(efficacy_logit(eff, r.x), r.z, r.n);
  }
  return ll;
}

double log_likelihood(const DoseDataTable& data, const ToxicityParams& tox,
                      const EfficacyParams& eff) {
  return toxicity_log_likelihood(data, tox) + efficacy_log_likelihood(data, eff);
}

// ---------------------------------------------------------------------------
// Sampler

MetropolisResult run_metropolis(const BlockTarget& target, std::vector<double> init,
                                std::span<const double> scales, const McmcConfig& cfg) {
  cfg.validate();
  const std::size_t dim = init.size();
  if (target.block_of.size() != dim || scales.size() < dim) {
    throw ValidationError("mcmc", "target layout does not match the initial state");
  }

  Rng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> theta = std::move(init);
  std::vector<double> block_lp(static_cast<std::size_t>(target.n_blocks));
  for (int g = 0; g < target.n_blocks; ++g) {
    block_lp[static_cast<std::size_t>(g)] = target.log_density(theta, g);
  }
  for (double lp : block_lp) {
    if (!std::isfinite(lp)) throw McmcError("initial state has zero posterior density");
  }

  std::vector<double> log_scale(dim);
  for (std::size_t i = 0; i < dim; ++i) log_scale[i] = std::log(scales[i]);

  MetropolisResult out;
  out.dim = dim;
  out.draws.reserve(static_cast<std::size_t>(cfg.retained()) * dim);
  std::vector<long> accepted(dim, 0);

  for (int it = 0; it < cfg.total; ++it) {
    const bool burning = it < cfg.burn_in;
    const double gain = 1.0 / std::pow(static_cast<double>(it) + 1.0, 0.6);
    for (std::size_t i = 0; i < dim; ++i) {
      const auto g = static_cast<std::size_t>(target.block_of[i]);
      const double old_value = theta[i];
      theta[i] = old_value + std::exp(log_scale[i]) * normal(rng);
      const double proposal_lp = target.log_density(theta, static_cast<int>(g));
      const double log_ratio = proposal_lp - block_lp[g];
      const bool accept = std::isfinite(proposal_lp) &&
                          (log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio);
      if (accept) {
        block_lp[g] = proposal_lp;
      } else {
        theta[i] = old_value;
      }
      if (burning) {
        if (cfg.adapt_during_burn_in) {
          log_scale[i] += gain * ((accept ? 1.0 : 0.0) - cfg.target_acceptance);
        }
      } else if (accept) {
        ++accepted[i];
      }
    }
    if (!burning) out.draws.insert(out.draws.end(), theta.begin(), theta.end());
  }

  out.acceptance.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    out.acceptance[i] = static_cast<double>(accepted[i]) / cfg.retained();
  }
  return out;
}

Chain sample_posterior(const DoseDataTable& data, ModelId model, const IMomHyperparams& hyper,
                       const McmcConfig& cfg) {
  if (data.empty()) throw ValidationError("data", "posterior sampling needs at least one dose");
  hyper.validate();
  const Layout layout(model);

  BlockTarget target;
  target.n_blocks = 2;
  target.block_of.assign(layout.dim, 1);
  target.block_of[0] = target.block_of[1] = target.block_of[2] = 0;
  target.log_density = [&](std::span<const double> t, int block) {
    if (block == 0) {
      const ToxicityParams tox = layout.tox(t);
      // log-scale slopes: Jacobian log(alpha) = t[1], t[2].
      return toxicity_log_likelihood(data, tox) + log_cauchy(tox.alpha0, 10.0) +
             log_gamma_half(tox.alpha1) + t[1] + log_gamma_half(tox.alpha2) + t[2];
    }
    const EfficacyParams eff = layout.eff(t);
    double lp = efficacy_log_likelihood(data, eff) + log_cauchy(eff.beta0, 10.0) +
                log_cauchy(eff.beta1, 2.5) + log_cauchy(eff.beta2, 2.5);
    if (layout.quad_a) lp += log_imom_density(eff.beta3, hyper);
    if (layout.quad_b) lp += log_imom_density(eff.beta4, hyper);
    return lp;
  };

  // Quadratic terms start on the concave branch, one iMOM mode away from 0.
  std::vector<double> init = {-1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  const double mode = std::sqrt(hyper.tau);
  if (layout.quad_a) init.push_back(-mode);
  if (layout.quad_b) init.push_back(-mode);

  std::vector<double> scales(cfg.proposal_scales.begin(), cfg.proposal_scales.begin() + 6);
  if (layout.quad_a) scales.push_back(cfg.proposal_scales[6]);
  if (layout.quad_b) scales.push_back(cfg.proposal_scales[7]);

  const MetropolisResult res = run_metropolis(target, std::move(init), scales, cfg);

  double mean_acc = 0.0;
  for (double a : res.acceptance) mean_acc += a;
  mean_acc /= static_cast<double>(res.acceptance.size());
  if (mean_acc < 0.01) {
    throw McmcError("chain for " + std::string(model_name(model)) +
                    " rejected nearly every proposal (acceptance " + std::to_string(mean_acc) +
                    ")");
  }

  Chain chain;
  chain.model = model;
  chain.acceptance = res.acceptance;
  chain.draws.reserve(res.size());
  for (std::size_t b = 0; b < res.size(); ++b) {
    const auto t = res.draw(b);
    Draw d{layout.tox(t), layout.eff(t), 0.0};
    d.log_lik = log_likelihood(data, d.tox, d.eff);
    chain.draws.push_back(d);
  }
  return chain;
}

// ---------------------------------------------------------------------------
// Model selection

double marginal_likelihood_harmonic(std::span<const double> log_likelihoods) {
  if (log_likelihoods.empty()) {
    throw ValidationError("chain", "harmonic mean needs at least one draw");
  }
  std::vector<double> neg(log_likelihoods.size());
  std::transform(log_likelihoods.begin(), log_likelihoods.end(), neg.begin(),
                 [](double l) { return -l; });
  return std::log(static_cast<double>(neg.size())) - log_sum_exp(neg);
}

std::array<double, 4> model_posteriors(const std::array<double, 4>& log_marginals,
                                       const std::array<double, 4>& prior_weights) {
  std::array<double, 4> lw{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (std::isnan(log_marginals[i]) || log_marginals[i] == std::numeric_limits<double>::infinity()) {
      throw Error("model posteriors: log marginal likelihoods must be finite or -inf");
    }
    lw[i] = log_marginals[i] + std::log(prior_weights[i]);
  }
  const double norm = log_sum_exp(lw);
  if (!std::isfinite(norm)) throw Error("model posteriors: every model has zero evidence");
  std::array<double, 4> post{};
  for (std::size_t i = 0; i < 4; ++i) post[i] = std::exp(lw[i] - norm);
  return post;
}

ModelId select_mpm(double p3, double p4) {
  const bool a = p3 >= 0.5;
  const bool b = p4 >= 0.5;
  if (a && b) return ModelId::M4;
  if (a) return ModelId::M2;
  if (b) return ModelId::M3;
  return ModelId::M1;
}

ModelFit fit_models(const DoseDataTable& data, const IMomHyperparams& hyper, McmcConfig cfg,
                    std::uint64_t root_seed, bool parallel) {
  ModelFit fit;
  fit.seed = root_seed;

  auto run_one = [&](ModelId m) {
    McmcConfig c = cfg;
    c.seed = derive_seed(root_seed, static_cast<std::uint64_t>(m));
    fit.chains[model_index(m)] = sample_posterior(data, m, hyper, c);
  };

  if (parallel) {
    std::array<std::exception_ptr, 4> errors{};
    {
      std::vector<std::jthread> workers;
      for (ModelId m : kAllModels) {
        workers.emplace_back([&, m] {
          try {
            run_one(m);
          } catch (...) {
            errors[model_index(m)] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (ModelId m : kAllModels) run_one(m);
  }

  for (ModelId m : kAllModels) {
    const auto& chain = fit.chain(m);
    std::vector<double> ll(chain.draws.size());
    std::transform(chain.draws.begin(), chain.draws.end(), ll.begin(),
                   [](const Draw& d) { return d.log_lik; });
    fit.log_marginals[model_index(m)] = marginal_likelihood_harmonic(ll);
  }
  fit.posteriors = model_posteriors(fit.log_marginals);
  fit.p3 = fit.posteriors[1] + fit.posteriors[3];
  fit.p4 = fit.posteriors[2] + fit.posteriors[3];
  fit.selected = select_mpm(fit.p3, fit.p4);
  return fit;
}

void write_chain_csv(std::ostream& os, const Chain& chain) {
  const bool qa = has_quadratic_a(chain.model);
  const bool qb = has_quadratic_b(chain.model);
  os << "alpha0,alpha1,alpha2,beta0,beta1,beta2";
  if (qa) os << ",beta3";
  if (qb) os << ",beta4";
  os << ",loglik\n";
  const auto old_precision = os.precision(17);
  for (const Draw& d : chain.draws) {
    os << d.tox.alpha0 << ',' << d.tox.alpha1 << ',' << d.tox.alpha2 << ',' << d.eff.beta0 << ','
       << d.eff.beta1 << ',' << d.eff.beta2;
    if (qa) os << ',' << d.eff.beta3;
    if (qb) os << ',' << d.eff.beta4;
    os << ',' << d.log_lik << '\n';
  }
  os.precision(old_precision);
}

}  // namespace aaa
