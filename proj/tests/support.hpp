#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>
#include <string>
#include <vector>

#include "aaa/bayes_engine.hpp"
#include "aaa/json_io.hpp"
#include "aaa/trial_sim.hpp"
#include "aaa/trial_state.hpp"

namespace aaa::fixtures {

inline const std::vector<double> kRawA = {0.1, 0.3, 0.6, 0.9};
inline const std::vector<double> kRawB = {0.1, 0.35, 0.65, 0.95};

inline UtilityParams default_utility() { return calibrate_eta(CalibrationSpec{}); }

// Intercept-only toxicity whose probability at the origin is the largest double <= p.
inline ToxicityParams toxicity_at_most(double p) {
  ToxicityParams t{std::log(p / (1 - p)), 1, 1};
  while (toxicity_prob(t, {0, 0}) > p) t.alpha0 = std::nextafter(t.alpha0, -INFINITY);
  return t;
}

inline TrialConfig config_4x4(std::uint64_t seed = 5) {
  TrialConfig c = make_trial_config(kRawA, kRawB, DesignConfig{}, CalibrationSpec{});
  c.mcmc_total = 1500;
  c.mcmc_burn_in = 750;
  c.seed = seed;
  return c;
}

// Chain whose draws all share one parameter vector.
inline Chain constant_chain(ToxicityParams tox, EfficacyParams eff, std::size_t n = 200) {
  Chain c;
  c.model = eff.model;
  c.draws.assign(n, Draw{tox, eff, 0.0});
  return c;
}

inline ModelFit fit_from_chain(const Chain& chain) {
  ModelFit f;
  for (ModelId m : kAllModels) f.chains[model_index(m)] = chain;
  f.selected = chain.model;
  f.posteriors = {0.0, 0.0, 0.0, 0.0};
  f.posteriors[model_index(chain.model)] = 1.0;
  return f;
}

inline ScenarioSpec load_scenario(const std::string& name) {
  std::ifstream in(std::string(AAA_SCENARIO_DIR) + "/" + name);
  return scenario_from_json(json::parse(in));
}

inline DesignFile load_design() {
  std::ifstream in(std::string(AAA_CONFIG_DIR) + "/design.json");
  return design_file_from_json(json::parse(in));
}

// Single-dose intercept-only toy: y of n responses, p = logistic(theta) with a
// Beta(a, b) prior on p. Draws theta by Metropolis and returns the harmonic
// estimate of log m(y) next to a trapezoid quadrature of the same integral.
struct HarmonicToy {
  double estimate = 0.0;
  double quadrature = 0.0;
};

inline HarmonicToy harmonic_toy(std::uint64_t seed, int retained = 10000, int y = 2, int n = 6,
                                double a = 3.0, double b = 5.0) {
  const double log_beta_ab = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  auto log_lik = [=](double t) {
    const double lp = -std::log1p(std::exp(-t));
    const double lq = -std::log1p(std::exp(t));
    return y * lp + (n - y) * lq;
  };
  auto log_prior = [=](double t) {
    const double lp = -std::log1p(std::exp(-t));
    const double lq = -std::log1p(std::exp(t));
    return a * lp + b * lq - log_beta_ab;
  };

  BlockTarget target;
  target.block_of = {0};
  target.log_density = [&](std::span<const double> th, int) {
    return log_lik(th[0]) + log_prior(th[0]);
  };
  McmcConfig cfg;
  cfg.total = 2 * retained;
  cfg.burn_in = retained;
  cfg.seed = seed;
  const std::vector<double> scales = {1.0};
  const MetropolisResult res = run_metropolis(target, {0.0}, scales, cfg);
  std::vector<double> ll(res.size());
  for (std::size_t i = 0; i < res.size(); ++i) ll[i] = log_lik(res.draw(i)[0]);

  HarmonicToy out;
  out.estimate = marginal_likelihood_harmonic(ll);
  const double lo = -40.0;
  const double hi = 40.0;
  const int m = 400000;
  const double h = (hi - lo) / m;
  double s = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double t = lo + i * h;
    const double w = (i == 0 || i == m) ? 0.5 : 1.0;
    s += w * std::exp(log_lik(t) + log_prior(t));
  }
  out.quadrature = std::log(s * h);
  return out;
}

// Random M4 draw with concave efficacy and positive toxicity slopes.
inline Draw random_draw(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto in = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  Draw d;
  d.tox = {in(-3.0, 0.0), in(0.3, 3.0), in(0.3, 3.0)};
  d.eff = {ModelId::M4, in(-1.0, 1.5), in(-1.0, 1.0), in(-1.0, 1.0), in(-3.0, -0.3), in(-3.0, -0.3)};
  return d;
}

// Exhaustive n x n lattice search of the utility over [lo, hi].
inline DosePair brute_force_argmax(const Draw& d, const UtilityParams& u, DosePair lo, DosePair hi,
                                   int n = 501) {
  DosePair best = lo;
  double best_v = -1.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const DosePair x{lo.a + (hi.a - lo.a) * i / (n - 1), lo.b + (hi.b - lo.b) * j / (n - 1)};
      const double v = overall_utility(x, d.tox, d.eff, u);
      if (v > best_v) {
        best_v = v;
        best = x;
      }
    }
  }
  return best;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("aaa-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace aaa::fixtures
