#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "aaa/dose_model.hpp"

namespace aaa {

// Outcome counts at one tried dose (completers only).
struct DoseRecord {
  DosePair x;
  int y = 0;  // toxicities
  int z = 0;  // efficacy responses
  int n = 0;  // patients

  friend bool operator==(const DoseRecord&, const DoseRecord&) = default;
};

// One row per tried dose, keyed by the exact dose pair. Rows keep insertion
// order; the likelihood does not depend on it.
class DoseDataTable {
 public:
  // Adds counts to the row for `x`, creating it if needed.
  void add(DosePair x, int y, int z, int n);

  const DoseRecord* find(DosePair x) const;
  int n_at(DosePair x) const;
  int total_n() const;
  bool empty() const { return rows_.empty(); }
  std::span<const DoseRecord> rows() const { return rows_; }

  friend bool operator==(const DoseDataTable&, const DoseDataTable&) = default;

 private:
  std::vector<DoseRecord> rows_;
};

// Inverse-moment prior hyperparameters.
struct IMomHyperparams {
  double k = 1.0;
  double nu = 1.0;
  double tau = 0.3;

  void validate() const;
  friend bool operator==(const IMomHyperparams&, const IMomHyperparams&) = default;
};

// Random-walk Metropolis settings. Parameter order on the sampling scale:
// alpha0, log alpha1, log alpha2, beta0, beta1, beta2, beta3, beta4.
struct McmcConfig {
  int total = 4000;
  int burn_in = 2000;
  std::array<double, 8> proposal_scales = {0.8, 0.6, 0.6, 0.8, 1.0, 1.0, 1.0, 1.0};
  bool adapt_during_burn_in = true;
  double target_acceptance = 0.3;
  std::uint64_t seed = 1;

  int retained() const { return total - burn_in; }
  void validate() const;

  // 4,000 total / 2,000 burn-in.
  static McmcConfig fast();
  // 10,000 total / 5,000 burn-in.
  static McmcConfig long_run();
};

struct Draw {
  ToxicityParams tox;
  EfficacyParams eff;
  double log_lik = 0.0;
};

struct Chain {
  ModelId model = ModelId::M1;
  std::vector<Draw> draws;
  // Per sampled coordinate, in the order of parameter_names(model).
  std::vector<double> acceptance;

  static std::vector<std::string> parameter_names(ModelId model);
};

struct ModelFit {
  std::array<Chain, 4> chains;
  std::array<double, 4> log_marginals{};
  std::array<double, 4> posteriors{};
  double p3 = 0.0;
  double p4 = 0.0;
  ModelId selected = ModelId::M1;
  std::uint64_t seed = 0;

  const Chain& chain(ModelId m) const { return chains[model_index(m)]; }
  const Chain& selected_chain() const { return chain(selected); }
};

double log_imom_density(double beta, const IMomHyperparams& hyper);
double log_prior(const ToxicityParams& tox, const EfficacyParams& eff,
                 const IMomHyperparams& hyper);

double log_likelihood(const DoseDataTable& data, const ToxicityParams& tox,
                      const EfficacyParams& eff);
double toxicity_log_likelihood(const DoseDataTable& data, const ToxicityParams& tox);
double efficacy_log_likelihood(const DoseDataTable& data, const EfficacyParams& eff);

// ---------------------------------------------------------------------------
// Generic component-wise random-walk Metropolis.
//
// The log target is a sum of blocks; coordinate i only touches block
// block_of[i], so an update re-evaluates one block.
struct BlockTarget {
  std::vector<int> block_of;
  int n_blocks = 1;
  std::function<double(std::span<const double> theta, int block)> log_density;
};

struct MetropolisResult {
  std::size_t dim = 0;
  std::vector<double> draws;  // retained draws, row-major (draw, coordinate)
  std::vector<double> acceptance;

  std::span<const double> draw(std::size_t i) const { return {draws.data() + i * dim, dim}; }
  std::size_t size() const { return dim == 0 ? 0 : draws.size() / dim; }
};

// `scales` gives the initial proposal SD per coordinate.
MetropolisResult run_metropolis(const BlockTarget& target, std::vector<double> init,
                                std::span<const double> scales, const McmcConfig& cfg);

// Posterior draws of (alpha, beta_l) under model `model`.
Chain sample_posterior(const DoseDataTable& data, ModelId model, const IMomHyperparams& hyper,
                       const McmcConfig& cfg);

// log of the harmonic mean of likelihoods, from per-draw log-likelihoods.
double marginal_likelihood_harmonic(std::span<const double> log_likelihoods);

std::array<double, 4> model_posteriors(const std::array<double, 4>& log_marginals,
                                       const std::array<double, 4>& prior_weights = {
                                           0.25, 0.25, 0.25, 0.25});

// Median probability model from the inclusion probabilities.
ModelId select_mpm(double p3, double p4);

// Samples all four models, derives per-chain seeds from `root_seed`.
// With `parallel` the chains run on separate threads; results are identical.
ModelFit fit_models(const DoseDataTable& data, const IMomHyperparams& hyper, McmcConfig cfg,
                    std::uint64_t root_seed, bool parallel = false);

// One header row of parameter names, then one row per draw.
void write_chain_csv(std::ostream& os, const Chain& chain);

}  // namespace aaa
