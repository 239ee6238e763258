#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "aaa/bayes_engine.hpp"
#include "aaa/dose_model.hpp"
#include "aaa/trial_state.hpp"

namespace aaa {

// Rectangle in standardized coordinates searched for the per-draw BODC.
struct SearchRegion {
  DosePair lo;
  DosePair hi;

  // [0.5 x lowest, 2 x highest] prespecified raw dose per agent.
  static SearchRegion for_grid(const DoseGrid& grid);
};

struct BodcEstimate {
  std::vector<DosePair> per_draw;
  DosePair mean;
  double r_hat = 0.0;
  bool insert = false;
  std::size_t degenerate_draws = 0;  // draws with zero utility everywhere
};

// Pr{p(x) > pT | data} estimated from the chain.
double prob_toxic(const Chain& chain, DosePair x, double pT);
bool is_dose_toxic(const Chain& chain, DosePair x, const DesignConfig& cfg);

DoseSummary summarize_dose(const Chain& chain, DosePair x, const UtilityParams& u, double U0);

// Utility-maximizing dose for one parameter draw: 51x51 grid, local zoom,
// then Nelder-Mead. Returns region.lo if utility is zero on the whole region.
DosePair draw_argmax(const ToxicityParams& tox, const EfficacyParams& eff, const UtilityParams& u,
                     const SearchRegion& region, bool* degenerate = nullptr);

// Per-draw argmax and its mean. r_hat/insert are left for insertion_indicator.
BodcEstimate estimate_bodc(const Chain& chain, const UtilityParams& u, const SearchRegion& region);

// Distance from `center` to the nearest non-excluded grid point (inf if none).
double nearest_dose_distance(DosePair center, const DoseGrid& grid);

// Fraction of per-draw optima within r_hat of the mean exceeds C.
bool insertion_indicator(const BodcEstimate& est, const DoseGrid& grid, const DesignConfig& cfg);

// C-quantile of the distances from the per-draw optima to their mean.
double credible_disc_radius(const BodcEstimate& est, double credible);

// Clamp each agent's raw dose into [0.5 x lowest used, 2 x highest used].
DosePair clip_insertion(DosePair candidate, const DoseGrid& grid, std::span<const DosePair> used);

// No-skip rule: pause insertion if an untried, non-excluded prespecified dose is
// componentwise <= the candidate.
bool skips_untried_dose(DosePair candidate, const DoseGrid& grid,
                        const std::function<bool(DosePair)>& tried);

// Upper-block exclusion applied to a state copy.
TrialState apply_exclusion(TrialState state, DosePair toxic);

// Stage I: the next diagonal dose, or nullopt when stage I is over (current
// dose toxic or the top dose reached).
std::optional<Decision> stage1_next(const TrialState& state, const Chain& chain,
                                    const DesignConfig& cfg, DosePair current);

// Stage II decision at the completion of a cohort treated at `current`.
// `bodc` may carry a precomputed estimate for the selected chain.
Decision stage2_next(const TrialState& state, const ModelFit& fit, DosePair current,
                     const BodcEstimate* bodc = nullptr);

// Stage I or II as appropriate, including the hand-off between them.
Decision next_decision(const TrialState& state, const ModelFit& fit, DosePair current);

// Final recommendation among tried, non-excluded, safe doses.
std::optional<DosePair> select_final(const TrialState& state, const ModelFit& fit);

// BODC distances are measured against `decision_grid` when given.
FitSummary summarize_fit(const ModelFit& fit, const TrialState& state,
                         const BodcEstimate* bodc, const DoseGrid* decision_grid = nullptr);

// ---------------------------------------------------------------------------
// One decision epoch: given a state in which the completing cohort's outcomes
// are already recorded, fit the models, decide, and produce the events that
// carry the decision out. Pure; the caller appends the events.

struct EpochResult {
  ModelFit fit;
  Decision decision;  // engine output
  std::vector<EventPayload> events;
};

// Seed for the model fit at decision number `decision_index`.
std::uint64_t fit_seed(const TrialConfig& cfg, std::size_t decision_index);

// With cohort division disabled (config.acd == false) a DivideCohorts is
// carried out at one of its two doses, picked uniformly from a stream keyed
// by the decision index.
EpochResult run_epoch(const TrialState& state, int completed_cohort_id, DosePair completed_dose,
                      bool parallel_chains = false);

}  // namespace aaa
