#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aaa/decision_engine.hpp"
#include "aaa/dose_model.hpp"
#include "aaa/random.hpp"
#include "aaa/trial_state.hpp"

namespace aaa {

// Scenario truth. Efficacy may carry an interaction term that the fitted
// models do not have.
struct TrueEfficacy {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;
  double beta4 = 0.0;
  double beta5 = 0.0;  // xa * xb

  double prob(DosePair x) const {
    return logistic(beta0 + beta1 * x.a + beta2 * x.b + beta3 * x.a * x.a + beta4 * x.b * x.b +
                    beta5 * x.a * x.b);
  }
  friend bool operator==(const TrueEfficacy&, const TrueEfficacy&) = default;
};

struct ScenarioSpec {
  std::string label;
  std::vector<double> raw_a;
  std::vector<double> raw_b;
  ToxicityParams tox;
  TrueEfficacy eff;
  // Documented true optimum (raw units); recomputed by true_bodc().
  std::optional<DosePair> documented_bodc_raw;

  DoseGrid grid() const { return DoseGrid::standardize(raw_a, raw_b); }
  double p_true(DosePair x) const { return toxicity_prob(tox, x); }
  double q_true(DosePair x) const { return eff.prob(x); }
  void validate() const;
};

// Maximizer of the true utility over the search region, by a fine grid
// (`n` x `n`). Standardized coordinates. nullopt if utility is zero everywhere.
std::optional<DosePair> true_bodc(const ScenarioSpec& s, const UtilityParams& u, int n = 1001);

enum class ArrivalProcess { Poisson, Fixed };

struct TimeModel {
  double accrual_rate = 0.1;  // patients per day
  double follow_up = 28.0;    // days
  ArrivalProcess arrivals = ArrivalProcess::Poisson;

  void validate() const;
  friend bool operator==(const TimeModel&, const TimeModel&) = default;
};

struct CohortOutcome {
  int y = 0;
  int z = 0;
};

// Independent binomial toxicity and efficacy counts for m patients.
CohortOutcome simulate_cohort_outcomes(const ScenarioSpec& s, DosePair x, int m, Rng& rng);

struct DoseCount {
  DosePair x;  // standardized
  int n = 0;
  friend bool operator==(const DoseCount&, const DoseCount&) = default;
};

struct TrialRecord {
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  bool acd = true;
  std::vector<TrialEvent> events;
  std::vector<DoseCount> allocation;
  std::vector<DosePair> insertions;
  std::optional<DosePair> selection;
  bool selection_inserted = false;
  bool terminated_early = false;
  bool divided = false;  // a DivideCohorts decision was issued
  double duration = 0.0;
  ModelId final_model = ModelId::M1;
  ToxicityParams posterior_tox;
  EfficacyParams posterior_eff;
  std::string error;  // non-empty if the engine aborted the replicate

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

// `base` supplies the design; its grid and seed are replaced from the
// scenario and `seed`.
TrialRecord run_trial(const ScenarioSpec& s, const TrialConfig& base, const TimeModel& time,
                      bool acd, std::uint64_t seed);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  friend bool operator==(const MeanSd&, const MeanSd&) = default;
};

struct OperatingCharacteristics {
  std::string label;
  std::size_t replicates = 0;
  std::size_t failed = 0;
  bool acd = true;
  std::vector<double> raw_a;
  std::vector<double> raw_b;
  // Percentages over prespecified doses, indexed [j][k].
  std::vector<std::vector<double>> selection_pct;
  std::vector<std::vector<double>> allocation_pct;
  double selection_inserted_pct = 0.0;
  double selection_none_pct = 0.0;
  double allocation_inserted_pct = 0.0;
  double insertion_rate = 0.0;
  std::array<double, 4> model_selection_pct{};
  // alpha0..alpha2, beta0..beta4
  std::array<MeanSd, 8> posterior_means{};
  std::optional<DosePair> mean_selected;      // standardized
  std::optional<DosePair> mean_selected_raw;
  MeanSd duration;
  double early_termination_rate = 0.0;
  double mean_patients = 0.0;

  friend bool operator==(const OperatingCharacteristics&,
                         const OperatingCharacteristics&) = default;
};

// Order-independent: records are aggregated by replicate index.
OperatingCharacteristics summarize_replicates(const ScenarioSpec& s,
                                              const std::vector<TrialRecord>& records);

struct ReplicateRun {
  std::vector<TrialRecord> records;  // by replicate index
  OperatingCharacteristics oc;
};

ReplicateRun run_replicates(const ScenarioSpec& s, const TrialConfig& base, const TimeModel& time,
                            bool acd, std::size_t n_reps, std::uint64_t root_seed,
                            unsigned threads = 1);

std::uint64_t replicate_seed(std::uint64_t root_seed, std::size_t rep);

struct DurationPair {
  std::uint64_t seed = 0;
  double with_acd = 0.0;
  double without_acd = 0.0;
  bool divided = false;
};

struct DurationComparison {
  std::vector<DurationPair> pairs;
  double mean_with_acd = 0.0;
  double mean_without_acd = 0.0;
  double mean_saving = 0.0;
  std::size_t acd_longer = 0;  // seeds where ACD took longer
};

DurationComparison duration_comparison(const ScenarioSpec& s, const TrialConfig& base,
                                       const TimeModel& time, std::size_t n_reps,
                                       std::uint64_t root_seed, unsigned threads = 1);

}  // namespace aaa
