#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aaa/bayes_engine.hpp"
#include "aaa/dose_model.hpp"

namespace aaa {

struct DesignConfig {
  double pT = 0.3;
  double xi = 0.95;        // posterior probability cutoff for a toxic call
  double credible = 0.90;  // C for the insertion disc
  double U0 = 0.1;         // lowest acceptable utility
  double omega = 2.0;
  int N = 96;
  int cohort_size = 3;

  void validate() const;
  friend bool operator==(const DesignConfig&, const DesignConfig&) = default;
};

// Everything needed to reproduce a trial; carried by TrialCreated.
struct TrialConfig {
  std::string label;
  std::vector<double> raw_a;
  std::vector<double> raw_b;
  DesignConfig design;
  CalibrationSpec calibration;
  UtilityParams utility;  // calibrated from `calibration`
  IMomHyperparams imom;
  int mcmc_total = 4000;
  int mcmc_burn_in = 2000;
  std::uint64_t seed = 1;
  bool acd = true;
  std::string idempotency_key;

  McmcConfig mcmc() const;
  void validate() const;
  friend bool operator==(const TrialConfig&, const TrialConfig&) = default;
};

// Validates the inputs, calibrates the utility, and returns a ready config.
TrialConfig make_trial_config(std::vector<double> raw_a, std::vector<double> raw_b,
                              const DesignConfig& design, const CalibrationSpec& calibration);

enum class Stage { RunIn, Adaptive, Done };
std::string_view stage_name(Stage s);

struct Cohort {
  int id = 0;
  DosePair dose;
  int capacity = 0;
  int enrolled = 0;
  bool enrolling = true;
  bool stage2 = false;
  std::vector<int> members;

  friend bool operator==(const Cohort&, const Cohort&) = default;
};

enum class DecisionKind { Escalate, Treat, Insert, DivideCohorts, TerminateCohort, TerminateTrial };
std::string_view decision_kind_name(DecisionKind k);
DecisionKind parse_decision_kind(std::string_view name);

struct Decision {
  DecisionKind kind = DecisionKind::Treat;
  std::vector<DosePair> doses;
  std::vector<std::string> rationale;
  // Doses newly called toxic at this epoch (corners of the excluded upper blocks).
  std::vector<DosePair> exclusions;
  bool enters_adaptive = false;

  friend bool operator==(const Decision&, const Decision&) = default;
};

struct DoseSummary {
  DosePair x;
  double mean_utility = 0.0;
  double prob_toxic = 0.0;          // Pr{p(x) > pT}
  double prob_utility_above = 0.0;  // Pr{U(x) > U0}
  double mean_toxicity = 0.0;
  double mean_efficacy = 0.0;

  friend bool operator==(const DoseSummary&, const DoseSummary&) = default;
};

// Posterior snapshot stored with each decision.
struct FitSummary {
  std::uint64_t seed = 0;
  std::array<double, 4> log_marginals{};
  std::array<double, 4> posteriors{};
  double p3 = 0.0;
  double p4 = 0.0;
  ModelId selected = ModelId::M1;
  bool has_bodc = false;
  DosePair bodc_mean;
  double disc_radius = 0.0;  // C-quantile of draw distances to the mean
  double r_hat = 0.0;
  bool insertion_indicated = false;
  std::vector<DoseSummary> doses;
  // Posterior means under the selected model.
  ToxicityParams mean_tox;
  EfficacyParams mean_eff;

  friend bool operator==(const FitSummary&, const FitSummary&) = default;
};

// ---------------------------------------------------------------------------
// Events

struct TrialCreated {
  TrialConfig config;
  friend bool operator==(const TrialCreated&, const TrialCreated&) = default;
};
struct CohortOpened {
  int cohort_id = 0;
  DosePair dose;
  int capacity = 0;
  friend bool operator==(const CohortOpened&, const CohortOpened&) = default;
};
struct PatientEnrolled {
  int cohort_id = 0;
  int patient_id = 0;
  friend bool operator==(const PatientEnrolled&, const PatientEnrolled&) = default;
};
// Enrollment stops; enrolled patients still complete follow-up.
struct CohortCollapsed {
  int cohort_id = 0;
  friend bool operator==(const CohortCollapsed&, const CohortCollapsed&) = default;
};
struct OutcomesRecorded {
  int cohort_id = 0;
  DosePair dose;
  int y = 0;
  int z = 0;
  int n = 0;
  friend bool operator==(const OutcomesRecorded&, const OutcomesRecorded&) = default;
};
struct DecisionIssued {
  int cohort_id = 0;  // the cohort whose completion triggered the decision
  Decision decision;  // as produced by the engine
  std::vector<DosePair> assigned;  // doses actually opened for the next cohort(s)
  FitSummary fit;
  friend bool operator==(const DecisionIssued&, const DecisionIssued&) = default;
};
struct DoseInserted {
  DosePair dose;
  friend bool operator==(const DoseInserted&, const DoseInserted&) = default;
};
struct TrialClosed {
  std::optional<DosePair> selection;
  bool terminated_early = false;
  std::string reason;
  friend bool operator==(const TrialClosed&, const TrialClosed&) = default;
};

using EventPayload = std::variant<TrialCreated, CohortOpened, PatientEnrolled, CohortCollapsed,
                                  OutcomesRecorded, DecisionIssued, DoseInserted, TrialClosed>;

struct TrialEvent {
  std::uint64_t seq = 0;
  double time = 0.0;
  EventPayload payload;

  friend bool operator==(const TrialEvent&, const TrialEvent&) = default;
};

std::string_view event_type_name(const EventPayload& p);

// ---------------------------------------------------------------------------
// State: a pure fold over events.

struct TrialState {
  TrialConfig config;
  DoseGrid grid;
  DoseDataTable data;  // completers only
  Stage stage = Stage::RunIn;
  std::vector<Cohort> open_cohorts;
  int n1 = 0;
  int completed_stage2 = 0;
  int next_cohort_id = 1;
  int next_patient_id = 1;
  std::vector<DosePair> treated;  // doses that ever had a cohort, first-use order
  std::size_t decision_count = 0;
  std::optional<DosePair> final_selection;
  bool terminated_early = false;
  std::vector<TrialEvent> log;

  bool created() const { return !log.empty(); }
  // Completed patients plus capacity reserved by open cohorts.
  int committed() const;
  int n2() const;
  int n2_max() const { return config.design.N - n1; }
  bool tried(DosePair x) const;
  const Cohort* find_cohort(int id) const;
  const Cohort* enrolling_cohort_at(DosePair x) const;

  friend bool operator==(const TrialState&, const TrialState&) = default;
};

// Appends `event` to state.log and applies it. Throws CorruptLogError on a
// sequence gap or an event that does not fit the state.
void apply_event(TrialState& state, const TrialEvent& event);

// Appends a payload with the next sequence number.
const TrialEvent& append_event(TrialState& state, double time, EventPayload payload);

TrialState replay_events(std::span<const TrialEvent> events);

}  // namespace aaa
