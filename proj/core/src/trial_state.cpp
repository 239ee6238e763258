#include "aaa/trial_state.hpp"

#include <algorithm>
#include <cmath>

#include "aaa/errors.hpp"

namespace aaa {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

bool open_interval(double v, double lo, double hi) { return v > lo && v < hi; }

Cohort* find_cohort_mut(TrialState& s, int id) {
  for (auto& c : s.open_cohorts) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

[[noreturn]] void corrupt(const TrialEvent& e, const std::string& why) {
  throw CorruptLogError("event " + std::to_string(e.seq) + " (" +
                        std::string(event_type_name(e.payload)) + "): " + why);
}

}  // namespace

void DesignConfig::validate() const {
  if (!open_interval(pT, 0.0, 1.0)) throw ValidationError("design.pT", "pT must lie in (0,1)");
  if (!open_interval(xi, 0.5, 1.0)) throw ValidationError("design.xi", "xi must lie in (0.5,1)");
  if (!open_interval(credible, 0.5, 1.0)) {
    throw ValidationError("design.credible", "credible level must lie in (0.5,1)");
  }
  if (!open_interval(U0, 0.0, 1.0)) throw ValidationError("design.U0", "U0 must lie in (0,1)");
  if (!(omega > 0.0)) throw ValidationError("design.omega", "omega must be positive");
  if (cohort_size < 1) throw ValidationError("design.cohortSize", "cohort size must be >= 1");
  if (N < cohort_size || N % cohort_size != 0) {
    throw ValidationError("design.N", "N must be a positive multiple of the cohort size");
  }
}

McmcConfig TrialConfig::mcmc() const {
  McmcConfig cfg;
  cfg.total = mcmc_total;
  cfg.burn_in = mcmc_burn_in;
  return cfg;
}

void TrialConfig::validate() const {
  design.validate();
  try {
    calibration.validate();
  } catch (const ValidationError& e) {
    throw ValidationError("calibration." + e.field(), e.what());
  }
  if (calibration.pT != design.pT) {
    throw ValidationError("calibration.pT", "calibration pT must equal design pT");
  }
  try {
    imom.validate();
  } catch (const ValidationError& e) {
    throw ValidationError("imom." + e.field(), e.what());
  }
  mcmc().validate();
  (void)DoseGrid::standardize(raw_a, raw_b);
}

TrialConfig make_trial_config(std::vector<double> raw_a, std::vector<double> raw_b,
                              const DesignConfig& design, const CalibrationSpec& calibration) {
  TrialConfig cfg;
  cfg.raw_a = std::move(raw_a);
  cfg.raw_b = std::move(raw_b);
  cfg.design = design;
  cfg.calibration = calibration;
  cfg.validate();
  cfg.utility = calibrate_eta(calibration);
  return cfg;
}

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::RunIn: return "RunIn";
    case Stage::Adaptive: return "Adaptive";
    case Stage::Done: return "Done";
  }
  return "?";
}

std::string_view decision_kind_name(DecisionKind k) {
  switch (k) {
    case DecisionKind::Escalate: return "Escalate";
    case DecisionKind::Treat: return "Treat";
    case DecisionKind::Insert: return "Insert";
    case DecisionKind::DivideCohorts: return "DivideCohorts";
    case DecisionKind::TerminateCohort: return "TerminateCohort";
    case DecisionKind::TerminateTrial: return "TerminateTrial";
  }
  return "?";
}

DecisionKind parse_decision_kind(std::string_view name) {
  for (auto k : {DecisionKind::Escalate, DecisionKind::Treat, DecisionKind::Insert,
                 DecisionKind::DivideCohorts, DecisionKind::TerminateCohort,
                 DecisionKind::TerminateTrial}) {
    if (decision_kind_name(k) == name) return k;
  }
  throw ValidationError("kind", "unknown decision kind '" + std::string(name) + "'");
}

std::string_view event_type_name(const EventPayload& p) {
  return std::visit(
      Overloaded{
          [](const TrialCreated&) { return std::string_view("TrialCreated"); },
          [](const CohortOpened&) { return std::string_view("CohortOpened"); },
          [](const PatientEnrolled&) { return std::string_view("PatientEnrolled"); },
          [](const CohortCollapsed&) { return std::string_view("CohortCollapsed"); },
          [](const OutcomesRecorded&) { return std::string_view("OutcomesRecorded"); },
          [](const DecisionIssued&) { return std::string_view("DecisionIssued"); },
          [](const DoseInserted&) { return std::string_view("DoseInserted"); },
          [](const TrialClosed&) { return std::string_view("TrialClosed"); },
      },
      p);
}

// ---------------------------------------------------------------------------

int TrialState::committed() const {
  int n = data.total_n();
  for (const auto& c : open_cohorts) n += c.capacity;
  return n;
}

int TrialState::n2() const {
  int n = completed_stage2;
  for (const auto& c : open_cohorts) {
    if (c.stage2) n += c.capacity;
  }
  return n;
}

bool TrialState::tried(DosePair x) const {
  if (data.n_at(x) > 0) return true;
  return std::any_of(open_cohorts.begin(), open_cohorts.end(),
                     [&](const Cohort& c) { return c.dose == x; });
}

const Cohort* TrialState::find_cohort(int id) const {
  for (const auto& c : open_cohorts) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

const Cohort* TrialState::enrolling_cohort_at(DosePair x) const {
  for (const auto& c : open_cohorts) {
    if (c.enrolling && c.dose == x) return &c;
  }
  return nullptr;
}

void apply_event(TrialState& s, const TrialEvent& e) {
  const std::uint64_t expected = s.log.size() + 1;
  if (e.seq != expected) {
    throw CorruptLogError("sequence gap: expected event " + std::to_string(expected) + ", found " +
                          std::to_string(e.seq));
  }
  const bool is_create = std::holds_alternative<TrialCreated>(e.payload);
  if (is_create != s.log.empty()) corrupt(e, "TrialCreated must be the first and only creation");
  if (!is_create && s.stage == Stage::Done) corrupt(e, "trial is already closed");

  std::visit(
      Overloaded{
          [&](const TrialCreated& ev) {
            s.config = ev.config;
            s.grid = DoseGrid::standardize(ev.config.raw_a, ev.config.raw_b);
            s.stage = Stage::RunIn;
          },
          [&](const CohortOpened& ev) {
            if (ev.cohort_id != s.next_cohort_id) corrupt(e, "unexpected cohort id");
            if (!s.grid.contains(ev.dose)) corrupt(e, "cohort dose is not on the grid");
            if (s.grid.is_excluded(ev.dose)) corrupt(e, "cohort dose is excluded");
            if (ev.capacity < 1 || s.committed() + ev.capacity > s.config.design.N) {
              corrupt(e, "cohort capacity exceeds the sample size");
            }
            s.open_cohorts.push_back(
                {ev.cohort_id, ev.dose, ev.capacity, 0, true, s.stage == Stage::Adaptive, {}});
            ++s.next_cohort_id;
            if (std::find(s.treated.begin(), s.treated.end(), ev.dose) == s.treated.end()) {
              s.treated.push_back(ev.dose);
            }
          },
          [&](const PatientEnrolled& ev) {
            Cohort* c = find_cohort_mut(s, ev.cohort_id);
            if (!c || !c->enrolling) corrupt(e, "cohort is not enrolling");
            if (ev.patient_id != s.next_patient_id) corrupt(e, "unexpected patient id");
            c->members.push_back(ev.patient_id);
            ++c->enrolled;
            ++s.next_patient_id;
            if (c->enrolled == c->capacity) c->enrolling = false;
          },
          [&](const CohortCollapsed& ev) {
            Cohort* c = find_cohort_mut(s, ev.cohort_id);
            if (!c || !c->enrolling) corrupt(e, "cohort is not enrolling");
            c->enrolling = false;
            c->capacity = c->enrolled;
            if (c->enrolled == 0) {
              std::erase_if(s.open_cohorts, [&](const Cohort& x) { return x.id == ev.cohort_id; });
            }
          },
          [&](const OutcomesRecorded& ev) {
            const Cohort* c = s.find_cohort(ev.cohort_id);
            if (!c) corrupt(e, "no open cohort with this id");
            if (c->dose != ev.dose) corrupt(e, "dose does not match the cohort");
            if (ev.n != c->capacity) corrupt(e, "n does not match the cohort size");
            s.data.add(ev.dose, ev.y, ev.z, ev.n);
            if (c->stage2) s.completed_stage2 += ev.n;
            std::erase_if(s.open_cohorts, [&](const Cohort& x) { return x.id == ev.cohort_id; });
          },
          [&](const DecisionIssued& ev) {
            for (const DosePair& x : ev.decision.exclusions) s.grid.exclude_from(x);
            if (ev.decision.enters_adaptive) {
              if (s.stage != Stage::RunIn) corrupt(e, "stage II already started");
              s.stage = Stage::Adaptive;
              s.n1 = s.committed();
            }
            ++s.decision_count;
          },
          [&](const DoseInserted& ev) {
            try {
              s.grid = s.grid.expanded(ev.dose);
            } catch (const ValidationError& err) {
              corrupt(e, err.what());
            }
          },
          [&](const TrialClosed& ev) {
            s.stage = Stage::Done;
            s.final_selection = ev.selection;
            s.terminated_early = ev.terminated_early;
            s.open_cohorts.clear();
          },
      },
      e.payload);
  s.log.push_back(e);
}

const TrialEvent& append_event(TrialState& state, double time, EventPayload payload) {
  TrialEvent e{state.log.size() + 1, time, std::move(payload)};
  apply_event(state, e);
  return state.log.back();
}

TrialState replay_events(std::span<const TrialEvent> events) {
  if (events.empty()) throw CorruptLogError("event log is empty");
  TrialState s;
  for (const auto& e : events) apply_event(s, e);
  return s;
}

}  // namespace aaa
