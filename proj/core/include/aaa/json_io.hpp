#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "aaa/bayes_engine.hpp"
#include "aaa/decision_engine.hpp"
#include "aaa/dose_model.hpp"
#include "aaa/trial_sim.hpp"
#include "aaa/trial_state.hpp"

namespace aaa {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Writers. Non-finite doubles are written as null and read back as +inf.
void to_json(json& j, const DosePair& x);
void to_json(json& j, const ToxicityParams& t);
void to_json(json& j, const EfficacyParams& e);
void to_json(json& j, const UtilityParams& u);
void to_json(json& j, const CalibrationSpec& c);
void to_json(json& j, const DesignConfig& d);
void to_json(json& j, const IMomHyperparams& h);
void to_json(json& j, const TrialConfig& c);
void to_json(json& j, const Decision& d);
void to_json(json& j, const DoseSummary& s);
void to_json(json& j, const FitSummary& f);
void to_json(json& j, const TrialEvent& e);
void to_json(json& j, const Cohort& c);
void to_json(json& j, const TimeModel& t);
void to_json(json& j, const TrueEfficacy& e);
void to_json(json& j, const ScenarioSpec& s);
void to_json(json& j, const TrialRecord& r);
void to_json(json& j, const OperatingCharacteristics& oc);
void to_json(json& j, const DurationComparison& d);

// Readers for stored data (events, records). Malformed input throws
// CorruptLogError.
void from_json(const json& j, DosePair& x);
void from_json(const json& j, ToxicityParams& t);
void from_json(const json& j, EfficacyParams& e);
void from_json(const json& j, UtilityParams& u);
void from_json(const json& j, Decision& d);
void from_json(const json& j, DoseSummary& s);
void from_json(const json& j, FitSummary& f);
void from_json(const json& j, TrialConfig& c);
void from_json(const json& j, TrialEvent& e);

std::string event_to_line(const TrialEvent& e);
TrialEvent event_from_line(const std::string& line);

// Readers for user input. Errors are ValidationError with the field path.
//
// Trial request / config document:
//   {"rawA":[..], "rawB":[..], "pT":0.3,
//    "calibration":{"q1":0.45,"q2":0.85,"U":0.3},
//    "design":{"xi":..,"credible":..,"U0":..,"omega":..,"N":..,"cohortSize":..},
//    "imom":{"k":..,"nu":..,"tau":..}, "mcmc":{"total":..,"burnIn":..},
//    "seed":.., "acd":true, "label":"..", "idempotencyKey":".."}
// Everything except rawA/rawB is optional. The utility is calibrated here.
TrialConfig trial_config_from_json(const json& j);

// Design file for the simulator: the request document without rawA/rawB,
// plus an optional "time":{"accrualRate","followUp","arrivals"}.
struct DesignFile {
  TrialConfig base;
  TimeModel time;
};
DesignFile design_file_from_json(const json& j);

ScenarioSpec scenario_from_json(const json& j);
TimeModel time_model_from_json(const json& j);
CalibrationSpec calibration_from_json(const json& j, double pT);

// Snapshot of a trial for service clients.
json state_to_json(const TrialState& s);

}  // namespace aaa
