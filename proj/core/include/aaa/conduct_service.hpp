#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "aaa/decision_engine.hpp"
#include "aaa/errors.hpp"
#include "aaa/json_io.hpp"
#include "aaa/trial_state.hpp"

namespace aaa {

// Error surfaced to service clients as {code, message, field}.
class ServiceError : public Error {
 public:
  ServiceError(std::string code, int status, const std::string& message, std::string field = {})
      : Error(message), code_(std::move(code)), status_(status), field_(std::move(field)) {}

  const std::string& code() const noexcept { return code_; }
  int status() const noexcept { return status_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string code_;
  int status_;
  std::string field_;
};

namespace error_code {
inline constexpr const char* kValidation = "validation_error";
inline constexpr const char* kCalibration = "calibration_error";
inline constexpr const char* kUnknownTrial = "unknown_trial";
inline constexpr const char* kNoOpenCohort = "no_open_cohort";
inline constexpr const char* kCountsExceedN = "counts_exceed_n";
inline constexpr const char* kCohortSizeMismatch = "cohort_size_mismatch";
inline constexpr const char* kTrialClosed = "trial_closed";
inline constexpr const char* kCorruptLog = "corrupt_log";
inline constexpr const char* kInference = "inference_error";
}  // namespace error_code

struct RecommendationView {
  Decision decision;
  std::vector<DosePair> assigned;
  std::vector<Cohort> open_cohorts;
  Stage stage = Stage::RunIn;
  bool has_fit = false;
  FitSummary fit;  // per-dose summaries cover the non-excluded grid
  std::optional<DosePair> final_selection;
  bool terminated_early = false;
};

RecommendationView make_recommendation(const TrialState& state);
json recommendation_to_json(const RecommendationView& v, const TrialState& state);

struct ReplayReport {
  TrialState state;
  std::size_t decisions_checked = 0;
  std::vector<std::string> mismatches;

  bool verified() const { return mismatches.empty(); }
};

// Folds a JSON-lines event log. With `verify`, every decision epoch is
// recomputed from its stored seed and compared with the logged events.
ReplayReport replay_log(const std::filesystem::path& file, bool verify = true);
ReplayReport replay_events_verified(std::span<const TrialEvent> events, bool verify = true);

struct ServiceOptions {
  bool fast = false;             // default chain length 4,000/2,000 instead of 10,000/5,000
  bool parallel_chains = true;
};

struct CreateResult {
  std::string id;
  bool created = true;  // false when an idempotency key matched
};

// Trials persisted as <dir>/<id>.jsonl. Writes to one trial are serialized;
// reads take a shared lock.
class TrialService {
 public:
  TrialService(std::filesystem::path dir, ServiceOptions options = {});

  CreateResult create_trial(const json& request);
  RecommendationView record_outcomes(const std::string& id, const json& request);
  RecommendationView record_outcomes(const std::string& id, DosePair dose, int y, int z, int n,
                                     std::optional<int> cohort_id = std::nullopt);
  TrialState get_state(const std::string& id) const;
  RecommendationView recommendation(const std::string& id) const;
  std::vector<std::string> trial_ids() const;
  const ServiceOptions& options() const { return options_; }

 private:
  struct Slot {
    mutable std::shared_mutex mutex;
    TrialState state;
    std::filesystem::path file;
  };

  std::shared_ptr<Slot> slot(const std::string& id) const;
  void append(Slot& slot, const std::vector<EventPayload>& payloads);

  std::filesystem::path dir_;
  ServiceOptions options_;
  mutable std::mutex index_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> trials_;
  std::map<std::string, std::string> by_key_;
  std::size_t counter_ = 0;
};

}  // namespace aaa
