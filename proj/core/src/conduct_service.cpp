#include "aaa/conduct_service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace aaa {

namespace {

double wall_time() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

std::string format_id(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial-%04zu", n);
  return buf;
}

[[noreturn]] void rethrow_as_service_error(const std::exception& e) {
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    throw ServiceError(error_code::kValidation, 400, v->what(), v->field());
  }
  if (dynamic_cast<const CalibrationError*>(&e)) {
    throw ServiceError(error_code::kCalibration, 422, e.what(), "calibration");
  }
  if (dynamic_cast<const CorruptLogError*>(&e)) {
    throw ServiceError(error_code::kCorruptLog, 500, e.what());
  }
  if (dynamic_cast<const McmcError*>(&e)) {
    throw ServiceError(error_code::kInference, 500, e.what());
  }
  throw ServiceError(error_code::kValidation, 400, e.what());
}

std::string describe(const EventPayload& p) {
  json j = TrialEvent{0, 0.0, p};
  return j.at("type").get<std::string>() + " " + j.at("payload").dump();
}

int find_completed_dose(std::span<const TrialEvent> before, int cohort_id, DosePair& dose) {
  for (auto it = before.rbegin(); it != before.rend(); ++it) {
    if (const auto* o = std::get_if<OutcomesRecorded>(&it->payload)) {
      if (o->cohort_id == cohort_id) {
        dose = o->dose;
        return 1;
      }
    }
  }
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

RecommendationView make_recommendation(const TrialState& state) {
  RecommendationView v;
  v.stage = state.stage;
  v.open_cohorts = state.open_cohorts;
  v.final_selection = state.final_selection;
  v.terminated_early = state.terminated_early;
  for (auto it = state.log.rbegin(); it != state.log.rend(); ++it) {
    if (const auto* d = std::get_if<DecisionIssued>(&it->payload)) {
      v.decision = d->decision;
      v.assigned = d->assigned;
      v.fit = d->fit;
      v.has_fit = true;
      return v;
    }
  }
  v.decision.kind = DecisionKind::Treat;
  if (!state.open_cohorts.empty()) {
    v.decision.doses = {state.open_cohorts.front().dose};
    v.assigned = v.decision.doses;
  }
  v.decision.rationale = {"first cohort at the lowest dose"};
  return v;
}

json recommendation_to_json(const RecommendationView& v, const TrialState& state) {
  json per_dose = json::array();
  if (v.has_fit) {
    for (const DoseSummary& s : v.fit.doses) {
      json d = s;
      if (auto idx = state.grid.index_of(s.x)) d["level"] = {idx->j + 1, idx->k + 1};
      d["raw"] = state.grid.to_raw(s.x);
      d["excluded"] = state.grid.is_excluded(s.x);
      per_dose.push_back(d);
    }
  }
  json bodc = nullptr;
  if (v.has_fit && v.fit.has_bodc) {
    bodc = {{"mean", v.fit.bodc_mean},
            {"meanRaw", state.grid.to_raw(v.fit.bodc_mean)},
            {"discRadius", v.fit.disc_radius},
            {"rHat", std::isfinite(v.fit.r_hat) ? json(v.fit.r_hat) : json(nullptr)}};
  }
  json assigned = json::array();
  for (const DosePair& x : v.assigned) {
    json a = {{"dose", x}, {"raw", state.grid.to_raw(x)}};
    if (auto idx = state.grid.index_of(x)) a["level"] = {idx->j + 1, idx->k + 1};
    assigned.push_back(a);
  }
  return {{"schemaVersion", kSchemaVersion},
          {"decision", v.decision},
          {"assigned", assigned},
          {"openCohorts", v.open_cohorts},
          {"stage", stage_name(v.stage)},
          {"perDose", per_dose},
          {"bodc", bodc},
          {"modelPosteriors", v.has_fit ? json(v.fit.posteriors) : json(nullptr)},
          {"selectedModel", v.has_fit ? json(model_name(v.fit.selected)) : json(nullptr)},
          {"p3", v.has_fit ? json(v.fit.p3) : json(nullptr)},
          {"p4", v.has_fit ? json(v.fit.p4) : json(nullptr)},
          {"insertion", v.decision.kind == DecisionKind::Insert},
          {"insertionIndicated", v.has_fit && v.fit.insertion_indicated},
          {"closed", v.stage == Stage::Done},
          {"finalSelection", v.final_selection ? json(*v.final_selection) : json(nullptr)},
          {"terminatedEarly", v.terminated_early}};
}

// ---------------------------------------------------------------------------

ReplayReport replay_events_verified(std::span<const TrialEvent> events, bool verify) {
  if (events.empty()) throw CorruptLogError("event log is empty");
  ReplayReport report;
  TrialState& s = report.state;
  std::size_t i = 0;
  while (i < events.size()) {
    const auto* issued = std::get_if<DecisionIssued>(&events[i].payload);
    if (!verify || !issued) {
      apply_event(s, events[i]);
      ++i;
      continue;
    }
    ++report.decisions_checked;
    const std::uint64_t expected_seed = fit_seed(s.config, s.decision_count);
    const std::string where = "event " + std::to_string(events[i].seq);
    if (issued->fit.seed != expected_seed) {
      report.mismatches.push_back(where + ": fit seed differs from the derived seed");
    }
    DosePair dose;
    if (!find_completed_dose(std::span(events).first(i), issued->cohort_id, dose)) {
      report.mismatches.push_back(where + ": no outcomes for the triggering cohort");
      apply_event(s, events[i]);
      ++i;
      continue;
    }
    const EpochResult epoch = run_epoch(s, issued->cohort_id, dose);
    for (std::size_t m = 0; m < epoch.events.size(); ++m) {
      if (i + m >= events.size() || !(events[i + m].payload == epoch.events[m])) {
        std::string found = i + m < events.size() ? describe(events[i + m].payload) : "end of log";
        report.mismatches.push_back(where + ": recomputed " + describe(epoch.events[m]) +
                                    " but log has " + found);
        break;
      }
    }
    // The logged events stay authoritative for the fold.
    for (std::size_t m = 0; m < epoch.events.size() && i < events.size(); ++m, ++i) {
      apply_event(s, events[i]);
    }
  }
  return report;
}

ReplayReport replay_log(const std::filesystem::path& file, bool verify) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open " + file.string());
  std::vector<TrialEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    events.push_back(event_from_line(line));
  }
  return replay_events_verified(events, verify);
}

// ---------------------------------------------------------------------------

TrialService::TrialService(std::filesystem::path dir, ServiceOptions options)
    : dir_(std::move(dir)), options_(options) {
  std::filesystem::create_directories(dir_);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto slot = std::make_shared<Slot>();
    slot->file = f;
    slot->state = replay_log(f, false).state;
    const std::string id = f.stem().string();
    if (!slot->state.config.idempotency_key.empty()) by_key_[slot->state.config.idempotency_key] = id;
    trials_[id] = slot;
    ++counter_;
  }
}

std::shared_ptr<TrialService::Slot> TrialService::slot(const std::string& id) const {
  std::lock_guard lock(index_mutex_);
  auto it = trials_.find(id);
  if (it == trials_.end()) {
    throw ServiceError(error_code::kUnknownTrial, 404, "no trial with id '" + id + "'", "id");
  }
  return it->second;
}

void TrialService::append(Slot& slot, const std::vector<EventPayload>& payloads) {
  TrialState work = slot.state;
  const std::size_t first = work.log.size();
  const double t = wall_time();
  for (const EventPayload& p : payloads) append_event(work, t, p);
  std::string text;
  for (std::size_t i = first; i < work.log.size(); ++i) text += event_to_line(work.log[i]) + "\n";
  std::ofstream out(slot.file, std::ios::app | std::ios::binary);
  out << text;
  out.flush();
  if (!out) throw ServiceError(error_code::kCorruptLog, 500, "cannot write " + slot.file.string());
  slot.state = std::move(work);
}

CreateResult TrialService::create_trial(const json& request) {
  TrialConfig cfg;
  try {
    cfg = trial_config_from_json(request);
  } catch (const std::exception& e) {
    rethrow_as_service_error(e);
  }
  if (!request.contains("mcmc") && !options_.fast) {
    const McmcConfig full = McmcConfig::long_run();
    cfg.mcmc_total = full.total;
    cfg.mcmc_burn_in = full.burn_in;
  }
  if (!request.contains("seed")) {
    std::random_device rd;
    cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) | rd();
  }

  std::lock_guard lock(index_mutex_);
  if (!cfg.idempotency_key.empty()) {
    if (auto it = by_key_.find(cfg.idempotency_key); it != by_key_.end()) {
      return {it->second, false};
    }
  }
  std::string id;
  do {
    id = format_id(++counter_);
  } while (trials_.contains(id) || std::filesystem::exists(dir_ / (id + ".jsonl")));

  auto slot = std::make_shared<Slot>();
  slot->file = dir_ / (id + ".jsonl");
  const DoseGrid grid = DoseGrid::standardize(cfg.raw_a, cfg.raw_b);
  append(*slot, {TrialCreated{cfg},
                 CohortOpened{1, grid.point(0, 0), std::min(cfg.design.cohort_size, cfg.design.N)}});
  trials_[id] = slot;
  if (!cfg.idempotency_key.empty()) by_key_[cfg.idempotency_key] = id;
  return {id, true};
}

RecommendationView TrialService::record_outcomes(const std::string& id, const json& request) {
  auto s = slot(id);
  if (!request.is_object()) throw ServiceError(error_code::kValidation, 400, "expected an object");
  auto integer = [&](const char* key) {
    if (!request.contains(key)) {
      throw ServiceError(error_code::kValidation, 400, "missing required field", key);
    }
    const json& v = request.at(key);
    if (!v.is_number_integer()) throw ServiceError(error_code::kValidation, 400, "must be an integer", key);
    return v.get<int>();
  };
  std::optional<int> cohort_id;
  if (request.contains("cohortId")) cohort_id = integer("cohortId");

  DosePair dose;
  try {
    if (request.contains("dose")) {
      dose = request.at("dose").get<DosePair>();
    } else if (request.contains("level")) {
      const auto lv = request.at("level").get<std::vector<int>>();
      std::shared_lock lock(s->mutex);
      const DoseGrid& g = s->state.grid;
      if (lv.size() != 2 || lv[0] < 1 || lv[1] < 1 || static_cast<std::size_t>(lv[0]) > g.size_a() ||
          static_cast<std::size_t>(lv[1]) > g.size_b()) {
        throw ServiceError(error_code::kValidation, 400, "level outside the grid", "level");
      }
      dose = g.point(static_cast<std::size_t>(lv[0] - 1), static_cast<std::size_t>(lv[1] - 1));
    } else if (cohort_id) {
      std::shared_lock lock(s->mutex);
      const Cohort* c = s->state.find_cohort(*cohort_id);
      if (!c) throw ServiceError(error_code::kNoOpenCohort, 409, "no open cohort with this id", "cohortId");
      dose = c->dose;
    } else {
      throw ServiceError(error_code::kValidation, 400, "one of dose, level or cohortId is required",
                         "dose");
    }
  } catch (const json::exception&) {
    throw ServiceError(error_code::kValidation, 400, "dose must be [a, b] and level [j, k]", "dose");
  }
  return record_outcomes(id, dose, integer("y"), integer("z"), integer("n"), cohort_id);
}

RecommendationView TrialService::record_outcomes(const std::string& id, DosePair dose, int y, int z,
                                                 int n, std::optional<int> cohort_id) {
  auto s = slot(id);
  std::unique_lock lock(s->mutex);
  const TrialState& st = s->state;
  if (st.stage == Stage::Done) throw ServiceError(error_code::kTrialClosed, 409, "trial is closed");
  if (n < 1) throw ServiceError(error_code::kValidation, 400, "n must be positive", "n");
  if (y < 0) throw ServiceError(error_code::kValidation, 400, "y must be non-negative", "y");
  if (z < 0) throw ServiceError(error_code::kValidation, 400, "z must be non-negative", "z");
  if (y > n) throw ServiceError(error_code::kCountsExceedN, 422, "y exceeds n", "y");
  if (z > n) throw ServiceError(error_code::kCountsExceedN, 422, "z exceeds n", "z");

  const Cohort* cohort = nullptr;
  for (const Cohort& c : st.open_cohorts) {
    if (c.dose == dose && (!cohort_id || c.id == *cohort_id)) {
      cohort = &c;
      break;
    }
  }
  if (!cohort) {
    throw ServiceError(error_code::kNoOpenCohort, 409, "no open cohort at this dose",
                       cohort_id ? "cohortId" : "dose");
  }
  if (n != cohort->capacity) {
    throw ServiceError(error_code::kCohortSizeMismatch, 422,
                       "n must equal the cohort size " + std::to_string(cohort->capacity), "n");
  }
  const int cid = cohort->id;

  TrialState work = st;
  append_event(work, 0.0, OutcomesRecorded{cid, dose, y, z, n});
  EpochResult epoch;
  try {
    epoch = run_epoch(work, cid, dose, options_.parallel_chains);
  } catch (const std::exception& e) {
    rethrow_as_service_error(e);
  }
  std::vector<EventPayload> payloads{OutcomesRecorded{cid, dose, y, z, n}};
  payloads.insert(payloads.end(), epoch.events.begin(), epoch.events.end());
  append(*s, payloads);
  return make_recommendation(s->state);
}

TrialState TrialService::get_state(const std::string& id) const {
  auto s = slot(id);
  std::shared_lock lock(s->mutex);
  return s->state;
}

RecommendationView TrialService::recommendation(const std::string& id) const {
  auto s = slot(id);
  std::shared_lock lock(s->mutex);
  return make_recommendation(s->state);
}

std::vector<std::string> TrialService::trial_ids() const {
  std::lock_guard lock(index_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : trials_) ids.push_back(id);
  return ids;
}

}  // namespace aaa
