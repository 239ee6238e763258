#include "aaa/json_io.hpp"

#include <cmath>
#include <limits>

#include "aaa/errors.hpp"

namespace aaa {

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double read_num(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Typed field access for user documents; every failure names the field.
template <class T>
T required(const json& j, const std::string& key, const std::string& path) {
  const std::string field = join(path, key);
  if (!j.is_object() || !j.contains(key)) throw ValidationError(field, "missing required field");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(field, "wrong type");
  }
}

template <class T>
T optional_field(const json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return required<T>(j, key, path);
}

const json& section(const json& j, const std::string& key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw ValidationError(key, "must be an object");
  return j.at(key);
}

std::vector<double> dose_list(const json& j, const std::string& key) {
  const auto v = required<std::vector<double>>(j, key, "");
  return v;
}

template <class Fn>
auto stored(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw CorruptLogError(std::string("malformed stored record: ") + e.what());
  }
}

json pairs(const std::vector<DosePair>& v) {
  json out = json::array();
  for (const DosePair& x : v) out.push_back(x);
  return out;
}

std::vector<DosePair> read_pairs(const json& j) {
  std::vector<DosePair> out;
  for (const json& e : j) out.push_back(e.get<DosePair>());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void to_json(json& j, const DosePair& x) { j = json::array({x.a, x.b}); }
void from_json(const json& j, DosePair& x) {
  if (!j.is_array() || j.size() != 2) throw json::type_error::create(302, "dose pair", &j);
  x = {j[0].get<double>(), j[1].get<double>()};
}

void to_json(json& j, const ToxicityParams& t) {
  j = {{"alpha0", t.alpha0}, {"alpha1", t.alpha1}, {"alpha2", t.alpha2}};
}
void from_json(const json& j, ToxicityParams& t) {
  t = {j.at("alpha0").get<double>(), j.at("alpha1").get<double>(), j.at("alpha2").get<double>()};
}

void to_json(json& j, const EfficacyParams& e) {
  j = {{"model", model_name(e.model)}, {"beta0", e.beta0}, {"beta1", e.beta1},
       {"beta2", e.beta2},             {"beta3", e.beta3}, {"beta4", e.beta4}};
}
void from_json(const json& j, EfficacyParams& e) {
  e.model = parse_model(j.at("model").get<std::string>());
  e.beta0 = j.at("beta0").get<double>();
  e.beta1 = j.at("beta1").get<double>();
  e.beta2 = j.at("beta2").get<double>();
  e.beta3 = j.at("beta3").get<double>();
  e.beta4 = j.at("beta4").get<double>();
}

void to_json(json& j, const UtilityParams& u) {
  j = {{"eta0", u.eta0}, {"eta1", u.eta1}, {"eta2", u.eta2}, {"eta3", u.eta3}, {"pT", u.pT}};
}
void from_json(const json& j, UtilityParams& u) {
  u.eta0 = j.at("eta0").get<double>();
  u.eta1 = j.at("eta1").get<double>();
  u.eta2 = j.at("eta2").get<double>();
  u.eta3 = j.at("eta3").get<double>();
  u.pT = j.at("pT").get<double>();
}

void to_json(json& j, const CalibrationSpec& c) {
  j = {{"pT", c.pT}, {"q1", c.q1star}, {"q2", c.q2star}, {"U", c.Ustar}};
}

void to_json(json& j, const DesignConfig& d) {
  j = {{"pT", d.pT},     {"xi", d.xi}, {"credible", d.credible},     {"U0", d.U0},
       {"omega", d.omega}, {"N", d.N},   {"cohortSize", d.cohort_size}};
}

void to_json(json& j, const IMomHyperparams& h) { j = {{"k", h.k}, {"nu", h.nu}, {"tau", h.tau}}; }

void to_json(json& j, const TrialConfig& c) {
  j = {{"label", c.label},
       {"rawA", c.raw_a},
       {"rawB", c.raw_b},
       {"design", c.design},
       {"calibration", c.calibration},
       {"utility", c.utility},
       {"imom", c.imom},
       {"mcmc", {{"total", c.mcmc_total}, {"burnIn", c.mcmc_burn_in}}},
       {"seed", c.seed},
       {"acd", c.acd},
       {"idempotencyKey", c.idempotency_key}};
}

void from_json(const json& j, TrialConfig& c) {
  c.label = j.at("label").get<std::string>();
  c.raw_a = j.at("rawA").get<std::vector<double>>();
  c.raw_b = j.at("rawB").get<std::vector<double>>();
  const json& d = j.at("design");
  c.design.pT = d.at("pT").get<double>();
  c.design.xi = d.at("xi").get<double>();
  c.design.credible = d.at("credible").get<double>();
  c.design.U0 = d.at("U0").get<double>();
  c.design.omega = d.at("omega").get<double>();
  c.design.N = d.at("N").get<int>();
  c.design.cohort_size = d.at("cohortSize").get<int>();
  const json& cal = j.at("calibration");
  c.calibration = {cal.at("pT").get<double>(), cal.at("q1").get<double>(),
                   cal.at("q2").get<double>(), cal.at("U").get<double>()};
  c.utility = j.at("utility").get<UtilityParams>();
  const json& h = j.at("imom");
  c.imom = {h.at("k").get<double>(), h.at("nu").get<double>(), h.at("tau").get<double>()};
  c.mcmc_total = j.at("mcmc").at("total").get<int>();
  c.mcmc_burn_in = j.at("mcmc").at("burnIn").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.acd = j.at("acd").get<bool>();
  c.idempotency_key = j.at("idempotencyKey").get<std::string>();
}

void to_json(json& j, const Decision& d) {
  json rationale = d.rationale;
  j = {{"kind", decision_kind_name(d.kind)},
       {"doses", pairs(d.doses)},
       {"rationale", rationale},
       {"exclusions", pairs(d.exclusions)},
       {"entersAdaptive", d.enters_adaptive}};
}
void from_json(const json& j, Decision& d) {
  d.kind = parse_decision_kind(j.at("kind").get<std::string>());
  d.doses = read_pairs(j.at("doses"));
  d.rationale = j.at("rationale").get<std::vector<std::string>>();
  d.exclusions = read_pairs(j.at("exclusions"));
  d.enters_adaptive = j.at("entersAdaptive").get<bool>();
}

void to_json(json& j, const DoseSummary& s) {
  j = {{"dose", s.x},
       {"meanUtility", s.mean_utility},
       {"probToxic", s.prob_toxic},
       {"probUtilityAbove", s.prob_utility_above},
       {"meanToxicity", s.mean_toxicity},
       {"meanEfficacy", s.mean_efficacy}};
}
void from_json(const json& j, DoseSummary& s) {
  s.x = j.at("dose").get<DosePair>();
  s.mean_utility = j.at("meanUtility").get<double>();
  s.prob_toxic = j.at("probToxic").get<double>();
  s.prob_utility_above = j.at("probUtilityAbove").get<double>();
  s.mean_toxicity = j.at("meanToxicity").get<double>();
  s.mean_efficacy = j.at("meanEfficacy").get<double>();
}

void to_json(json& j, const FitSummary& f) {
  json lm = json::array();
  for (double v : f.log_marginals) lm.push_back(num(v));
  j = {{"seed", f.seed},
       {"logMarginals", lm},
       {"posteriors", f.posteriors},
       {"p3", f.p3},
       {"p4", f.p4},
       {"selected", model_name(f.selected)},
       {"doses", f.doses},
       {"meanTox", f.mean_tox},
       {"meanEff", f.mean_eff}};
  if (f.has_bodc) {
    j["bodc"] = {{"mean", f.bodc_mean},
                 {"discRadius", num(f.disc_radius)},
                 {"rHat", num(f.r_hat)},
                 {"insertionIndicated", f.insertion_indicated}};
  } else {
    j["bodc"] = nullptr;
  }
}
void from_json(const json& j, FitSummary& f) {
  f.seed = j.at("seed").get<std::uint64_t>();
  for (std::size_t i = 0; i < 4; ++i) {
    f.log_marginals[i] = read_num(j.at("logMarginals").at(i));
    f.posteriors[i] = j.at("posteriors").at(i).get<double>();
  }
  f.p3 = j.at("p3").get<double>();
  f.p4 = j.at("p4").get<double>();
  f.selected = parse_model(j.at("selected").get<std::string>());
  f.doses = j.at("doses").get<std::vector<DoseSummary>>();
  f.mean_tox = j.at("meanTox").get<ToxicityParams>();
  f.mean_eff = j.at("meanEff").get<EfficacyParams>();
  const json& b = j.at("bodc");
  f.has_bodc = !b.is_null();
  if (f.has_bodc) {
    f.bodc_mean = b.at("mean").get<DosePair>();
    f.disc_radius = read_num(b.at("discRadius"));
    f.r_hat = read_num(b.at("rHat"));
    f.insertion_indicated = b.at("insertionIndicated").get<bool>();
  }
}

void to_json(json& j, const TrialEvent& e) {
  json payload = std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TrialCreated>) {
          return {{"config", p.config}};
        } else if constexpr (std::is_same_v<T, CohortOpened>) {
          return {{"cohortId", p.cohort_id}, {"dose", p.dose}, {"capacity", p.capacity}};
        } else if constexpr (std::is_same_v<T, PatientEnrolled>) {
          return {{"cohortId", p.cohort_id}, {"patientId", p.patient_id}};
        } else if constexpr (std::is_same_v<T, CohortCollapsed>) {
          return {{"cohortId", p.cohort_id}};
        } else if constexpr (std::is_same_v<T, OutcomesRecorded>) {
          return {{"cohortId", p.cohort_id}, {"dose", p.dose}, {"y", p.y}, {"z", p.z}, {"n", p.n}};
        } else if constexpr (std::is_same_v<T, DecisionIssued>) {
          return {{"cohortId", p.cohort_id},
                  {"decision", p.decision},
                  {"assigned", pairs(p.assigned)},
                  {"fit", p.fit}};
        } else if constexpr (std::is_same_v<T, DoseInserted>) {
          return {{"dose", p.dose}};
        } else {
          return {{"selection", p.selection ? json(*p.selection) : json(nullptr)},
                  {"terminatedEarly", p.terminated_early},
                  {"reason", p.reason}};
        }
      },
      e.payload);
  j = {{"seq", e.seq}, {"time", e.time}, {"type", event_type_name(e.payload)}, {"payload", payload}};
}

void from_json(const json& j, TrialEvent& e) {
  e.seq = j.at("seq").get<std::uint64_t>();
  e.time = j.at("time").get<double>();
  const std::string type = j.at("type").get<std::string>();
  const json& p = j.at("payload");
  if (type == "TrialCreated") {
    e.payload = TrialCreated{p.at("config").get<TrialConfig>()};
  } else if (type == "CohortOpened") {
    e.payload = CohortOpened{p.at("cohortId").get<int>(), p.at("dose").get<DosePair>(),
                             p.at("capacity").get<int>()};
  } else if (type == "PatientEnrolled") {
    e.payload = PatientEnrolled{p.at("cohortId").get<int>(), p.at("patientId").get<int>()};
  } else if (type == "CohortCollapsed") {
    e.payload = CohortCollapsed{p.at("cohortId").get<int>()};
  } else if (type == "OutcomesRecorded") {
    e.payload = OutcomesRecorded{p.at("cohortId").get<int>(), p.at("dose").get<DosePair>(),
                                 p.at("y").get<int>(), p.at("z").get<int>(), p.at("n").get<int>()};
  } else if (type == "DecisionIssued") {
    e.payload = DecisionIssued{p.at("cohortId").get<int>(), p.at("decision").get<Decision>(),
                               read_pairs(p.at("assigned")), p.at("fit").get<FitSummary>()};
  } else if (type == "DoseInserted") {
    e.payload = DoseInserted{p.at("dose").get<DosePair>()};
  } else if (type == "TrialClosed") {
    TrialClosed c;
    if (!p.at("selection").is_null()) c.selection = p.at("selection").get<DosePair>();
    c.terminated_early = p.at("terminatedEarly").get<bool>();
    c.reason = p.at("reason").get<std::string>();
    e.payload = c;
  } else {
    throw CorruptLogError("unknown event type '" + type + "'");
  }
}

std::string event_to_line(const TrialEvent& e) { return json(e).dump(); }

TrialEvent event_from_line(const std::string& line) {
  return stored([&] {
    try {
      return json::parse(line).get<TrialEvent>();
    } catch (const ValidationError& err) {
      throw CorruptLogError(std::string("malformed event: ") + err.what());
    }
  });
}

void to_json(json& j, const Cohort& c) {
  j = {{"id", c.id},           {"dose", c.dose},     {"capacity", c.capacity},
       {"enrolled", c.enrolled}, {"enrolling", c.enrolling}, {"stage2", c.stage2},
       {"members", c.members}};
}

void to_json(json& j, const TimeModel& t) {
  j = {{"accrualRate", t.accrual_rate},
       {"followUp", t.follow_up},
       {"arrivals", t.arrivals == ArrivalProcess::Poisson ? "Poisson" : "Fixed"}};
}

void to_json(json& j, const TrueEfficacy& e) {
  j = {{"beta0", e.beta0}, {"beta1", e.beta1}, {"beta2", e.beta2},
       {"beta3", e.beta3}, {"beta4", e.beta4}, {"beta5", e.beta5}};
}

void to_json(json& j, const ScenarioSpec& s) {
  j = {{"label", s.label}, {"rawA", s.raw_a}, {"rawB", s.raw_b},
       {"trueTox", s.tox}, {"trueEff", s.eff}};
  if (s.documented_bodc_raw) j["trueBodcRaw"] = *s.documented_bodc_raw;
}

void to_json(json& j, const TrialRecord& r) {
  json alloc = json::array();
  for (const DoseCount& c : r.allocation) alloc.push_back({{"dose", c.x}, {"n", c.n}});
  json events = json::array();
  for (const TrialEvent& e : r.events) events.push_back(e);
  j = {{"replicate", r.replicate},
       {"seed", r.seed},
       {"acd", r.acd},
       {"allocation", alloc},
       {"insertions", pairs(r.insertions)},
       {"selection", r.selection ? json(*r.selection) : json(nullptr)},
       {"selectionInserted", r.selection_inserted},
       {"terminatedEarly", r.terminated_early},
       {"divided", r.divided},
       {"duration", r.duration},
       {"finalModel", model_name(r.final_model)},
       {"posteriorTox", r.posterior_tox},
       {"posteriorEff", r.posterior_eff},
       {"error", r.error},
       {"events", events}};
}

void to_json(json& j, const OperatingCharacteristics& oc) {
  static const char* names[] = {"alpha0", "alpha1", "alpha2", "beta0",
                                "beta1",  "beta2",  "beta3",  "beta4"};
  json post = json::object();
  for (std::size_t i = 0; i < oc.posterior_means.size(); ++i) {
    post[names[i]] = {{"mean", oc.posterior_means[i].mean}, {"sd", oc.posterior_means[i].sd}};
  }
  json models = json::object();
  for (ModelId m : kAllModels) models[std::string(model_name(m))] = oc.model_selection_pct[model_index(m)];
  j = {{"schemaVersion", kSchemaVersion},
       {"label", oc.label},
       {"replicates", oc.replicates},
       {"failed", oc.failed},
       {"acd", oc.acd},
       {"rawA", oc.raw_a},
       {"rawB", oc.raw_b},
       {"selectionPct", oc.selection_pct},
       {"selectionInsertedPct", oc.selection_inserted_pct},
       {"selectionNonePct", oc.selection_none_pct},
       {"allocationPct", oc.allocation_pct},
       {"allocationInsertedPct", oc.allocation_inserted_pct},
       {"insertionRatePct", oc.insertion_rate},
       {"modelSelectionPct", models},
       {"posteriorMeans", post},
       {"meanSelected", oc.mean_selected ? json(*oc.mean_selected) : json(nullptr)},
       {"meanSelectedRaw", oc.mean_selected_raw ? json(*oc.mean_selected_raw) : json(nullptr)},
       {"duration", {{"mean", oc.duration.mean}, {"sd", oc.duration.sd}}},
       {"earlyTerminationRate", oc.early_termination_rate},
       {"meanPatients", oc.mean_patients}};
}

void to_json(json& j, const DurationComparison& d) {
  json pairs_json = json::array();
  for (const DurationPair& p : d.pairs) {
    pairs_json.push_back({{"seed", p.seed},
                          {"withAcd", p.with_acd},
                          {"withoutAcd", p.without_acd},
                          {"divided", p.divided}});
  }
  j = {{"schemaVersion", kSchemaVersion},
       {"meanWithAcd", d.mean_with_acd},
       {"meanWithoutAcd", d.mean_without_acd},
       {"meanSaving", d.mean_saving},
       {"acdLonger", d.acd_longer},
       {"pairs", pairs_json}};
}

// ---------------------------------------------------------------------------
// User input

CalibrationSpec calibration_from_json(const json& j, double pT) {
  CalibrationSpec c;
  c.pT = pT;
  c.q1star = optional_field<double>(j, "q1", "calibration", c.q1star);
  c.q2star = optional_field<double>(j, "q2", "calibration", c.q2star);
  c.Ustar = optional_field<double>(j, "U", "calibration", c.Ustar);
  return c;
}

TimeModel time_model_from_json(const json& j) {
  TimeModel t;
  t.accrual_rate = optional_field<double>(j, "accrualRate", "time", t.accrual_rate);
  t.follow_up = optional_field<double>(j, "followUp", "time", t.follow_up);
  const auto arrivals = optional_field<std::string>(j, "arrivals", "time", "Poisson");
  if (arrivals == "Poisson") {
    t.arrivals = ArrivalProcess::Poisson;
  } else if (arrivals == "Fixed") {
    t.arrivals = ArrivalProcess::Fixed;
  } else {
    throw ValidationError("time.arrivals", "must be \"Poisson\" or \"Fixed\"");
  }
  t.validate();
  return t;
}

namespace {

TrialConfig config_without_grid(const json& j) {
  if (!j.is_object()) throw ValidationError("", "expected a JSON object");
  TrialConfig c;
  const json& d = section(j, "design");
  c.design.pT = optional_field<double>(d, "pT", "design", c.design.pT);
  c.design.pT = optional_field<double>(j, "pT", "", c.design.pT);
  c.design.xi = optional_field<double>(d, "xi", "design", c.design.xi);
  c.design.credible = optional_field<double>(d, "credible", "design", c.design.credible);
  c.design.U0 = optional_field<double>(d, "U0", "design", c.design.U0);
  c.design.omega = optional_field<double>(d, "omega", "design", c.design.omega);
  c.design.N = optional_field<int>(d, "N", "design", c.design.N);
  c.design.cohort_size = optional_field<int>(d, "cohortSize", "design", c.design.cohort_size);
  if (!(c.design.pT > 0.0 && c.design.pT < 1.0)) {
    throw ValidationError(j.contains("pT") ? "pT" : "design.pT", "pT must lie in (0,1)");
  }
  c.calibration = calibration_from_json(section(j, "calibration"), c.design.pT);
  const json& h = section(j, "imom");
  c.imom.k = optional_field<double>(h, "k", "imom", c.imom.k);
  c.imom.nu = optional_field<double>(h, "nu", "imom", c.imom.nu);
  c.imom.tau = optional_field<double>(h, "tau", "imom", c.imom.tau);
  const json& m = section(j, "mcmc");
  c.mcmc_total = optional_field<int>(m, "total", "mcmc", c.mcmc_total);
  c.mcmc_burn_in = optional_field<int>(m, "burnIn", "mcmc", c.mcmc_burn_in);
  c.seed = optional_field<std::uint64_t>(j, "seed", "", c.seed);
  c.acd = optional_field<bool>(j, "acd", "", c.acd);
  c.label = optional_field<std::string>(j, "label", "", "");
  c.idempotency_key = optional_field<std::string>(j, "idempotencyKey", "", "");
  return c;
}

void finish_config(TrialConfig& c) {
  c.validate();
  c.utility = calibrate_eta(c.calibration);
}

}  // namespace

TrialConfig trial_config_from_json(const json& j) {
  TrialConfig c = config_without_grid(j);
  c.raw_a = dose_list(j, "rawA");
  c.raw_b = dose_list(j, "rawB");
  finish_config(c);
  return c;
}

DesignFile design_file_from_json(const json& j) {
  DesignFile f;
  f.base = config_without_grid(j);
  // Placeholder grid so the design validates; the scenario supplies the real one.
  f.base.raw_a = {1.0, 2.0};
  f.base.raw_b = {1.0, 2.0};
  finish_config(f.base);
  f.base.raw_a.clear();
  f.base.raw_b.clear();
  f.time = time_model_from_json(section(j, "time"));
  return f;
}

ScenarioSpec scenario_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("", "expected a JSON object");
  ScenarioSpec s;
  s.label = optional_field<std::string>(j, "label", "", "");
  s.raw_a = dose_list(j, "rawA");
  s.raw_b = dose_list(j, "rawB");
  const json& t = section(j, "trueTox");
  s.tox.alpha0 = required<double>(t, "alpha0", "trueTox");
  s.tox.alpha1 = required<double>(t, "alpha1", "trueTox");
  s.tox.alpha2 = required<double>(t, "alpha2", "trueTox");
  const json& e = section(j, "trueEff");
  s.eff.beta0 = required<double>(e, "beta0", "trueEff");
  s.eff.beta1 = required<double>(e, "beta1", "trueEff");
  s.eff.beta2 = required<double>(e, "beta2", "trueEff");
  s.eff.beta3 = optional_field<double>(e, "beta3", "trueEff", 0.0);
  s.eff.beta4 = optional_field<double>(e, "beta4", "trueEff", 0.0);
  s.eff.beta5 = optional_field<double>(e, "beta5", "trueEff", 0.0);
  if (j.contains("trueBodcRaw")) {
    const auto v = required<std::vector<double>>(j, "trueBodcRaw", "");
    if (v.size() != 2) throw ValidationError("trueBodcRaw", "expected [a, b]");
    s.documented_bodc_raw = DosePair{v[0], v[1]};
  }
  try {
    s.validate();
  } catch (const ValidationError& err) {
    if (err.field().rfind("rawA", 0) == 0 || err.field().rfind("rawB", 0) == 0) throw;
    throw ValidationError(err.field() == "scenario" ? "trueTox" : "trueTox." + err.field(),
                          err.what());
  }
  return s;
}

json state_to_json(const TrialState& s) {
  json levels_a = json::array();
  json levels_b = json::array();
  for (double v : s.grid.levels_a()) levels_a.push_back(v);
  for (double v : s.grid.levels_b()) levels_b.push_back(v);
  json cells = json::array();
  for (std::size_t j = 0; j < s.grid.size_a(); ++j) {
    for (std::size_t k = 0; k < s.grid.size_b(); ++k) {
      const DosePair x = s.grid.point(j, k);
      const DoseRecord* r = s.data.find(x);
      std::string status = "untried";
      if (s.grid.is_excluded(x)) {
        status = "excluded";
      } else if (std::any_of(s.open_cohorts.begin(), s.open_cohorts.end(),
                             [&](const Cohort& c) { return c.dose == x; })) {
        status = "active";
      } else if (r && r->n > 0) {
        status = "tried";
      }
      cells.push_back({{"level", {j + 1, k + 1}},
                       {"dose", x},
                       {"raw", s.grid.to_raw(x)},
                       {"prespecified", s.grid.is_prespecified(x)},
                       {"status", status},
                       {"n", r ? r->n : 0},
                       {"y", r ? r->y : 0},
                       {"z", r ? r->z : 0}});
    }
  }
  json corners = json::array();
  for (const DosePair& c : s.grid.exclusion_corners()) corners.push_back(c);
  json inserted = json::array();
  for (const DosePair& c : s.grid.inserted()) inserted.push_back(c);
  return {{"schemaVersion", kSchemaVersion},
          {"stage", stage_name(s.stage)},
          {"levelsA", levels_a},
          {"levelsB", levels_b},
          {"cells", cells},
          {"exclusionCorners", corners},
          {"inserted", inserted},
          {"openCohorts", s.open_cohorts},
          {"n1", s.n1},
          {"n2", s.n2()},
          {"committed", s.committed()},
          {"totalN", s.data.total_n()},
          {"decisions", s.decision_count},
          {"finalSelection", s.final_selection ? json(*s.final_selection) : json(nullptr)},
          {"terminatedEarly", s.terminated_early},
          {"config", s.config}};
}

}  // namespace aaa
