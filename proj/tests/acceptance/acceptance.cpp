#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "aaa/conduct_service.hpp"
#include "aaa/decision_engine.hpp"
#include "aaa/trial_sim.hpp"
#include "support.hpp"

using namespace aaa;

namespace {

constexpr std::uint64_t kRootSeed = 7;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void calibration() {
  const auto t0 = std::chrono::steady_clock::now();
  const UtilityParams u = calibrate_eta({0.3, 0.45, 0.85, 0.3});
  const double secs = seconds_since(t0);
  const double err = std::max({std::abs(u.eta0 - 0.396), std::abs(u.eta1 - 0.385),
                               std::abs(u.eta2 - 1.280), std::abs(u.eta3 + 0.385)});
  report(err <= 1e-3 && secs < 1.0, "utility calibration",
         fmt("eta=(%.6f, %.6f, %.6f, %.6f) max|diff|=%.2e in %.3f s", u.eta0, u.eta1, u.eta2,
             u.eta3, err, secs));
}

void calibration_round_trip() {
  const CalibrationSpec spec{0.3, 0.45, 0.85, 0.3};
  const UtilityParams u = calibrate_eta(spec);
  auto logit = [](double p) { return std::log(p / (1 - p)); };
  // toxicity probability 0 is the limit of a very negative intercept
  const double u1 = overall_utility({0, 0}, {-800.0, 1, 1}, {ModelId::M1, logit(spec.q1star)}, u);
  const double u2 =
      overall_utility({0, 0}, fixtures::toxicity_at_most(spec.pT), {ModelId::M1, logit(spec.q2star)}, u);
  const double err = std::max(std::abs(u1 - 0.3), std::abs(u2 - 0.3));
  report(err <= 1e-6, "calibration round-trip",
         fmt("U(0, 0.45)=%.9f U(0.3, 0.85)=%.9f max|diff|=%.2e", u1, u2, err));
}

void mpm_logic() {
  auto oracle = [](double p3, double p4) {
    if (p3 < 0.5 && p4 < 0.5) return ModelId::M1;
    if (p3 >= 0.5 && p4 < 0.5) return ModelId::M2;
    if (p3 < 0.5) return ModelId::M3;
    return ModelId::M4;
  };
  std::vector<double> values;
  for (int i = 0; i <= 100; ++i) values.push_back(i / 100.0);
  values.push_back(std::nextafter(0.5, 0.0));
  values.push_back(std::nextafter(0.5, 1.0));
  std::size_t total = 0;
  std::size_t agree = 0;
  std::array<std::size_t, 4> seen{};
  for (double p3 : values) {
    for (double p4 : values) {
      ++total;
      const ModelId m = select_mpm(p3, p4);
      agree += m == oracle(p3, p4);
      ++seen[model_index(m)];
    }
  }
  const bool boundaries = select_mpm(0.5, 0.5) == ModelId::M4 &&
                          select_mpm(0.5, 0.49) == ModelId::M2 &&
                          select_mpm(0.49, 0.5) == ModelId::M3;
  const bool all_regions = std::all_of(seen.begin(), seen.end(), [](auto n) { return n > 0; });
  report(agree == total && boundaries && all_regions, "MPM logic",
         fmt("%zu/%zu (p3, p4) points agree, boundaries at 1/2 %s", agree, total,
             boundaries ? "correct" : "wrong"));
}

void harmonic_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  double truth = 0.0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto toy = fixtures::harmonic_toy(derive_seed(kRootSeed, s), 10000);
    truth = toy.quadrature;
    worst = std::max(worst, std::abs(toy.estimate - toy.quadrature));
  }
  const double secs = seconds_since(t0);
  report(worst <= 0.5 && secs < 30.0, "marginal-likelihood oracle",
         fmt("quadrature log m=%.4f, worst |harmonic - truth| over 10 seeds=%.4f nats, %.2f s",
             truth, worst, secs));
}

void bodc_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const UtilityParams u = fixtures::default_utility();
  const DoseGrid g = DoseGrid::standardize(fixtures::kRawA, fixtures::kRawB);
  const SearchRegion region = SearchRegion::for_grid(g);
  const double cell_a = (region.hi.a - region.lo.a) / 500;
  const double cell_b = (region.hi.b - region.lo.b) / 500;
  std::mt19937_64 rng(kRootSeed);
  int ok = 0;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Draw d = fixtures::random_draw(rng);
    const DosePair fast = draw_argmax(d.tox, d.eff, u, region);
    const DosePair brute = fixtures::brute_force_argmax(d, u, region.lo, region.hi, 501);
    const double da = std::abs(fast.a - brute.a) / cell_a;
    const double db = std::abs(fast.b - brute.b) / cell_b;
    worst = std::max({worst, da, db});
    ok += da <= 1.0 && db <= 1.0;
  }
  const double secs = seconds_since(t0);
  report(ok == 100 && secs < 60.0, "BODC oracle",
         fmt("%d/100 draws within one 501x501 cell (worst %.3f cells), %.2f s", ok, worst, secs));
}

DesignFile fast_design() {
  DesignFile f = fixtures::load_design();
  const McmcConfig fast = McmcConfig::fast();
  f.base.mcmc_total = fast.total;
  f.base.mcmc_burn_in = fast.burn_in;
  f.base.design.N = 96;
  f.base.design.cohort_size = 3;
  return f;
}

void scenario1() {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioSpec s = fixtures::load_scenario("scenario1.json");
  const DesignFile f = fast_design();
  const ReplicateRun run = run_replicates(s, f.base, f.time, true, 100, kRootSeed, worker_threads());
  const auto& oc = run.oc;
  const DoseGrid g = s.grid();
  const DosePair truth = g.from_raw(*s.documented_bodc_raw);
  const auto modal = std::max_element(oc.model_selection_pct.begin(), oc.model_selection_pct.end());
  const bool m4 = modal - oc.model_selection_pct.begin() == model_index(ModelId::M4) &&
                  std::count(oc.model_selection_pct.begin(), oc.model_selection_pct.end(), *modal) == 1;
  double dist = INFINITY;
  if (oc.mean_selected) {
    dist = std::hypot(oc.mean_selected->a - truth.a, oc.mean_selected->b - truth.b);
  }
  const bool insertion_ok = oc.insertion_rate >= 35.0 && oc.insertion_rate <= 80.0;
  const bool ok = oc.failed == 0 && insertion_ok && m4 && dist <= 0.10;
  std::ostringstream d;
  d << fmt("insertion %.1f%% (target 35-80%%), models M1..M4 = %.0f/%.0f/%.0f/%.0f%%, ",
           oc.insertion_rate, oc.model_selection_pct[0], oc.model_selection_pct[1],
           oc.model_selection_pct[2], oc.model_selection_pct[3]);
  if (oc.mean_selected) {
    d << fmt("mean selected (%.4f, %.4f) vs true (%.4f, %.4f), distance %.4f (max 0.10), ",
             oc.mean_selected->a, oc.mean_selected->b, truth.a, truth.b, dist);
  }
  d << fmt("failed %zu, %.0f s", oc.failed, seconds_since(t0));
  report(ok, "Scenario-1 operating characteristics", d.str());
}

void safety_scenario() {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioSpec s = fixtures::load_scenario("scenario4.json");
  const DesignFile f = fast_design();
  const ReplicateRun run =
      run_replicates(s, f.base, f.time, true, 100, derive_seed(kRootSeed, 4), worker_threads());
  const auto& oc = run.oc;
  const double pT = f.base.design.pT;
  double p_at_mean = NAN;
  bool inside = false;
  if (oc.mean_selected) {
    p_at_mean = s.p_true(*oc.mean_selected);
    inside = p_at_mean < pT;
  }
  const bool ok = oc.failed == 0 && oc.early_termination_rate > 0.0 && inside;
  std::ostringstream d;
  d << fmt("early termination %.1f%%, ", 100.0 * oc.early_termination_rate);
  if (oc.mean_selected) {
    d << fmt("mean selected (%.4f, %.4f) with true p=%.4f (< %.2f required), ",
             oc.mean_selected->a, oc.mean_selected->b, p_at_mean, pT);
  } else {
    d << "no selections, ";
  }
  d << fmt("failed %zu, %.0f s", oc.failed, seconds_since(t0));
  report(ok, "safety scenario", d.str());
}

void acd_duration() {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioSpec s = fixtures::load_scenario("scenario3.json");
  const DesignFile f = fast_design();
  const DurationComparison d = duration_comparison(s, f.base, f.time, 20,
                                                   derive_seed(kRootSeed, 3), worker_threads());
  std::size_t divided = 0;
  for (const auto& p : d.pairs) divided += p.divided;
  const bool ok = d.acd_longer == 0 && d.mean_saving > 0.0;
  report(ok, "ACD duration",
         fmt("%zu pairs, ACD longer in %zu, divided in %zu, mean %.1f vs %.1f days, saving %.1f "
             "days, %.0f s",
             d.pairs.size(), d.acd_longer, divided, d.mean_with_acd, d.mean_without_acd,
             d.mean_saving, seconds_since(t0)));
}

void determinism() {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioSpec s = fixtures::load_scenario("scenario3.json");
  DesignFile f = fast_design();
  f.base.design.N = 30;
  const unsigned many = std::max(4u, worker_threads());
  const ReplicateRun a = run_replicates(s, f.base, f.time, true, 4, kRootSeed, 1);
  const ReplicateRun b = run_replicates(s, f.base, f.time, true, 4, kRootSeed, many);
  const bool same = a.records == b.records && a.oc == b.oc;

  // Replay through the serialized log and through the in-memory events.
  bool replay_ok = true;
  std::size_t checked = 0;
  for (const TrialRecord& r : a.records) {
    std::vector<TrialEvent> parsed;
    for (const TrialEvent& e : r.events) parsed.push_back(event_from_line(event_to_line(e)));
    const TrialState direct = replay_events(r.events);
    const ReplayReport rep = replay_events_verified(parsed);
    checked += rep.decisions_checked;
    replay_ok = replay_ok && rep.verified() && rep.state == direct &&
                rep.state.final_selection == r.selection;
  }

  // A service trial restored from disk equals the live one.
  fixtures::TempDir dir;
  TrialService svc(dir.path(), ServiceOptions{true, false});
  json req = {{"rawA", fixtures::kRawA}, {"rawB", fixtures::kRawB}, {"seed", 99},
              {"mcmc", {{"total", 2000}, {"burnIn", 1000}}}};
  const std::string id = svc.create_trial(req).id;
  svc.record_outcomes(id, json{{"level", {1, 1}}, {"y", 0}, {"z", 1}, {"n", 3}});
  svc.record_outcomes(id, json{{"level", {2, 2}}, {"y", 1}, {"z", 2}, {"n", 3}});
  const TrialState live = svc.get_state(id);
  const ReplayReport from_disk = replay_log(dir.path() / (id + ".jsonl"));
  replay_ok = replay_ok && from_disk.verified() && from_disk.state == live;

  report(same && replay_ok, "determinism",
         fmt("records %s across 1 and %u threads; replay %s (%zu decisions recomputed), %.0f s",
             same ? "bit-identical" : "DIFFER", many, replay_ok ? "exact" : "MISMATCH", checked,
             seconds_since(t0)));
}

}  // namespace

int main() {
  const std::pair<const char*, void (*)()> checks[] = {
      {"utility calibration", calibration},
      {"calibration round-trip", calibration_round_trip},
      {"MPM logic", mpm_logic},
      {"marginal-likelihood oracle", harmonic_oracle},
      {"BODC oracle", bodc_oracle},
      {"Scenario-1 operating characteristics", scenario1},
      {"safety scenario", safety_scenario},
      {"ACD duration", acd_duration},
      {"determinism", determinism},
  };
  for (const auto& [name, fn] : checks) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(false, name, std::string("exception: ") + e.what());
    }
  }
  std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) +
                                                                      " acceptance criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
