#include "aaa/trial_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "aaa/errors.hpp"

namespace aaa {

namespace {

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

struct PatientLatent {
  double u_tox;
  double u_eff;
};

// Latent uniforms per enrollment order, shared by paired runs.
class LatentOutcomes {
 public:
  explicit LatentOutcomes(std::uint64_t seed) : rng_(seed) {}

  PatientLatent at(std::size_t i) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    while (cache_.size() <= i) {
      const double a = unif(rng_);
      const double b = unif(rng_);
      cache_.push_back({a, b});
    }
    return cache_[i];
  }

 private:
  Rng rng_;
  std::vector<PatientLatent> cache_;
};

class ArrivalStream {
 public:
  ArrivalStream(std::uint64_t seed, const TimeModel& time) : rng_(seed), time_(time) {}

  double next() {
    if (time_.arrivals == ArrivalProcess::Fixed) {
      t_ += 1.0 / time_.accrual_rate;
    } else {
      std::exponential_distribution<double> gap(time_.accrual_rate);
      t_ += gap(rng_);
    }
    return t_;
  }

 private:
  Rng rng_;
  TimeModel time_;
  double t_ = 0.0;
};

void fill_record_from_log(TrialRecord& rec, const TrialState& state) {
  std::map<DosePair, int> alloc;
  for (const TrialEvent& e : state.log) {
    if (const auto* o = std::get_if<OutcomesRecorded>(&e.payload)) {
      alloc[o->dose] += o->n;
    } else if (const auto* ins = std::get_if<DoseInserted>(&e.payload)) {
      rec.insertions.push_back(ins->dose);
    } else if (const auto* d = std::get_if<DecisionIssued>(&e.payload)) {
      if (d->decision.kind == DecisionKind::DivideCohorts) rec.divided = true;
      rec.final_model = d->fit.selected;
      rec.posterior_tox = d->fit.mean_tox;
      rec.posterior_eff = d->fit.mean_eff;
    }
  }
  for (const auto& [x, n] : alloc) rec.allocation.push_back({x, n});
  rec.selection = state.final_selection;
  rec.selection_inserted = rec.selection && !state.grid.is_prespecified(*rec.selection);
  rec.terminated_early = state.terminated_early;
  rec.events = state.log;
}

MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd out;
  if (v.empty()) return out;
  double s = 0.0;
  for (double x : v) s += x;
  out.mean = s / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

}  // namespace

void ScenarioSpec::validate() const {
  tox.validate();
  const DoseGrid g = grid();
  for (const DosePair& x : g.points()) {
    const double p = p_true(x);
    const double q = q_true(x);
    if (!(p > 0.0 && p < 1.0) || !(q > 0.0 && q < 1.0)) {
      throw ValidationError("scenario", "true probabilities must lie in (0,1)");
    }
  }
}

void TimeModel::validate() const {
  if (!(accrual_rate > 0.0)) throw ValidationError("time.accrualRate", "must be positive");
  if (!(follow_up > 0.0)) throw ValidationError("time.followUp", "must be positive");
}

std::optional<DosePair> true_bodc(const ScenarioSpec& s, const UtilityParams& u, int n) {
  const DoseGrid g = s.grid();
  const SearchRegion region = SearchRegion::for_grid(g);
  DosePair best{};
  double best_u = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = region.lo.a + (region.hi.a - region.lo.a) * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double b = region.lo.b + (region.hi.b - region.lo.b) * j / (n - 1);
      const double p = s.p_true({a, b});
      if (p > u.pT) continue;
      const double v = utility_safety(p, u) * utility_efficacy(s.q_true({a, b}), u);
      if (v > best_u) {
        best_u = v;
        best = {a, b};
      }
    }
  }
  if (!(best_u > 0.0)) return std::nullopt;
  return best;
}

CohortOutcome simulate_cohort_outcomes(const ScenarioSpec& s, DosePair x, int m, Rng& rng) {
  if (m < 1) throw ValidationError("m", "cohort size must be >= 1");
  std::binomial_distribution<int> tox(m, s.p_true(x));
  std::binomial_distribution<int> eff(m, s.q_true(x));
  const int y = tox(rng);
  const int z = eff(rng);
  return {y, z};
}

TrialRecord run_trial(const ScenarioSpec& s, const TrialConfig& base, const TimeModel& time,
                      bool acd, std::uint64_t seed) {
  time.validate();
  TrialConfig cfg = base;
  cfg.raw_a = s.raw_a;
  cfg.raw_b = s.raw_b;
  cfg.seed = seed;
  cfg.acd = acd;
  if (cfg.label.empty()) cfg.label = s.label;

  TrialRecord rec;
  rec.seed = seed;
  rec.acd = acd;

  TrialState state;
  ArrivalStream arrivals(derive_seed(seed, stream::kArrivals), time);
  LatentOutcomes latent(derive_seed(seed, stream::kOutcomes));
  std::map<int, double> completion;  // cohort id -> completion time
  std::map<int, double> last_enrolled;
  double now = 0.0;
  std::size_t round_robin = 0;

  // Cohorts that stopped enrolling get a completion time.
  auto schedule = [&] {
    for (const Cohort& c : state.open_cohorts) {
      if (c.enrolling || completion.contains(c.id)) continue;
      completion[c.id] = last_enrolled.at(c.id) + time.follow_up;
    }
    std::erase_if(completion, [&](const auto& kv) { return !state.find_cohort(kv.first); });
  };

  try {
    cfg.validate();
    append_event(state, now, TrialCreated{cfg});
    append_event(state, now,
                 CohortOpened{state.next_cohort_id, state.grid.point(0, 0),
                              std::min(cfg.design.cohort_size, cfg.design.N)});
    double next_arrival = arrivals.next();

    while (state.stage != Stage::Done) {
      auto due = std::min_element(completion.begin(), completion.end(),
                                  [](const auto& l, const auto& r) {
                                    return l.second < r.second || (l.second == r.second &&
                                                                   l.first < r.first);
                                  });
      if (due != completion.end() && due->second <= next_arrival) {
        now = due->second;
        const int id = due->first;
        const Cohort cohort = *state.find_cohort(id);
        int y = 0;
        int z = 0;
        for (int pid : cohort.members) {
          const PatientLatent l = latent.at(static_cast<std::size_t>(pid - 1));
          y += l.u_tox < s.p_true(cohort.dose) ? 1 : 0;
          z += l.u_eff < s.q_true(cohort.dose) ? 1 : 0;
        }
        append_event(state, now, OutcomesRecorded{id, cohort.dose, y, z, cohort.capacity});
        completion.erase(id);
        const EpochResult epoch = run_epoch(state, id, cohort.dose);
        for (const EventPayload& p : epoch.events) {
          if (const auto* c = std::get_if<CohortCollapsed>(&p)) {
            if (!last_enrolled.contains(c->cohort_id)) last_enrolled[c->cohort_id] = now;
          }
          append_event(state, now, p);
        }
        schedule();
        continue;
      }

      std::vector<const Cohort*> enrolling;
      for (const Cohort& c : state.open_cohorts) {
        if (c.enrolling) enrolling.push_back(&c);
      }
      if (enrolling.empty() && completion.empty()) {
        throw Error("simulation stalled: no enrolling cohort and nothing in follow-up");
      }
      now = next_arrival;
      next_arrival = arrivals.next();
      if (enrolling.empty()) continue;  // nobody to enroll into
      const Cohort* target = enrolling[round_robin++ % enrolling.size()];
      const int cohort_id = target->id;
      append_event(state, now, PatientEnrolled{cohort_id, state.next_patient_id});
      last_enrolled[cohort_id] = now;
      schedule();
    }
    rec.duration = now;
    fill_record_from_log(rec, state);
  } catch (const std::exception& e) {
    rec.error = e.what();
    rec.duration = now;
    rec.events = state.log;
  }
  return rec;
}

std::uint64_t replicate_seed(std::uint64_t root_seed, std::size_t rep) {
  return derive_seed(root_seed, rep);
}

OperatingCharacteristics summarize_replicates(const ScenarioSpec& s,
                                              const std::vector<TrialRecord>& records) {
  OperatingCharacteristics oc;
  oc.label = s.label;
  oc.raw_a = s.raw_a;
  oc.raw_b = s.raw_b;
  oc.replicates = records.size();
  if (!records.empty()) oc.acd = records.front().acd;
  const DoseGrid grid = s.grid();
  const std::size_t J = grid.size_a();
  const std::size_t K = grid.size_b();
  oc.selection_pct.assign(J, std::vector<double>(K, 0.0));
  oc.allocation_pct.assign(J, std::vector<double>(K, 0.0));

  std::size_t ok = 0;
  double total_patients = 0.0;
  double inserted_patients = 0.0;
  std::size_t inserted_selection = 0;
  std::size_t none_selection = 0;
  std::size_t with_insertion = 0;
  std::size_t early = 0;
  std::array<std::size_t, 4> models{};
  std::array<std::vector<double>, 8> post;
  std::vector<double> durations;
  double sel_a = 0.0;
  double sel_b = 0.0;
  std::size_t n_sel = 0;

  for (const TrialRecord& r : records) {
    if (!r.error.empty()) {
      ++oc.failed;
      continue;
    }
    ++ok;
    for (const DoseCount& c : r.allocation) {
      total_patients += c.n;
      if (auto idx = grid.index_of(c.x)) {
        oc.allocation_pct[idx->j][idx->k] += c.n;
      } else {
        inserted_patients += c.n;
      }
    }
    if (!r.insertions.empty()) ++with_insertion;
    if (r.terminated_early) ++early;
    if (!r.selection) {
      ++none_selection;
    } else {
      if (auto idx = grid.index_of(*r.selection)) {
        oc.selection_pct[idx->j][idx->k] += 1.0;
      } else {
        ++inserted_selection;
      }
      sel_a += r.selection->a;
      sel_b += r.selection->b;
      ++n_sel;
    }
    ++models[model_index(r.final_model)];
    const std::array<double, 8> v = {r.posterior_tox.alpha0, r.posterior_tox.alpha1,
                                     r.posterior_tox.alpha2, r.posterior_eff.beta0,
                                     r.posterior_eff.beta1,  r.posterior_eff.beta2,
                                     r.posterior_eff.beta3,  r.posterior_eff.beta4};
    for (std::size_t i = 0; i < v.size(); ++i) post[i].push_back(v[i]);
    durations.push_back(r.duration);
  }
  if (ok == 0) return oc;

  const double reps = static_cast<double>(ok);
  for (auto& row : oc.selection_pct) {
    for (double& v : row) v *= 100.0 / reps;
  }
  if (total_patients > 0) {
    for (auto& row : oc.allocation_pct) {
      for (double& v : row) v *= 100.0 / total_patients;
    }
    oc.allocation_inserted_pct = 100.0 * inserted_patients / total_patients;
  }
  oc.selection_inserted_pct = 100.0 * static_cast<double>(inserted_selection) / reps;
  oc.selection_none_pct = 100.0 * static_cast<double>(none_selection) / reps;
  oc.insertion_rate = 100.0 * static_cast<double>(with_insertion) / reps;
  for (std::size_t m = 0; m < 4; ++m) {
    oc.model_selection_pct[m] = 100.0 * static_cast<double>(models[m]) / reps;
  }
  for (std::size_t i = 0; i < post.size(); ++i) oc.posterior_means[i] = mean_sd(post[i]);
  if (n_sel > 0) {
    oc.mean_selected = DosePair{sel_a / static_cast<double>(n_sel),
                                sel_b / static_cast<double>(n_sel)};
    oc.mean_selected_raw = grid.to_raw(*oc.mean_selected);
  }
  oc.duration = mean_sd(durations);
  oc.early_termination_rate = static_cast<double>(early) / reps;
  oc.mean_patients = total_patients / reps;
  return oc;
}

ReplicateRun run_replicates(const ScenarioSpec& s, const TrialConfig& base, const TimeModel& time,
                            bool acd, std::size_t n_reps, std::uint64_t root_seed,
                            unsigned threads) {
  if (n_reps < 1) throw ValidationError("reps", "at least one replicate is required");
  ReplicateRun run;
  run.records.resize(n_reps);
  parallel_for(n_reps, threads, [&](std::size_t i) {
    TrialRecord r = run_trial(s, base, time, acd, replicate_seed(root_seed, i));
    r.replicate = i;
    run.records[i] = std::move(r);
  });
  run.oc = summarize_replicates(s, run.records);
  return run;
}

DurationComparison duration_comparison(const ScenarioSpec& s, const TrialConfig& base,
                                       const TimeModel& time, std::size_t n_reps,
                                       std::uint64_t root_seed, unsigned threads) {
  DurationComparison out;
  out.pairs.resize(n_reps);
  parallel_for(n_reps, threads, [&](std::size_t i) {
    const std::uint64_t seed = replicate_seed(root_seed, i);
    const TrialRecord with = run_trial(s, base, time, true, seed);
    const TrialRecord without = run_trial(s, base, time, false, seed);
    if (!with.error.empty()) throw Error("replicate " + std::to_string(i) + ": " + with.error);
    if (!without.error.empty()) {
      throw Error("replicate " + std::to_string(i) + ": " + without.error);
    }
    out.pairs[i] = {seed, with.duration, without.duration, with.divided};
  });
  for (const DurationPair& p : out.pairs) {
    out.mean_with_acd += p.with_acd;
    out.mean_without_acd += p.without_acd;
    if (p.with_acd > p.without_acd) ++out.acd_longer;
  }
  if (n_reps > 0) {
    out.mean_with_acd /= static_cast<double>(n_reps);
    out.mean_without_acd /= static_cast<double>(n_reps);
  }
  out.mean_saving = out.mean_without_acd - out.mean_with_acd;
  return out;
}

}  // namespace aaa
