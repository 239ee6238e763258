#include "aaa/decision_engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "aaa/errors.hpp"
#include "aaa/random.hpp"

namespace aaa {

namespace {

constexpr int kCoarsePoints = 51;
constexpr int kZoomPoints = 11;
constexpr int kZoomRounds = 2;

std::string fmt_dose(DosePair x) {
  std::ostringstream os;
  os.precision(4);
  os << '(' << x.a << ", " << x.b << ')';
  return os.str();
}

std::string fmt_level(LevelIndex idx) {
  return "(" + std::to_string(idx.j + 1) + "," + std::to_string(idx.k + 1) + ")";
}

double squared_distance(DosePair x, DosePair y) {
  const double da = x.a - y.a;
  const double db = x.b - y.b;
  return da * da + db * db;
}

// Utility of one parameter draw over the search region; -1 outside it so the
// simplex never leaves the rectangle.
class DrawUtility {
 public:
  DrawUtility(const ToxicityParams& tox, const EfficacyParams& eff, const UtilityParams& u,
              const SearchRegion& region)
      : tox_(tox), eff_(eff), u_(u), region_(region),
        logit_pt_(std::log(u.pT / (1.0 - u.pT))) {}

  double operator()(double a, double b) const {
    if (a < region_.lo.a || a > region_.hi.a || b < region_.lo.b || b > region_.hi.b) return -1.0;
    return inside(a, b);
  }

  double inside(double a, double b) const {
    const double et = toxicity_logit(tox_, {a, b});
    if (et > logit_pt_) return 0.0;
    const double p = logistic(et);
    const double q = logistic(efficacy_logit(eff_, {a, b}));
    return utility_safety(p, u_) * utility_efficacy(q, u_);
  }

 const ToxicityParams& tox() const { return tox_; }
  const EfficacyParams& eff() const { return eff_; }
  const UtilityParams& utility() const { return u_; }
  double logit_pt() const { return logit_pt_; }

 private:
  const ToxicityParams& tox_;
  const EfficacyParams& eff_;
  const UtilityParams& u_;
  const SearchRegion& region_;
  double logit_pt_;
};

struct Candidate {
  DosePair x;
  double value;
};

// Best point of an n x n lattice on [lo, hi]; first maximum wins ties. Both
// linear predictors are separable, so row and column terms are computed once.
Candidate lattice_max(const DrawUtility& f, DosePair lo, DosePair hi, int n, Candidate best) {
  const double da = (hi.a - lo.a) / (n - 1);
  const double db = (hi.b - lo.b) / (n - 1);
  const ToxicityParams& t = f.tox();
  const EfficacyParams& e = f.eff();
  const UtilityParams& u = f.utility();
  thread_local std::vector<double> tb, eb;
  tb.resize(n);
  eb.resize(n);
  for (int j = 0; j < n; ++j) {
    const double b = lo.b + db * j;
    tb[j] = t.alpha2 * b;
    eb[j] = e.beta2 * b + e.beta4 * b * b;
  }
  const double slope = (1.0 - u.eta0) / u.pT;
  for (int i = 0; i < n; ++i) {
    const double a = lo.a + da * i;
    const double ta = t.alpha0 + t.alpha1 * a;
    const double ea = e.beta0 + e.beta1 * a + e.beta3 * a * a;
    for (int j = 0; j < n; ++j) {
      const double et = ta + tb[j];
      if (et > f.logit_pt()) continue;
      const double p = 1.0 / (1.0 + std::exp(-et));
      const double q = 1.0 / (1.0 + std::exp(-(ea + eb[j])));
      const double v = (1.0 - slope * p) * (u.eta1 * std::exp(u.eta2 * q) + u.eta3);
      if (v > best.value) best = {{a, lo.b + db * j}, v};
    }
  }
  return best;
}

Candidate nelder_mead(const DrawUtility& f, Candidate start, double step) {
  std::array<Candidate, 3> s = {start,
                                Candidate{{start.x.a + step, start.x.b}, 0.0},
                                Candidate{{start.x.a, start.x.b + step}, 0.0}};
  s[1].value = f(s[1].x.a, s[1].x.b);
  s[2].value = f(s[2].x.a, s[2].x.b);
  auto eval = [&](DosePair x) { return Candidate{x, f(x.a, x.b)}; };
  auto lerp = [](DosePair from, DosePair to, double t) {
    return DosePair{from.a + t * (to.a - from.a), from.b + t * (to.b - from.b)};
  };

  for (int it = 0; it < 80; ++it) {
    std::sort(s.begin(), s.end(), [](const Candidate& l, const Candidate& r) {
      return l.value > r.value;
    });
    const double size = std::max(std::sqrt(squared_distance(s[0].x, s[1].x)),
                                 std::sqrt(squared_distance(s[0].x, s[2].x)));
    if (size < 1e-6) break;
    const DosePair centroid{0.5 * (s[0].x.a + s[1].x.a), 0.5 * (s[0].x.b + s[1].x.b)};
    const Candidate reflected = eval(lerp(s[2].x, centroid, 2.0));
    if (reflected.value > s[0].value) {
      const Candidate expanded = eval(lerp(s[2].x, centroid, 3.0));
      s[2] = expanded.value > reflected.value ? expanded : reflected;
    } else if (reflected.value > s[1].value) {
      s[2] = reflected;
    } else {
      const bool outside = reflected.value > s[2].value;
      const Candidate contracted =
          outside ? eval(lerp(s[2].x, centroid, 1.5)) : eval(lerp(s[2].x, centroid, 0.5));
      if (contracted.value > std::max(s[2].value, outside ? reflected.value : s[2].value)) {
        s[2] = contracted;
      } else {
        for (int k = 1; k < 3; ++k) s[k] = eval(lerp(s[0].x, s[k].x, 0.5));
      }
    }
  }
  return *std::max_element(s.begin(), s.end(), [](const Candidate& l, const Candidate& r) {
    return l.value < r.value;
  });
}

std::vector<DosePair> used_doses(const TrialState& state) { return state.treated; }

struct RankedDose {
  DosePair x;
  LevelIndex idx;
  DoseSummary summary;
};

// Higher utility first; ties to lower toxicity, lower level sum, lower A level.
bool ranks_before(const RankedDose& l, const RankedDose& r) {
  if (l.summary.mean_utility != r.summary.mean_utility) {
    return l.summary.mean_utility > r.summary.mean_utility;
  }
  if (l.summary.mean_toxicity != r.summary.mean_toxicity) {
    return l.summary.mean_toxicity < r.summary.mean_toxicity;
  }
  const auto lsum = l.idx.j + l.idx.k;
  const auto rsum = r.idx.j + r.idx.k;
  if (lsum != rsum) return lsum < rsum;
  return l.idx.j < r.idx.j;
}

Decision treat(DosePair x, std::vector<std::string> rationale) {
  Decision d;
  d.kind = DecisionKind::Treat;
  d.doses = {x};
  d.rationale = std::move(rationale);
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------

SearchRegion SearchRegion::for_grid(const DoseGrid& grid) {
  const DosePair lo_raw{0.5 * grid.raw_a().front(), 0.5 * grid.raw_b().front()};
  const DosePair hi_raw{2.0 * grid.raw_a().back(), 2.0 * grid.raw_b().back()};
  return {grid.from_raw(lo_raw), grid.from_raw(hi_raw)};
}

double prob_toxic(const Chain& chain, DosePair x, double pT) {
  if (chain.draws.empty()) throw ValidationError("chain", "chain has no draws");
  const double logit_pt = std::log(pT / (1.0 - pT));
  std::size_t count = 0;
  for (const Draw& d : chain.draws) {
    if (toxicity_logit(d.tox, x) > logit_pt) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(chain.draws.size());
}

bool is_dose_toxic(const Chain& chain, DosePair x, const DesignConfig& cfg) {
  return prob_toxic(chain, x, cfg.pT) > cfg.xi;
}

DoseSummary summarize_dose(const Chain& chain, DosePair x, const UtilityParams& u, double U0) {
  if (chain.draws.empty()) throw ValidationError("chain", "chain has no draws");
  DoseSummary s;
  s.x = x;
  std::size_t toxic = 0;
  std::size_t above = 0;
  for (const Draw& d : chain.draws) {
    const double p = logistic(toxicity_logit(d.tox, x));
    const double q = logistic(efficacy_logit(d.eff, x));
    const double util = utility_safety(p, u) * (p > u.pT ? 0.0 : utility_efficacy(q, u));
    s.mean_utility += util;
    s.mean_toxicity += p;
    s.mean_efficacy += q;
    if (p > u.pT) ++toxic;
    if (util > U0) ++above;
  }
  const double n = static_cast<double>(chain.draws.size());
  s.mean_utility /= n;
  s.mean_toxicity /= n;
  s.mean_efficacy /= n;
  s.prob_toxic = static_cast<double>(toxic) / n;
  s.prob_utility_above = static_cast<double>(above) / n;
  return s;
}

DosePair draw_argmax(const ToxicityParams& tox, const EfficacyParams& eff, const UtilityParams& u,
                     const SearchRegion& region, bool* degenerate) {
  const DrawUtility f(tox, eff, u, region);
  Candidate best = lattice_max(f, region.lo, region.hi, kCoarsePoints, {region.lo, 0.0});
  if (!(best.value > 0.0)) {
    if (degenerate) *degenerate = true;
    return region.lo;
  }
  if (degenerate) *degenerate = false;

  double half_a = (region.hi.a - region.lo.a) / (kCoarsePoints - 1);
  double half_b = (region.hi.b - region.lo.b) / (kCoarsePoints - 1);
  for (int round = 0; round < kZoomRounds; ++round) {
    const DosePair lo{std::max(region.lo.a, best.x.a - half_a),
                      std::max(region.lo.b, best.x.b - half_b)};
    const DosePair hi{std::min(region.hi.a, best.x.a + half_a),
                      std::min(region.hi.b, best.x.b + half_b)};
    best = lattice_max(f, lo, hi, kZoomPoints, best);
    half_a = 2.0 * half_a / (kZoomPoints - 1);
    half_b = 2.0 * half_b / (kZoomPoints - 1);
  }
  const Candidate polished = nelder_mead(f, best, 0.5 * std::min(half_a, half_b));
  return polished.value > best.value ? polished.x : best.x;
}

BodcEstimate estimate_bodc(const Chain& chain, const UtilityParams& u, const SearchRegion& region) {
  if (chain.draws.empty()) throw ValidationError("chain", "chain has no draws");
  BodcEstimate est;
  est.per_draw.reserve(chain.draws.size());
  double sum_a = 0.0;
  double sum_b = 0.0;
  for (const Draw& d : chain.draws) {
    bool degenerate = false;
    const DosePair x = draw_argmax(d.tox, d.eff, u, region, &degenerate);
    if (degenerate) ++est.degenerate_draws;
    est.per_draw.push_back(x);
    sum_a += x.a;
    sum_b += x.b;
  }
  const double n = static_cast<double>(est.per_draw.size());
  est.mean = {sum_a / n, sum_b / n};
  return est;
}

double nearest_dose_distance(DosePair center, const DoseGrid& grid) {
  double best = std::numeric_limits<double>::infinity();
  for (const DosePair& x : grid.non_excluded_points()) {
    best = std::min(best, squared_distance(center, x));
  }
  return std::sqrt(best);
}

bool insertion_indicator(const BodcEstimate& est, const DoseGrid& grid, const DesignConfig& cfg) {
  if (est.per_draw.empty()) throw ValidationError("bodc", "no per-draw optima");
  const double r = nearest_dose_distance(est.mean, grid);
  const double r2 = r * r;
  std::size_t inside = 0;
  for (const DosePair& x : est.per_draw) {
    if (squared_distance(x, est.mean) <= r2) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(est.per_draw.size()) > cfg.credible;
}

double credible_disc_radius(const BodcEstimate& est, double credible) {
  if (est.per_draw.empty()) return 0.0;
  std::vector<double> d;
  d.reserve(est.per_draw.size());
  for (const DosePair& x : est.per_draw) d.push_back(std::sqrt(squared_distance(x, est.mean)));
  std::sort(d.begin(), d.end());
  const auto rank = static_cast<std::size_t>(std::ceil(credible * static_cast<double>(d.size())));
  return d[std::clamp<std::size_t>(rank, 1, d.size()) - 1];
}

DosePair clip_insertion(DosePair candidate, const DoseGrid& grid, std::span<const DosePair> used) {
  auto clip_agent = [](double value, const AffineMap& map, std::span<const double> prespecified,
                       std::vector<double> used_raw) {
    if (used_raw.empty()) used_raw.assign(prespecified.begin(), prespecified.end());
    const auto [mn, mx] = std::minmax_element(used_raw.begin(), used_raw.end());
    const double raw = map.to_raw(value);
    const double clamped = std::clamp(raw, 0.5 * *mn, 2.0 * *mx);
    return clamped == raw ? value : map.to_std(clamped);
  };
  std::vector<double> used_a;
  std::vector<double> used_b;
  for (const DosePair& x : used) {
    used_a.push_back(grid.map_a().to_raw(x.a));
    used_b.push_back(grid.map_b().to_raw(x.b));
  }
  return {clip_agent(candidate.a, grid.map_a(), grid.raw_a(), std::move(used_a)),
          clip_agent(candidate.b, grid.map_b(), grid.raw_b(), std::move(used_b))};
}

bool skips_untried_dose(DosePair candidate, const DoseGrid& grid,
                        const std::function<bool(DosePair)>& tried) {
  for (const DosePair& x : grid.points()) {
    if (!grid.is_prespecified(x) || grid.is_excluded(x) || tried(x)) continue;
    if (x.a <= candidate.a && x.b <= candidate.b) return true;
  }
  return false;
}

TrialState apply_exclusion(TrialState state, DosePair toxic) {
  state.grid.exclude_from(toxic);
  return state;
}

std::optional<Decision> stage1_next(const TrialState& state, const Chain& chain,
                                    const DesignConfig& cfg, DosePair current) {
  const auto idx = state.grid.index_of(current);
  if (!idx) throw ValidationError("dose", "current dose is not on the grid");
  if (is_dose_toxic(chain, current, cfg)) return std::nullopt;
  const std::size_t J = state.grid.size_a();
  const std::size_t K = state.grid.size_b();
  if (idx->j + 1 >= J && idx->k + 1 >= K) return std::nullopt;

  LevelIndex next = *idx;
  if (next.j + 1 < J) ++next.j;
  if (next.k + 1 < K) ++next.k;
  Decision d;
  d.kind = DecisionKind::Escalate;
  d.doses = {state.grid.point(next)};
  d.rationale = {"stage I: " + fmt_level(*idx) + " safe, escalate to " + fmt_level(next)};
  return d;
}

Decision stage2_next(const TrialState& state, const ModelFit& fit, DosePair current,
                     const BodcEstimate* bodc) {
  const DesignConfig& cfg = state.config.design;
  const UtilityParams& u = state.config.utility;
  const Chain& chain = fit.selected_chain();
  DoseGrid grid = state.grid;
  Decision out;
  std::vector<std::string> why;
  std::vector<DosePair> exclusions;

  const auto cur_idx = grid.index_of(current);
  if (!cur_idx) throw ValidationError("dose", "current dose is not on the grid");

  bool current_toxic = grid.is_excluded(current);
  if (!current_toxic && is_dose_toxic(chain, current, cfg)) {
    current_toxic = true;
    exclusions.push_back(current);
    grid.exclude_from(current);
    why.push_back("current " + fmt_level(*cur_idx) + " toxic, excluding its upper block");
  }
  const DosePair lowest = grid.point(0, 0);
  if (!grid.is_excluded(lowest) && is_dose_toxic(chain, lowest, cfg)) {
    exclusions.push_back(lowest);
    grid.exclude_from(lowest);
    why.push_back("lowest dose toxic");
  }

  auto finish = [&](Decision d) {
    d.exclusions = exclusions;
    why.insert(why.end(), d.rationale.begin(), d.rationale.end());
    d.rationale = why;
    return d;
  };
  auto tried = [&](DosePair x) { return state.tried(x); };

  // (a) insertion
  BodcEstimate local;
  if (!bodc) {
    local = estimate_bodc(chain, u, SearchRegion::for_grid(state.grid));
    bodc = &local;
  }
  if (insertion_indicator(*bodc, grid, cfg)) {
    const std::vector<DosePair> used = used_doses(state);
    const DosePair cand = clip_insertion(bodc->mean, grid, used);
    if (cfg.N - state.committed() <= 0) {
      why.push_back("insertion indicated but no patients remain");
    } else if (grid.contains(cand)) {
      why.push_back("insertion indicated but the clipped dose is already on the grid");
    } else if (grid.is_excluded(cand)) {
      why.push_back("insertion indicated but " + fmt_dose(cand) + " is excluded");
    } else if (skips_untried_dose(cand, grid, tried)) {
      why.push_back("insertion of " + fmt_dose(cand) + " paused: an untried lower dose remains");
    } else if (is_dose_toxic(chain, cand, cfg)) {
      why.push_back("insertion of " + fmt_dose(cand) + " skipped: candidate toxic");
    } else {
      Decision d;
      d.kind = DecisionKind::Insert;
      d.doses = {cand};
      d.rationale = {"credible disc excludes all doses; insert " + fmt_dose(cand)};
      return finish(d);
    }
  }

  auto summary_of = [&](DosePair x) { return summarize_dose(chain, x, u, cfg.U0); };

  if (!current_toxic) {
    // (b) admissible neighbours
    std::vector<RankedDose> admissible;
    const auto J = static_cast<long>(grid.size_a());
    const auto K = static_cast<long>(grid.size_b());
    const auto j0 = static_cast<long>(cur_idx->j);
    const auto k0 = static_cast<long>(cur_idx->k);
    for (long j = std::max(0L, j0 - 1); j <= std::min(J - 1, j0 + 1); ++j) {
      for (long k = std::max(0L, k0 - 1); k <= std::min(K - 1, k0 + 1); ++k) {
        if ((j - j0) + (k - k0) > 1) continue;
        const LevelIndex idx{static_cast<std::size_t>(j), static_cast<std::size_t>(k)};
        const DosePair x = grid.point(idx);
        if (grid.is_excluded(x)) continue;
        const DoseSummary s = summary_of(x);
        if (s.prob_toxic > cfg.xi) continue;
        admissible.push_back({x, idx, s});
      }
    }
    std::sort(admissible.begin(), admissible.end(), ranks_before);
    const bool any_untried = std::any_of(admissible.begin(), admissible.end(),
                                         [&](const RankedDose& r) { return !tried(r.x); });
    const int n1 = state.stage == Stage::RunIn ? state.committed() : state.n1;
    const int n2_max = cfg.N - n1;
    const int n2 = state.stage == Stage::RunIn ? 0 : state.n2();
    const double threshold =
        n2_max > 0 ? std::pow(static_cast<double>(n2_max - n2) / n2_max, cfg.omega) : 0.0;
    for (const RankedDose& r : admissible) {
      if (!tried(r.x) || !any_untried) {
        return finish(treat(r.x, {"best admissible " + fmt_level(r.idx) +
                                  (tried(r.x) ? " (all neighbours tried)" : " (untried)")}));
      }
      if (r.summary.prob_utility_above > threshold) {
        std::ostringstream os;
        os << "best admissible " << fmt_level(r.idx) << " passes Pr{U>U0}="
           << r.summary.prob_utility_above << " > " << threshold;
        return finish(treat(r.x, {os.str()}));
      }
      why.push_back("tried " + fmt_level(r.idx) + " fails the exploration gate");
    }
  } else {
    // (c) de-escalation with cohort division
    std::vector<RankedDose> lower;
    auto consider = [&](bool exists, LevelIndex idx) {
      if (!exists) return;
      const DosePair x = grid.point(idx);
      if (grid.is_excluded(x) || tried(x)) return;
      const DoseSummary s = summary_of(x);
      if (s.prob_toxic > cfg.xi) return;
      lower.push_back({x, idx, s});
    };
    consider(cur_idx->j > 0, {cur_idx->j - 1, cur_idx->k});
    consider(cur_idx->k > 0, {cur_idx->j, cur_idx->k - 1});
    if (lower.size() == 2) {
      const bool all_prespecified = grid.is_prespecified(current) &&
                                    grid.is_prespecified(lower[0].x) &&
                                    grid.is_prespecified(lower[1].x);
      if (all_prespecified) {
        Decision d;
        d.kind = DecisionKind::DivideCohorts;
        d.doses = {lower[0].x, lower[1].x};
        d.rationale = {"de-escalate to both untried lower doses " + fmt_level(lower[0].idx) +
                       " and " + fmt_level(lower[1].idx)};
        return finish(d);
      }
      std::sort(lower.begin(), lower.end(), ranks_before);
      return finish(treat(lower[0].x, {"no division at inserted doses; de-escalate to " +
                                       fmt_level(lower[0].idx)}));
    }
    if (lower.size() == 1) {
      return finish(treat(lower[0].x, {"de-escalate to untried " + fmt_level(lower[0].idx)}));
    }
    if (!state.open_cohorts.empty()) {
      Decision d;
      d.kind = DecisionKind::TerminateCohort;
      d.rationale = {"no untried lower dose; wait for another cohort"};
      return finish(d);
    }
  }

  // (d) best safe tried dose
  std::vector<RankedDose> fallback;
  for (const DosePair& x : grid.non_excluded_points()) {
    if (state.data.n_at(x) == 0) continue;
    const DoseSummary s = summary_of(x);
    if (s.prob_toxic > cfg.xi) continue;
    fallback.push_back({x, *grid.index_of(x), s});
  }
  if (fallback.empty()) {
    Decision d;
    d.kind = DecisionKind::TerminateTrial;
    d.rationale = {"no safe dose remains and nothing can be inserted"};
    return finish(d);
  }
  std::sort(fallback.begin(), fallback.end(), ranks_before);
  return finish(treat(fallback.front().x,
                      {"fallback to best safe tried dose " + fmt_level(fallback.front().idx)}));
}

Decision next_decision(const TrialState& state, const ModelFit& fit, DosePair current) {
  if (state.stage == Stage::RunIn) {
    if (auto d = stage1_next(state, fit.selected_chain(), state.config.design, current)) return *d;
    Decision d = stage2_next(state, fit, current);
    d.enters_adaptive = true;
    return d;
  }
  return stage2_next(state, fit, current);
}

std::optional<DosePair> select_final(const TrialState& state, const ModelFit& fit) {
  const DesignConfig& cfg = state.config.design;
  const Chain& chain = fit.selected_chain();
  std::optional<DoseSummary> best;
  for (const DoseRecord& r : state.data.rows()) {
    if (r.n == 0 || state.grid.is_excluded(r.x)) continue;
    const DoseSummary s = summarize_dose(chain, r.x, state.config.utility, cfg.U0);
    if (s.prob_toxic > cfg.xi) continue;
    if (!best || s.mean_utility > best->mean_utility ||
        (s.mean_utility == best->mean_utility && s.mean_toxicity < best->mean_toxicity)) {
      best = s;
    }
  }
  if (!best) return std::nullopt;
  return best->x;
}

FitSummary summarize_fit(const ModelFit& fit, const TrialState& state, const BodcEstimate* bodc,
                         const DoseGrid* decision_grid) {
  const DoseGrid& before = decision_grid ? *decision_grid : state.grid;
  FitSummary s;
  s.seed = fit.seed;
  s.log_marginals = fit.log_marginals;
  s.posteriors = fit.posteriors;
  s.p3 = fit.p3;
  s.p4 = fit.p4;
  s.selected = fit.selected;
  const Chain& chain = fit.selected_chain();
  if (bodc) {
    s.has_bodc = true;
    s.bodc_mean = bodc->mean;
    s.disc_radius = credible_disc_radius(*bodc, state.config.design.credible);
    s.r_hat = nearest_dose_distance(bodc->mean, before);
    s.insertion_indicated = insertion_indicator(*bodc, before, state.config.design);
  }
  for (const DosePair& x : state.grid.non_excluded_points()) {
    s.doses.push_back(summarize_dose(chain, x, state.config.utility, state.config.design.U0));
  }
  ToxicityParams t{0.0, 0.0, 0.0};
  EfficacyParams e;
  e.model = chain.model;
  for (const Draw& d : chain.draws) {
    t.alpha0 += d.tox.alpha0;
    t.alpha1 += d.tox.alpha1;
    t.alpha2 += d.tox.alpha2;
    e.beta0 += d.eff.beta0;
    e.beta1 += d.eff.beta1;
    e.beta2 += d.eff.beta2;
    e.beta3 += d.eff.beta3;
    e.beta4 += d.eff.beta4;
  }
  const double n = static_cast<double>(chain.draws.size());
  s.mean_tox = {t.alpha0 / n, t.alpha1 / n, t.alpha2 / n};
  e.beta0 /= n;
  e.beta1 /= n;
  e.beta2 /= n;
  e.beta3 /= n;
  e.beta4 /= n;
  s.mean_eff = e;
  return s;
}

// ---------------------------------------------------------------------------

std::uint64_t fit_seed(const TrialConfig& cfg, std::size_t decision_index) {
  return derive_seed(derive_seed(cfg.seed, stream::kFit), decision_index);
}

EpochResult run_epoch(const TrialState& state, int completed_cohort_id, DosePair completed_dose,
                      bool parallel_chains) {
  if (state.stage == Stage::Done) throw Error("trial is closed");
  const TrialConfig& cfg = state.config;
  EpochResult out;
  out.fit = fit_models(state.data, cfg.imom, cfg.mcmc(), fit_seed(cfg, state.decision_count),
                       parallel_chains);

  std::optional<BodcEstimate> bodc;
  std::optional<Decision> decision;
  if (state.stage == Stage::RunIn) {
    decision = stage1_next(state, out.fit.selected_chain(), cfg.design, completed_dose);
  }
  if (!decision) {
    bodc = estimate_bodc(out.fit.selected_chain(), cfg.utility, SearchRegion::for_grid(state.grid));
    decision = stage2_next(state, out.fit, completed_dose, &*bodc);
    decision->enters_adaptive = state.stage == Stage::RunIn;
  }
  out.decision = *decision;
  const Decision& d = out.decision;

  // Doses to open, resolving division when it is disabled or does not fit.
  std::vector<DosePair> targets = d.doses;
  if (d.kind == DecisionKind::TerminateCohort || d.kind == DecisionKind::TerminateTrial) {
    targets.clear();
  }
  const int cohort_size = cfg.design.cohort_size;
  if (d.kind == DecisionKind::DivideCohorts) {
    const int room = cfg.design.N - state.committed();
    if (!cfg.acd) {
      Rng rng(derive_seed(derive_seed(cfg.seed, stream::kChoice), state.decision_count));
      std::bernoulli_distribution coin(0.5);
      targets = {targets[coin(rng) ? 1 : 0]};
    } else if (room < 2 * cohort_size && room > 0) {
      const auto& chain = out.fit.selected_chain();
      const auto s0 = summarize_dose(chain, targets[0], cfg.utility, cfg.design.U0);
      const auto s1 = summarize_dose(chain, targets[1], cfg.utility, cfg.design.U0);
      targets = {s1.mean_utility > s0.mean_utility ? targets[1] : targets[0]};
    }
  }

  // Carry the decision out on a scratch copy so every event is validated.
  TrialState work = state;
  const std::size_t first_new = work.log.size();
  DecisionIssued issued{completed_cohort_id, d, targets, {}};
  {
    // Dose summaries cover the grid after this decision; the BODC figures
    // refer to the grid the decision was made on.
    TrialState projected = state;
    for (const DosePair& x : d.exclusions) projected.grid.exclude_from(x);
    const DoseGrid decided_on = projected.grid;
    if (d.kind == DecisionKind::Insert) projected.grid = projected.grid.expanded(d.doses.front());
    issued.fit = summarize_fit(out.fit, projected, bodc ? &*bodc : nullptr, &decided_on);
  }
  append_event(work, 0.0, issued);

  if (d.kind == DecisionKind::Insert) {
    append_event(work, 0.0, DoseInserted{d.doses.front()});
    std::vector<int> collapsing;
    for (const Cohort& c : work.open_cohorts) {
      if (c.enrolling) collapsing.push_back(c.id);
    }
    for (int id : collapsing) append_event(work, 0.0, CohortCollapsed{id});
  }

  if (d.kind == DecisionKind::TerminateTrial) {
    append_event(work, 0.0, TrialClosed{std::nullopt, true, d.rationale.back()});
  } else {
    for (const DosePair& x : targets) {
      if (work.enrolling_cohort_at(x)) continue;
      const int room = cfg.design.N - work.committed();
      if (room <= 0) break;
      append_event(work, 0.0, CohortOpened{work.next_cohort_id, x, std::min(cohort_size, room)});
    }
    if (work.open_cohorts.empty()) {
      append_event(work, 0.0, TrialClosed{select_final(work, out.fit), false,
                                          "no open cohorts and no further assignment"});
    }
  }

  for (std::size_t i = first_new; i < work.log.size(); ++i) {
    out.events.push_back(work.log[i].payload);
  }
  return out;
}

}  // namespace aaa
