#include "aaa/dose_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "aaa/errors.hpp"

namespace aaa {

namespace {

std::string fmt_index(const char* name, std::size_t i) {
  return std::string(name) + "[" + std::to_string(i) + "]";
}

void validate_levels(std::span<const double> raw, const char* name) {
  if (raw.size() < 2) {
    throw ValidationError(name, std::string(name) + " needs at least two dose levels");
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i]) || raw[i] <= 0.0) {
      throw ValidationError(fmt_index(name, i), "raw doses must be positive and finite");
    }
    if (i > 0 && raw[i] <= raw[i - 1]) {
      throw ValidationError(fmt_index(name, i), "raw doses must be strictly increasing");
    }
  }
}

AffineMap standardizing_map(std::span<const double> raw) {
  const double n = static_cast<double>(raw.size());
  const double mean = std::accumulate(raw.begin(), raw.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : raw) ss += (d - mean) * (d - mean);
  const double pop_sd = std::sqrt(ss / n);
  return {mean, 0.5 / pop_sd};
}

bool contains_value(std::span<const double> values, double v) {
  return std::binary_search(values.begin(), values.end(), v);
}

void insert_sorted(std::vector<double>& values, double v) {
  auto it = std::lower_bound(values.begin(), values.end(), v);
  if (it == values.end() || *it != v) values.insert(it, v);
}

bool dominates(DosePair x, DosePair corner) { return x.a >= corner.a && x.b >= corner.b; }

}  // namespace

std::string_view model_name(ModelId m) {
  switch (m) {
    case ModelId::M1: return "M1";
    case ModelId::M2: return "M2";
    case ModelId::M3: return "M3";
    case ModelId::M4: return "M4";
  }
  return "?";
}

ModelId parse_model(std::string_view name) {
  for (ModelId m : kAllModels) {
    if (model_name(m) == name) return m;
  }
  throw ValidationError("model", "unknown model id '" + std::string(name) + "'");
}

void ToxicityParams::validate() const {
  if (!(alpha1 > 0.0)) throw ValidationError("alpha1", "alpha1 must be positive");
  if (!(alpha2 > 0.0)) throw ValidationError("alpha2", "alpha2 must be positive");
}

void EfficacyParams::validate() const {
  if (!has_quadratic_a(model) && beta3 != 0.0) {
    throw ValidationError("beta3", "beta3 must be zero under " + std::string(model_name(model)));
  }
  if (!has_quadratic_b(model) && beta4 != 0.0) {
    throw ValidationError("beta4", "beta4 must be zero under " + std::string(model_name(model)));
  }
}

void UtilityParams::validate() const {
  if (!(pT > 0.0 && pT < 1.0)) throw ValidationError("pT", "pT must lie in (0,1)");
  if (!(eta2 > 0.0)) throw ValidationError("eta2", "eta2 must be positive");
}

void CalibrationSpec::validate() const {
  if (!(pT > 0.0 && pT < 1.0)) throw ValidationError("pT", "pT must lie in (0,1)");
  if (!(q1star > 0.0 && q1star < 1.0)) throw ValidationError("q1", "q1 must lie in (0,1)");
  if (!(q2star > 0.0 && q2star < 1.0)) throw ValidationError("q2", "q2 must lie in (0,1)");
  if (!(q1star < q2star)) throw ValidationError("q2", "q2 must exceed q1");
  if (!(Ustar > 0.0 && Ustar < 1.0)) throw ValidationError("U", "U must lie in (0,1)");
}

// ---------------------------------------------------------------------------
// DoseGrid

DoseGrid DoseGrid::standardize(std::span<const double> rawA, std::span<const double> rawB) {
  validate_levels(rawA, "rawA");
  validate_levels(rawB, "rawB");
  if (rawA.size() < rawB.size()) {
    throw ValidationError("rawA", "agent A must have at least as many levels as agent B");
  }
  DoseGrid g;
  g.raw_a_.assign(rawA.begin(), rawA.end());
  g.raw_b_.assign(rawB.begin(), rawB.end());
  g.map_a_ = standardizing_map(rawA);
  g.map_b_ = standardizing_map(rawB);
  for (double d : rawA) g.original_a_.push_back(g.map_a_.to_std(d));
  for (double d : rawB) g.original_b_.push_back(g.map_b_.to_std(d));
  g.levels_a_ = g.original_a_;
  g.levels_b_ = g.original_b_;
  return g;
}

std::optional<LevelIndex> DoseGrid::index_of(DosePair x) const {
  auto ia = std::lower_bound(levels_a_.begin(), levels_a_.end(), x.a);
  auto ib = std::lower_bound(levels_b_.begin(), levels_b_.end(), x.b);
  if (ia == levels_a_.end() || *ia != x.a || ib == levels_b_.end() || *ib != x.b) {
    return std::nullopt;
  }
  return LevelIndex{static_cast<std::size_t>(ia - levels_a_.begin()),
                    static_cast<std::size_t>(ib - levels_b_.begin())};
}

std::vector<DosePair> DoseGrid::points() const {
  std::vector<DosePair> out;
  out.reserve(levels_a_.size() * levels_b_.size());
  for (double a : levels_a_) {
    for (double b : levels_b_) out.push_back({a, b});
  }
  return out;
}

std::vector<DosePair> DoseGrid::non_excluded_points() const {
  std::vector<DosePair> out;
  for (const DosePair& x : points()) {
    if (!is_excluded(x)) out.push_back(x);
  }
  return out;
}

bool DoseGrid::is_prespecified(DosePair x) const {
  return contains_value(original_a_, x.a) && contains_value(original_b_, x.b);
}

bool DoseGrid::is_excluded(DosePair x) const {
  return std::any_of(corners_.begin(), corners_.end(),
                     [&](const DosePair& c) { return dominates(x, c); });
}

bool DoseGrid::exclude_from(DosePair toxic) {
  if (is_excluded(toxic)) return false;
  std::erase_if(corners_, [&](const DosePair& c) { return dominates(c, toxic); });
  corners_.push_back(toxic);
  std::sort(corners_.begin(), corners_.end());
  return true;
}

DoseGrid DoseGrid::expanded(DosePair dose) const {
  if (!std::isfinite(dose.a) || !std::isfinite(dose.b)) {
    throw ValidationError("dose", "inserted dose must be finite");
  }
  if (contains(dose)) {
    throw ValidationError("dose", "inserted dose is already a grid point");
  }
  DoseGrid g = *this;
  insert_sorted(g.levels_a_, dose.a);
  insert_sorted(g.levels_b_, dose.b);
  g.inserted_.push_back(dose);
  return g;
}

DoseGrid standardize_grid(std::span<const double> rawA, std::span<const double> rawB) {
  return DoseGrid::standardize(rawA, rawB);
}

DoseGrid expand_grid(const DoseGrid& grid, DosePair dose) { return grid.expanded(dose); }

// ---------------------------------------------------------------------------
// Link models and utilities

double toxicity_prob(const ToxicityParams& tox, DosePair x) {
  tox.validate();
  return logistic(toxicity_logit(tox, x));
}

double efficacy_prob(const EfficacyParams& eff, DosePair x) {
  eff.validate();
  return logistic(efficacy_logit(eff, x));
}

double utility_safety(double p, const UtilityParams& u) {
  if (p > u.pT) return 0.0;
  return 1.0 - (1.0 - u.eta0) / u.pT * p;
}

double utility_efficacy(double q, const UtilityParams& u) {
  return u.eta1 * std::exp(u.eta2 * q) + u.eta3;
}

double overall_utility(DosePair x, const ToxicityParams& tox, const EfficacyParams& eff,
                       const UtilityParams& u) {
  const double ut = utility_safety(toxicity_prob(tox, x), u);
  if (ut == 0.0) return 0.0;
  return ut * utility_efficacy(efficacy_prob(eff, x), u);
}

// ---------------------------------------------------------------------------
// Calibration
//
// With eta1 = 1/(e^eta2 - 1) and eta3 = -eta1 the two scale constraints hold
// identically, and the first trade-off equation reduces to
//   (e^{eta2 q1} - 1) / (e^{eta2} - 1) = U*,
// whose left side falls monotonically in eta2 from 1 (eta2 -> -inf) through
// q1 (eta2 -> 0) to 0 (eta2 -> +inf). U* below q1* gives a convex efficacy
// utility (eta2 > 0), above q1* a concave one (eta2 < 0). The second
// trade-off equation then fixes eta0.

std::array<double, 4> calibration_residuals(const UtilityParams& u, const CalibrationSpec& spec) {
  const double ue1 = utility_efficacy(spec.q1star, u);
  const double ue2 = utility_efficacy(spec.q2star, u);
  return {
      utility_safety(0.0, u) * ue1 - spec.Ustar,
      u.eta0 * ue2 - spec.Ustar,
      u.eta1 + u.eta3,
      u.eta1 * std::exp(u.eta2) + u.eta3 - 1.0,
  };
}

UtilityParams calibrate_eta(const CalibrationSpec& spec) {
  spec.validate();
  auto ratio_gap = [&](double eta2) {
    return std::expm1(eta2 * spec.q1star) / std::expm1(eta2) - spec.Ustar;
  };

  constexpr double kNearZero = 1e-6;
  constexpr double kFar = 50.0;
  const bool convex = spec.Ustar < spec.q1star;
  double lo = convex ? kNearZero : -kFar;
  double hi = convex ? kFar : -kNearZero;
  const double g_lo = ratio_gap(lo);
  const double g_hi = ratio_gap(hi);
  if (!(g_lo > 0.0 && g_hi < 0.0)) {
    throw CalibrationError("no eta2 root in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                               "]: the elicited trade-off is too extreme or exactly linear",
                           {g_lo, g_hi});
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(std::abs(lo), std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ratio_gap(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  UtilityParams u;
  u.pT = spec.pT;
  u.eta2 = 0.5 * (lo + hi);
  u.eta1 = 1.0 / std::expm1(u.eta2);
  u.eta3 = -u.eta1;
  u.eta0 = spec.Ustar / utility_efficacy(spec.q2star, u);

  const auto res = calibration_residuals(u, spec);
  if (std::any_of(res.begin(), res.end(), [](double r) { return !(std::abs(r) < 1e-8); })) {
    throw CalibrationError("calibration residuals exceed 1e-8",
                           std::vector<double>(res.begin(), res.end()));
  }
  if (!(u.eta0 > 0.0 && u.eta0 < 1.0)) {
    throw CalibrationError("eta0 outside (0,1)", std::vector<double>(res.begin(), res.end()));
  }
  return u;
}

}  // namespace aaa
