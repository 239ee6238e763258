#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace aaa {

// A dose combination in standardized coordinates (agent A, agent B).
struct DosePair {
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const DosePair&, const DosePair&) = default;
  friend auto operator<=>(const DosePair&, const DosePair&) = default;
};

// Zero-based level indices into a DoseGrid.
struct LevelIndex {
  std::size_t j = 0;
  std::size_t k = 0;

  friend bool operator==(const LevelIndex&, const LevelIndex&) = default;
};

struct ToxicityParams {
  double alpha0 = 0.0;
  double alpha1 = 1.0;
  double alpha2 = 1.0;

  void validate() const;
  friend bool operator==(const ToxicityParams&, const ToxicityParams&) = default;
};

// Efficacy model family: M1 linear, M2 quadratic in A, M3 quadratic in B,
// M4 quadratic in both.
enum class ModelId : int { M1 = 1, M2 = 2, M3 = 3, M4 = 4 };

inline constexpr std::array<ModelId, 4> kAllModels = {ModelId::M1, ModelId::M2, ModelId::M3,
                                                      ModelId::M4};

constexpr bool has_quadratic_a(ModelId m) { return m == ModelId::M2 || m == ModelId::M4; }
constexpr bool has_quadratic_b(ModelId m) { return m == ModelId::M3 || m == ModelId::M4; }
constexpr std::size_t model_index(ModelId m) { return static_cast<std::size_t>(m) - 1; }
std::string_view model_name(ModelId m);
ModelId parse_model(std::string_view name);

struct EfficacyParams {
  ModelId model = ModelId::M1;
  double beta0 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;
  double beta4 = 0.0;

  // Throws ValidationError if a quadratic term is nonzero outside its model.
  void validate() const;
  friend bool operator==(const EfficacyParams&, const EfficacyParams&) = default;
};

// Utility parameters (eta0..eta3) and the toxicity ceiling pT.
struct UtilityParams {
  double eta0 = 0.0;
  double eta1 = 0.0;
  double eta2 = 1.0;
  double eta3 = 0.0;
  double pT = 0.3;

  void validate() const;
  friend bool operator==(const UtilityParams&, const UtilityParams&) = default;
};

// Two elicited toxicity/efficacy pairs, (0, q1star) and (pT, q2star), that
// share the utility Ustar.
struct CalibrationSpec {
  double pT = 0.3;
  double q1star = 0.45;
  double q2star = 0.85;
  double Ustar = 0.3;

  void validate() const;
  friend bool operator==(const CalibrationSpec&, const CalibrationSpec&) = default;
};

// x_std = (raw - center) * scale, with scale = 0.5 / popSD.
struct AffineMap {
  double center = 0.0;
  double scale = 1.0;

  double to_std(double raw) const { return (raw - center) * scale; }
  double to_raw(double std_value) const { return std_value / scale + center; }

  friend bool operator==(const AffineMap&, const AffineMap&) = default;
};

class DoseGrid {
 public:
  DoseGrid() = default;

  // Validates and standardizes the prespecified raw levels. Requires J >= K
  // (agent A is the one with more levels).
  static DoseGrid standardize(std::span<const double> rawA, std::span<const double> rawB);

  std::size_t size_a() const { return levels_a_.size(); }
  std::size_t size_b() const { return levels_b_.size(); }
  std::span<const double> levels_a() const { return levels_a_; }
  std::span<const double> levels_b() const { return levels_b_; }

  DosePair point(std::size_t j, std::size_t k) const { return {levels_a_[j], levels_b_[k]}; }
  DosePair point(LevelIndex idx) const { return point(idx.j, idx.k); }
  std::optional<LevelIndex> index_of(DosePair x) const;
  bool contains(DosePair x) const { return index_of(x).has_value(); }

  // All grid points, agent-A level major.
  std::vector<DosePair> points() const;
  std::vector<DosePair> non_excluded_points() const;

  // Both coordinates are prespecified levels (no inserted level involved).
  bool is_prespecified(DosePair x) const;

  std::span<const double> raw_a() const { return raw_a_; }
  std::span<const double> raw_b() const { return raw_b_; }
  const AffineMap& map_a() const { return map_a_; }
  const AffineMap& map_b() const { return map_b_; }
  DosePair to_raw(DosePair x) const { return {map_a_.to_raw(x.a), map_b_.to_raw(x.b)}; }
  DosePair from_raw(DosePair raw) const { return {map_a_.to_std(raw.a), map_b_.to_std(raw.b)}; }

  // A dose is excluded when it dominates (>= in both agents) some
  // dose that was called toxic. Corners are kept minimal and sorted.
  bool is_excluded(DosePair x) const;
  std::span<const DosePair> exclusion_corners() const { return corners_; }
  // Returns false if `toxic` was already excluded.
  bool exclude_from(DosePair toxic);

  std::span<const DosePair> inserted() const { return inserted_; }

  // New grid with the cross-insertion of `dose`; throws ValidationError if
  // `dose` is already a grid point.
  DoseGrid expanded(DosePair dose) const;

  friend bool operator==(const DoseGrid&, const DoseGrid&) = default;

 private:
  AffineMap map_a_;
  AffineMap map_b_;
  std::vector<double> raw_a_;
  std::vector<double> raw_b_;
  std::vector<double> original_a_;
  std::vector<double> original_b_;
  std::vector<double> levels_a_;
  std::vector<double> levels_b_;
  std::vector<DosePair> inserted_;
  std::vector<DosePair> corners_;
};

DoseGrid standardize_grid(std::span<const double> rawA, std::span<const double> rawB);
DoseGrid expand_grid(const DoseGrid& grid, DosePair dose);

inline double logistic(double eta) {
  // exp() of a large positive argument overflows to inf, which still gives 0.
  return 1.0 / (1.0 + std::exp(-eta));
}

double toxicity_prob(const ToxicityParams& tox, DosePair x);
double efficacy_prob(const EfficacyParams& eff, DosePair x);

// Linear predictors without validation, for hot loops.
inline double toxicity_logit(const ToxicityParams& t, DosePair x) {
  return t.alpha0 + t.alpha1 * x.a + t.alpha2 * x.b;
}
inline double efficacy_logit(const EfficacyParams& e, DosePair x) {
  return e.beta0 + e.beta1 * x.a + e.beta2 * x.b + e.beta3 * x.a * x.a + e.beta4 * x.b * x.b;
}

double utility_safety(double p, const UtilityParams& u);
double utility_efficacy(double q, const UtilityParams& u);
double overall_utility(DosePair x, const ToxicityParams& tox, const EfficacyParams& eff,
                       const UtilityParams& u);

// Solves the four calibration equations for (eta0..eta3).
UtilityParams calibrate_eta(const CalibrationSpec& spec);

// Residuals of the four calibration equations at `u`.
std::array<double, 4> calibration_residuals(const UtilityParams& u, const CalibrationSpec& spec);

}  // namespace aaa
