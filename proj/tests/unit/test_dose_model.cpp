#include <gtest/gtest.h>

#include <chrono>
#include <numeric>
#include <random>

#include "aaa/dose_model.hpp"
#include "aaa/errors.hpp"
#include "support.hpp"

using namespace aaa;

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pop_sd(std::span<const double> v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

TEST(Standardize, HandArithmetic) {
  const std::vector<double> a = {1, 2, 3, 4};
  const DoseGrid g = DoseGrid::standardize(a, a);
  const double expect[] = {-0.6708, -0.2236, 0.2236, 0.6708};
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(g.levels_a()[j], expect[j], 1e-4);
}

TEST(Standardize, TwoLevelsGivePlusMinusHalf) {
  for (double c : {0.7, 3.0, 50.0}) {
    for (double s : {0.1, 0.5, 2.0}) {
      if (c - s <= 0) continue;
      const std::vector<double> a = {c - s, c + s};
      const DoseGrid g = DoseGrid::standardize(a, a);
      EXPECT_NEAR(g.levels_a()[0], -0.5, 1e-12);
      EXPECT_NEAR(g.levels_a()[1], 0.5, 1e-12);
    }
  }
}

TEST(Standardize, RejectsBadLevels) {
  const std::vector<double> ok = {1, 2, 3};
  EXPECT_THROW(DoseGrid::standardize(std::vector<double>{2, 2, 3}, ok), ValidationError);
  EXPECT_THROW(DoseGrid::standardize(std::vector<double>{3, 2, 1}, ok), ValidationError);
  EXPECT_THROW(DoseGrid::standardize(std::vector<double>{-1, 2, 3}, ok), ValidationError);
  EXPECT_THROW(DoseGrid::standardize(std::vector<double>{1}, std::vector<double>{1}), ValidationError);
  // agent A must carry at least as many levels as agent B
  EXPECT_THROW(DoseGrid::standardize(std::vector<double>{1, 2}, ok), ValidationError);
}

TEST(Standardize, MeanZeroPopSdHalf) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> step(0.05, 2.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> a{step(rng)};
    std::vector<double> b{step(rng)};
    for (int i = 0; i < 4; ++i) a.push_back(a.back() + step(rng));
    for (int i = 0; i < 3; ++i) b.push_back(b.back() + step(rng));
    const DoseGrid g = DoseGrid::standardize(a, b);
    EXPECT_LT(std::abs(mean_of(g.levels_a())), 1e-12);
    EXPECT_LT(std::abs(pop_sd(g.levels_a()) - 0.5), 1e-12);
    EXPECT_LT(std::abs(mean_of(g.levels_b())), 1e-12);
    EXPECT_LT(std::abs(pop_sd(g.levels_b()) - 0.5), 1e-12);
  }
}

TEST(Standardize, RawRoundTrip) {
  const DoseGrid g = DoseGrid::standardize(fixtures::kRawA, fixtures::kRawB);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(g.to_raw(g.point(j, j)).a, fixtures::kRawA[j], 1e-12);
    EXPECT_NEAR(g.to_raw(g.point(j, j)).b, fixtures::kRawB[j], 1e-12);
  }
}

TEST(Links, ToxicityExamples) {
  const ToxicityParams t{0, 1, 1};
  EXPECT_DOUBLE_EQ(toxicity_prob(t, {0, 0}), 0.5);
  EXPECT_NEAR(toxicity_prob(t, {0.5, 0.5}), 0.7311, 1e-4);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> pos(0.01, 5.0);
  std::normal_distribution<double> any(0.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const ToxicityParams r{any(rng), pos(rng), pos(rng)};
    EXPECT_LT(toxicity_prob(r, {0.2, 0.2}), toxicity_prob(r, {0.3, 0.2}));
    EXPECT_LT(toxicity_prob(r, {0.2, 0.2}), toxicity_prob(r, {0.2, 0.3}));
  }
  EXPECT_THROW(toxicity_prob(ToxicityParams{0, -1, 1}, {0, 0}), ValidationError);
}

TEST(Links, EfficacyExamples) {
  EXPECT_DOUBLE_EQ(efficacy_prob({ModelId::M1, 0, 1, 1, 0, 0}, {0, 0}), 0.5);
  EXPECT_NEAR(efficacy_prob({ModelId::M4, 0, 0, 0, -4, -4}, {0.5, 0.5}), 0.1192, 1e-4);
  const EfficacyParams e{ModelId::M4, 0.3, 0.8, -0.2, -2.0, -1.0};
  const double va = -e.beta1 / (2 * e.beta3);
  EXPECT_GT(efficacy_prob(e, {va, 0}), efficacy_prob(e, {va + 1e-3, 0}));
  EXPECT_GT(efficacy_prob(e, {va, 0}), efficacy_prob(e, {va - 1e-3, 0}));
}

TEST(Links, EfficacyModelConstraints) {
  EXPECT_THROW(efficacy_prob({ModelId::M1, 0, 0, 0, -1, 0}, {0, 0}), ValidationError);
  EXPECT_THROW(efficacy_prob({ModelId::M2, 0, 0, 0, -1, -1}, {0, 0}), ValidationError);
  EXPECT_THROW(efficacy_prob({ModelId::M3, 0, 0, 0, -1, -1}, {0, 0}), ValidationError);
  EXPECT_NO_THROW(efficacy_prob({ModelId::M2, 0, 0, 0, -1, 0}, {0, 0}));
  EXPECT_NO_THROW(efficacy_prob({ModelId::M3, 0, 0, 0, 0, -1}, {0, 0}));
}

TEST(Utility, SafetyAndEfficacyEndpoints) {
  const UtilityParams u = fixtures::default_utility();
  EXPECT_DOUBLE_EQ(utility_safety(0.0, u), 1.0);
  EXPECT_NEAR(utility_safety(u.pT, u), u.eta0, 1e-15);
  EXPECT_EQ(utility_safety(u.pT + 1e-9, u), 0.0);
  EXPECT_NEAR(utility_efficacy(0.0, u), 0.0, 1e-12);
  EXPECT_NEAR(utility_efficacy(1.0, u), 1.0, 1e-12);
}

TEST(Utility, RoundedEtaGivesElicitedUtility) {
  const UtilityParams u{0.396, 0.385, 1.280, -0.385, 0.3};
  EXPECT_NEAR(utility_efficacy(0.45, u), 0.300, 1e-3);
  EXPECT_NEAR(u.eta0 * utility_efficacy(0.85, u), 0.300, 1e-3);
  EXPECT_NEAR(utility_efficacy(0.85, u), 0.7577, 1e-3);
}

TEST(Utility, Monotonicity) {
  const UtilityParams u = fixtures::default_utility();
  double prev_s = 2.0;
  double prev_e = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double v = i / 1000.0;
    const double s = utility_safety(v, u);
    const double e = utility_efficacy(v, u);
    EXPECT_LE(s, prev_s);
    EXPECT_GT(e, prev_e);
    prev_s = s;
    prev_e = e;
  }
}

TEST(Utility, ZeroAboveCeilingAndAtZeroEfficacy) {
  const UtilityParams u = fixtures::default_utility();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> any(0.0, 2.0);
  std::uniform_real_distribution<double> pos(0.05, 4.0);
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  int above = 0;
  for (int i = 0; i < 2000; ++i) {
    const ToxicityParams t{any(rng), pos(rng), pos(rng)};
    const EfficacyParams e{ModelId::M4, any(rng), any(rng), any(rng), -pos(rng), -pos(rng)};
    const DosePair x{coord(rng), coord(rng)};
    if (toxicity_prob(t, x) > u.pT) {
      ++above;
      EXPECT_EQ(overall_utility(x, t, e, u), 0.0);
    }
  }
  EXPECT_GT(above, 100);
  EXPECT_NEAR(utility_efficacy(0.0, u) * utility_safety(0.1, u), 0.0, 1e-12);
}

TEST(Calibration, DefaultSpecValues) {
  const auto t0 = std::chrono::steady_clock::now();
  const UtilityParams u = calibrate_eta({0.3, 0.45, 0.85, 0.3});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_NEAR(u.eta0, 0.396, 1e-3);
  EXPECT_NEAR(u.eta1, 0.385, 1e-3);
  EXPECT_NEAR(u.eta2, 1.280, 1e-3);
  EXPECT_NEAR(u.eta3, -0.385, 1e-3);
  EXPECT_NEAR(u.eta1 + u.eta3, 0.0, 1e-12);
  EXPECT_LT(secs, 1.0);
}

TEST(Calibration, ResidualsAndRoundTrip) {
  for (const CalibrationSpec spec : {CalibrationSpec{0.3, 0.45, 0.85, 0.3},
                                     CalibrationSpec{0.3, 0.2, 0.6, 0.3},
                                     CalibrationSpec{0.25, 0.3, 0.9, 0.2},
                                     CalibrationSpec{0.4, 0.5, 0.95, 0.4}}) {
    const UtilityParams u = calibrate_eta(spec);
    for (double r : calibration_residuals(u, spec)) EXPECT_LT(std::abs(r), 1e-8);
    // overall utility at the elicited pairs, through the link functions
    const ToxicityParams t0{-1e3, 1, 1};
    const ToxicityParams tT = fixtures::toxicity_at_most(spec.pT);
    const EfficacyParams e1{ModelId::M1, std::log(spec.q1star / (1 - spec.q1star)), 0, 0, 0, 0};
    const EfficacyParams e2{ModelId::M1, std::log(spec.q2star / (1 - spec.q2star)), 0, 0, 0, 0};
    EXPECT_NEAR(overall_utility({0, 0}, t0, e1, u), spec.Ustar, 1e-6);
    EXPECT_NEAR(overall_utility({0, 0}, tT, e2, u), spec.Ustar, 1e-6);
  }
}

TEST(Calibration, RejectsInvalidSpecs) {
  EXPECT_THROW(calibrate_eta({1.5, 0.45, 0.85, 0.3}), ValidationError);
  EXPECT_THROW(calibrate_eta({0.3, 0.85, 0.45, 0.3}), ValidationError);
  EXPECT_THROW(calibrate_eta({0.3, 0.45, 0.85, 0.0}), ValidationError);
}

TEST(Calibration, ConcaveWhenUtilityExceedsQ1) {
  EXPECT_LT(calibrate_eta({0.3, 0.2, 0.6, 0.3}).eta2, 0.0);
  EXPECT_GT(calibrate_eta({0.3, 0.45, 0.85, 0.3}).eta2, 0.0);
}

TEST(Calibration, UnreachableTradeOffIsCalibrationError) {
  // needs eta2 far below -50
  EXPECT_THROW(calibrate_eta({0.3, 0.01, 0.99, 0.99}), CalibrationError);
  // linear efficacy utility, eta2 = 0, has no finite eta1
  EXPECT_THROW(calibrate_eta({0.3, 0.45, 0.85, 0.45}), CalibrationError);
}

TEST(ExpandGrid, InteriorInsertion) {
  const DoseGrid g = DoseGrid::standardize(fixtures::kRawA, fixtures::kRawB);
  const DosePair x{0.01, -0.02};
  const DoseGrid e = expand_grid(g, x);
  EXPECT_EQ(e.size_a(), 5u);
  EXPECT_EQ(e.size_b(), 5u);
  for (const DosePair& p : g.points()) EXPECT_TRUE(e.contains(p));
  EXPECT_TRUE(e.contains(x));
  EXPECT_FALSE(e.is_prespecified(x));
  EXPECT_TRUE(e.is_prespecified(g.point(1, 1)));
  EXPECT_EQ(e.map_a(), g.map_a());
}

TEST(ExpandGrid, BelowLowestBecomesFirstLevel) {
  const DoseGrid g = DoseGrid::standardize(fixtures::kRawA, fixtures::kRawB);
  const DosePair x{g.levels_a()[0] - 0.1, g.levels_b()[0] - 0.1};
  const DoseGrid e = expand_grid(g, x);
  EXPECT_EQ(*e.index_of(x), (LevelIndex{0, 0}));
}

TEST(ExpandGrid, SharedColumnAddsOnlyARow) {
  const DoseGrid g = DoseGrid::standardize(fixtures::kRawA, fixtures::kRawB);
  const DosePair x{g.levels_a()[2], 0.05};
  const DoseGrid e = expand_grid(g, x);
  EXPECT_EQ(e.points().size() - g.points().size(), 4u);
  EXPECT_EQ(e.size_a(), 4u);
  EXPECT_EQ(e.size_b(), 5u);
  const DosePair y{0.05, -0.1};
  const DoseGrid f = expand_grid(g, y);
  EXPECT_EQ(f.points().size() - g.points().size(), 9u);
  EXPECT_THROW(expand_grid(g, g.point(1, 2)), ValidationError);
}

TEST(ExpandGrid, ExclusionStaysUpwardClosed) {
  DoseGrid g = DoseGrid::standardize(fixtures::kRawA, fixtures::kRawB);
  g.exclude_from(g.point(2, 2));
  const DoseGrid e = expand_grid(g, {0.5, 0.5});
  EXPECT_TRUE(e.is_excluded({0.5, 0.5}));
  EXPECT_FALSE(e.is_excluded({0.0, 0.0}));
  for (const DosePair& p : e.points()) {
    if (!e.is_excluded(p)) continue;
    for (const DosePair& q : e.points()) {
      if (q.a >= p.a && q.b >= p.b) EXPECT_TRUE(e.is_excluded(q));
    }
  }
}
