#include <gtest/gtest.h>

#include "aaa/errors.hpp"
#include "aaa/trial_state.hpp"
#include "support.hpp"

using namespace aaa;

namespace {

TrialState created(const TrialConfig& cfg = fixtures::config_4x4()) {
  TrialState s;
  append_event(s, 0.0, TrialCreated{cfg});
  return s;
}

void complete_cohort(TrialState& s, DosePair x, int y, int z) {
  const int id = s.next_cohort_id;
  append_event(s, 1.0, CohortOpened{id, x, 3});
  for (int i = 0; i < 3; ++i) append_event(s, 2.0, PatientEnrolled{id, s.next_patient_id});
  append_event(s, 30.0, OutcomesRecorded{id, x, y, z, 3});
}

}  // namespace

TEST(TrialConfig, MakeValidatesAndCalibrates) {
  const TrialConfig c = make_trial_config(fixtures::kRawA, fixtures::kRawB, {}, {});
  EXPECT_NEAR(c.utility.eta0, 0.396, 1e-3);
  EXPECT_EQ(c.utility.pT, 0.3);
  DesignConfig bad;
  bad.pT = 1.5;
  EXPECT_THROW(make_trial_config(fixtures::kRawA, fixtures::kRawB, bad, {}), ValidationError);
  DesignConfig odd;
  odd.N = 95;
  EXPECT_THROW(make_trial_config(fixtures::kRawA, fixtures::kRawB, odd, {}), ValidationError);
  DesignConfig xi;
  xi.xi = 0.4;
  EXPECT_THROW(make_trial_config(fixtures::kRawA, fixtures::kRawB, xi, {}), ValidationError);
}

TEST(TrialState, FoldTracksCohortsAndData) {
  TrialState s = created();
  const DosePair x0 = s.grid.point(0, 0);
  append_event(s, 1.0, CohortOpened{1, x0, 3});
  EXPECT_EQ(s.committed(), 3);
  EXPECT_TRUE(s.tried(x0));
  EXPECT_EQ(s.enrolling_cohort_at(x0)->id, 1);
  for (int i = 1; i <= 3; ++i) append_event(s, 2.0, PatientEnrolled{1, i});
  EXPECT_EQ(s.enrolling_cohort_at(x0), nullptr);
  EXPECT_EQ(s.find_cohort(1)->members, (std::vector<int>{1, 2, 3}));
  append_event(s, 30.0, OutcomesRecorded{1, x0, 1, 2, 3});
  EXPECT_TRUE(s.open_cohorts.empty());
  EXPECT_EQ(s.data.n_at(x0), 3);
  EXPECT_EQ(s.committed(), 3);
  EXPECT_EQ(s.log.size(), 6u);
  EXPECT_EQ(s.log.back().seq, 6u);
}

TEST(TrialState, StageTwoCountsAndExclusions) {
  TrialState s = created();
  complete_cohort(s, s.grid.point(0, 0), 0, 1);
  Decision d;
  d.kind = DecisionKind::Treat;
  d.doses = {s.grid.point(1, 1)};
  d.enters_adaptive = true;
  d.exclusions = {s.grid.point(2, 2)};
  append_event(s, 30.0, DecisionIssued{1, d, d.doses, {}});
  EXPECT_EQ(s.stage, Stage::Adaptive);
  EXPECT_EQ(s.n1, 3);
  EXPECT_EQ(s.decision_count, 1u);
  EXPECT_TRUE(s.grid.is_excluded(s.grid.point(3, 2)));
  complete_cohort(s, s.grid.point(1, 1), 0, 2);
  EXPECT_EQ(s.n2(), 3);
  EXPECT_EQ(s.n2_max(), 93);
  EXPECT_THROW(append_event(s, 31.0, CohortOpened{s.next_cohort_id, s.grid.point(3, 3), 3}),
               CorruptLogError);
}

TEST(TrialState, CollapseShrinksCapacity) {
  TrialState s = created();
  const DosePair x = s.grid.point(0, 0);
  append_event(s, 1.0, CohortOpened{1, x, 3});
  append_event(s, 2.0, PatientEnrolled{1, 1});
  append_event(s, 3.0, CohortCollapsed{1});
  EXPECT_EQ(s.find_cohort(1)->capacity, 1);
  EXPECT_EQ(s.committed(), 1);
  EXPECT_THROW(append_event(s, 4.0, PatientEnrolled{1, 2}), CorruptLogError);
  EXPECT_THROW(append_event(s, 4.0, OutcomesRecorded{1, x, 0, 0, 3}), CorruptLogError);
  append_event(s, 30.0, OutcomesRecorded{1, x, 0, 1, 1});
  EXPECT_EQ(s.data.total_n(), 1);

  append_event(s, 31.0, CohortOpened{2, x, 3});
  append_event(s, 32.0, CohortCollapsed{2});
  EXPECT_EQ(s.find_cohort(2), nullptr);
}

TEST(TrialState, InsertionExpandsGrid) {
  TrialState s = created();
  const DosePair mid{0.0, 0.0};
  append_event(s, 1.0, DoseInserted{mid});
  EXPECT_EQ(s.grid.size_a(), 5u);
  EXPECT_TRUE(s.grid.contains(mid));
  EXPECT_THROW(append_event(s, 2.0, DoseInserted{mid}), CorruptLogError);
}

TEST(TrialState, RejectsMalformedSequences) {
  TrialState s = created();
  EXPECT_THROW(apply_event(s, TrialEvent{5, 0.0, CohortOpened{1, s.grid.point(0, 0), 3}}),
               CorruptLogError);
  EXPECT_THROW(append_event(s, 0.0, TrialCreated{fixtures::config_4x4()}), CorruptLogError);
  EXPECT_THROW(append_event(s, 0.0, CohortOpened{7, s.grid.point(0, 0), 3}), CorruptLogError);
  EXPECT_THROW(append_event(s, 0.0, CohortOpened{1, {0.123, 0.456}, 3}), CorruptLogError);
  EXPECT_THROW(append_event(s, 0.0, CohortOpened{1, s.grid.point(0, 0), 97}), CorruptLogError);
  EXPECT_THROW(append_event(s, 0.0, OutcomesRecorded{1, s.grid.point(0, 0), 0, 0, 3}),
               CorruptLogError);

  TrialState fresh;
  EXPECT_THROW(append_event(fresh, 0.0, CohortOpened{1, {0, 0}, 3}), CorruptLogError);

  append_event(s, 0.0, TrialClosed{std::nullopt, true, "test"});
  EXPECT_EQ(s.stage, Stage::Done);
  EXPECT_TRUE(s.terminated_early);
  EXPECT_THROW(append_event(s, 0.0, CohortOpened{1, s.grid.point(0, 0), 3}), CorruptLogError);
}

TEST(TrialState, ReplayReproducesState) {
  TrialState s = created();
  complete_cohort(s, s.grid.point(0, 0), 0, 1);
  complete_cohort(s, s.grid.point(1, 1), 1, 2);
  append_event(s, 70.0, DoseInserted{{0.0, 0.1}});
  complete_cohort(s, {0.0, 0.1}, 0, 3);
  const TrialState r = replay_events(s.log);
  EXPECT_EQ(r, s);
  EXPECT_THROW(replay_events({}), CorruptLogError);
  std::vector<TrialEvent> gap = s.log;
  gap.erase(gap.begin() + 3);
  EXPECT_THROW(replay_events(gap), CorruptLogError);
}

TEST(TrialState, NamesRoundTrip) {
  for (DecisionKind k : {DecisionKind::Escalate, DecisionKind::Treat, DecisionKind::Insert,
                         DecisionKind::DivideCohorts, DecisionKind::TerminateCohort,
                         DecisionKind::TerminateTrial}) {
    EXPECT_EQ(parse_decision_kind(decision_kind_name(k)), k);
  }
  EXPECT_EQ(stage_name(Stage::Adaptive), "Adaptive");
  for (ModelId m : kAllModels) EXPECT_EQ(parse_model(model_name(m)), m);
}
