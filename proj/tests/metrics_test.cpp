#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dysflux/metrics.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace {

using namespace dysflux;
using T = DysfluencyType;
using L = AnnotationLevel;

DysfluencyEvent ev(T kind, std::size_t anchor, std::optional<TimeBound> bound = std::nullopt) {
  return DysfluencyEvent{kind, L::Word, anchor, {}, bound};
}

UtteranceEval utt(std::vector<DysfluencyEvent> truth, std::vector<DysfluencyEvent> pred, std::size_t len = 10) {
  UtteranceEval e;
  e.true_events = std::move(truth);
  e.predicted_events = std::move(pred);
  e.reference_length = len;
  e.true_tokens = {1, 2, 3};
  e.predicted_tokens = {1, 2, 3};
  return e;
}

TEST(Ter, Examples) {
  EXPECT_EQ(ter({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_DOUBLE_EQ(ter({1, 2, 3}, {1, 9, 3}), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(ter({1, 2, 3, 4}, {1, 2, 3, 4, 5}), 0.25);
  EXPECT_DOUBLE_EQ(ter({1, 2}, {}), 1.0);
  EXPECT_DYSFLUX_ERROR(ter({}, {1}), ErrorCode::EmptyReference);
}

TEST(TerProperty, MatchesRecursiveEditDistance) {
  std::mt19937_64 rng(41);
  for (int k = 0; k < 1000; ++k) {
    auto ref = oracle::random_sequence(rng, 19, 10);
    ref.push_back(static_cast<int>(rng() % 10));
    const auto hyp = oracle::random_sequence(rng, 20, 10);
    const std::vector<TokenId> r(ref.begin(), ref.end());
    const std::vector<TokenId> h(hyp.begin(), hyp.end());
    const double expected = static_cast<double>(oracle::edit_distance_recursive(ref, hyp)) / ref.size();
    ASSERT_EQ(ter(r, h), expected);
    ASSERT_EQ(ter(r, h) == 0.0, r == h);
  }
}

TEST(Eacc, Examples) {
  EXPECT_EQ(eacc({utt({}, {}), utt({}, {})}), 1.0);
  EXPECT_EQ(eacc({utt({ev(T::Pause, 1)}, {ev(T::Pause, 1)}), utt({}, {}), utt({}, {}),
                  utt({ev(T::Pause, 1)}, {})}),
            0.75);
  EXPECT_EQ(eacc({utt({ev(T::Pause, 1)}, {}), utt({ev(T::Deletion, 2)}, {})}), 0.0);
  EXPECT_DYSFLUX_ERROR(eacc({}), ErrorCode::EmptyEvalSet);
}

TEST(Cacc, Examples) {
  EXPECT_EQ(cacc({utt({ev(T::Pause, 1), ev(T::Repetition, 4)}, {ev(T::Pause, 1), ev(T::Repetition, 4)})}), 1.0);
  std::vector<UtteranceEval> ten;
  for (int k = 0; k < 10; ++k) {
    ten.push_back(utt({ev(T::Repetition, 2)}, {ev(k < 3 ? T::Deletion : T::Repetition, 2)}));
  }
  EXPECT_DOUBLE_EQ(cacc(ten), 0.7);
  EXPECT_EQ(cacc({utt({ev(T::Repetition, 2)}, {})}), 0.0);
  EXPECT_DYSFLUX_ERROR(cacc({utt({}, {ev(T::Pause, 1)})}), ErrorCode::NoDysfluentInstances);
  EXPECT_EQ(cacc(ten, T::Repetition), cacc(ten));
}

TEST(TokenDistance, Examples) {
  EXPECT_EQ(token_distance({utt({ev(T::Pause, 3)}, {ev(T::Pause, 3)}, 100)}), 0.0);
  EXPECT_DOUBLE_EQ(token_distance({utt({ev(T::Pause, 5)}, {ev(T::Pause, 4)}, 100)}), 0.01);
  EXPECT_DOUBLE_EQ(
      token_distance({utt({ev(T::Pause, 5), ev(T::Deletion, 20)}, {ev(T::Pause, 5), ev(T::Deletion, 22)}, 50)}),
      0.02);
  EXPECT_DYSFLUX_ERROR(token_distance({utt({ev(T::Pause, 5)}, {})}), ErrorCode::NoMatchedPairs);
}

TEST(TokenDistanceProperty, AddingExactPairsNeverRaisesTheMean) {
  std::mt19937_64 rng(42);
  for (int k = 0; k < 200; ++k) {
    std::vector<UtteranceEval> evals;
    for (int u = 0; u < 5; ++u) {
      const auto a = rng() % 30;
      const auto b = rng() % 30;
      evals.push_back(utt({ev(T::Repetition, a)}, {ev(T::Repetition, b)}, 30));
    }
    const double before = token_distance(evals);
    evals.push_back(utt({ev(T::Pause, 7)}, {ev(T::Pause, 7)}, 30));
    EXPECT_LE(token_distance(evals), before);
  }
}

TEST(MatchEvents, NearestAnchorWithTiesToTheEarlierTruth) {
  const auto m = match_events({ev(T::Pause, 2), ev(T::Pause, 6)}, {ev(T::Pause, 4)});
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].truth, 0u);
  const auto m2 = match_events({ev(T::Pause, 2), ev(T::Pause, 6)}, {ev(T::Pause, 7), ev(T::Pause, 1)});
  ASSERT_EQ(m2.size(), 2u);
  EXPECT_EQ(m2[0].predicted, 1u);
  EXPECT_EQ(m2[1].predicted, 0u);
}

TEST(MetricsProperty, AccuraciesIgnoreUtteranceOrder) {
  std::mt19937_64 rng(43);
  const std::array<T, 4> kinds = {T::Repetition, T::Deletion, T::Insertion, T::Pause};
  std::vector<UtteranceEval> evals;
  for (int u = 0; u < 40; ++u) {
    std::vector<DysfluencyEvent> truth;
    std::vector<DysfluencyEvent> pred;
    if (rng() % 3) truth.push_back(ev(kinds[rng() % 4], rng() % 10));
    if (rng() % 3) pred.push_back(ev(kinds[rng() % 4], rng() % 10));
    evals.push_back(utt(truth, pred));
  }
  const double e = eacc(evals);
  const double c = cacc(evals);
  for (int k = 0; k < 20; ++k) {
    std::shuffle(evals.begin(), evals.end(), rng);
    EXPECT_EQ(eacc(evals), e);
    EXPECT_EQ(cacc(evals), c);
  }
}

TEST(BoundLoss, Examples) {
  const std::vector<TimeBound> truth = {{0.10, 0.30}, {0.50, 0.70}};
  EXPECT_EQ(bound_loss(truth, truth), 0.0);
  const std::vector<TimeBound> shifted = {{0.12, 0.32}, {0.52, 0.72}};
  EXPECT_EQ(bound_loss(shifted, truth), 20.0);
  // Two boundary points off by one and two frames.
  const std::vector<TimeBound> one = {{0.10, 0.30}};
  const std::vector<TimeBound> off = {{0.12, 0.34}};
  EXPECT_NEAR(bound_loss(off, one), std::sqrt(2.5) * 20.0, 1e-9);
  EXPECT_NEAR(bound_loss(off, one), 31.6, 0.05);
  EXPECT_DYSFLUX_ERROR(bound_loss(one, truth), ErrorCode::LengthMismatch);
  EXPECT_DYSFLUX_ERROR(bound_loss({}, {}), ErrorCode::LengthMismatch);
}

TEST(BoundLoss, FrameQuantization) {
  EXPECT_EQ(to_frame(0.0), 0);
  EXPECT_EQ(to_frame(0.09), 5);
  EXPECT_EQ(to_frame(0.089), 4);
  EXPECT_EQ(to_frame(1.0), 50);
}

TEST(BoundLossProperty, SymmetricAndZeroOnlyWhenFramesCoincide) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> start(0.0, 5.0);
  for (int k = 0; k < 500; ++k) {
    std::vector<TimeBound> a;
    std::vector<TimeBound> b;
    bool same = true;
    for (int i = 0; i < 4; ++i) {
      const double s = start(rng);
      const double ds = (rng() % 3 == 0) ? 0.0 : 0.001 * static_cast<double>(rng() % 60);
      a.push_back({s, s + 0.2});
      b.push_back({s + ds, s + 0.2 + ds});
      same = same && to_frame(s) == to_frame(s + ds) && to_frame(s + 0.2) == to_frame(s + 0.2 + ds);
    }
    EXPECT_EQ(bound_loss(a, b), bound_loss(b, a));
    EXPECT_EQ(bound_loss(a, b) == 0.0, same);
  }
}

TEST(Report, RowsFollowTypeOrderWithAnAggregate) {
  std::vector<UtteranceEval> all = {utt({ev(T::Pause, 1)}, {ev(T::Pause, 1)}),
                                    utt({ev(T::Repetition, 2)}, {ev(T::Repetition, 2)}),
                                    utt({ev(T::Insertion, 1)}, {ev(T::Insertion, 1)}),
                                    utt({ev(T::Deletion, 0)}, {ev(T::Deletion, 0)}), utt({}, {})};
  const auto report = build_report(L::Word, group_by_type(all), &all);
  ASSERT_EQ(report.rows.size(), 5u);
  EXPECT_EQ(report.rows[0].type, T::Repetition);
  EXPECT_EQ(report.rows[1].type, T::Deletion);
  EXPECT_EQ(report.rows[2].type, T::Insertion);
  EXPECT_EQ(report.rows[3].type, T::Pause);
  EXPECT_FALSE(report.rows[4].type.has_value());
  EXPECT_EQ(report.rows[4].utterances, 5u);
  for (const auto& row : report.rows) {
    EXPECT_EQ(row.ter_pct, 0.0);
    EXPECT_EQ(row.eacc_pct, 100.0);
    EXPECT_EQ(row.cacc_pct, 100.0);
    EXPECT_EQ(row.td_e3, 0.0);
  }
  EXPECT_FALSE(report.has_bound_loss);
  std::ostringstream table;
  write_report_table(table, report);
  EXPECT_EQ(table.str().find("BL(ms)"), std::string::npos);
  EXPECT_NE(table.str().find("TD(e-3)"), std::string::npos);
  EXPECT_LT(table.str().find("Repetition"), table.str().find("Deletion"));
  EXPECT_LT(table.str().find("Insertion"), table.str().find("Pause"));
}

TEST(Report, BoundLossColumnWhenBoundsExist) {
  std::vector<UtteranceEval> all = {
      utt({ev(T::Pause, 1, TimeBound{0.5, 1.0})}, {ev(T::Pause, 1, TimeBound{0.52, 1.02})})};
  const auto report = build_report(L::Word, group_by_type(all), &all);
  EXPECT_TRUE(report.has_bound_loss);
  EXPECT_EQ(report.rows[0].bl_ms, 20.0);
  std::ostringstream table;
  write_report_table(table, report);
  EXPECT_NE(table.str().find("BL(ms)"), std::string::npos);
  std::ostringstream jsonl;
  write_report_jsonl(jsonl, report);
  EXPECT_NE(jsonl.str().find("\"bl_ms\""), std::string::npos);
}

TEST(Report, EmptyGroupsAreRejected) {
  EXPECT_DYSFLUX_ERROR(build_report(L::Word, {}), ErrorCode::EmptyGroup);
  GroupedEvals groups;
  groups[T::Pause] = {};
  EXPECT_DYSFLUX_ERROR(build_report(L::Word, groups), ErrorCode::EmptyGroup);
}

}  // namespace
