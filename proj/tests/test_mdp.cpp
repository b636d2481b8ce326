#include "fixtures.hpp"
#include "idnc/mdp.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace idnc;

namespace {

std::vector<double> probabilities(const TransitionDistribution& d) {
  std::vector<double> out;
  for (const auto& o : d) out.push_back(o.probability);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

double action_value(const ValuePolicyTable& table, const ConnectivityMatrix& y,
                    const StatusMatrix& f, const ImportanceMatrix& delta, const IndependentSet& a,
                    int stage) {
  const auto g = build_graph(y, f);
  double q = expected_reward(g, a, delta);
  for (const auto& o : transition(g, a)) q += o.probability * table.value(o.next, stage + 1);
  return q;
}

// Two devices on a 0.5 link, each wanting the packet the other holds.
struct Swap {
  ConnectivityMatrix y = ConnectivityMatrix::from_rows({{1, 0.5}, {0.5, 1}});
  StatusMatrix f = StatusMatrix::from_rows({{1, 0}, {0, 1}});
  ImportanceMatrix delta = fixtures::ones(2, 2);
};

} // namespace

TEST(Actions, GoldenAndAbsorbing) {
  EXPECT_EQ(actions(fixtures::golden_status(), fixtures::line4()).size(), 3u);
  const auto done = StatusMatrix::from_rows({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
  const auto a = actions(done, fixtures::line4());
  ASSERT_EQ(a.size(), 1u);
  EXPECT_TRUE(a.front().empty());
}

TEST(Actions, MatchBruteForceOnRandomThreeDeviceStates) {
  rng::Generator gen(41);
  for (int trial = 0; trial < 100; ++trial) {
    const auto y = fixtures::random_scm(3, gen.uniform(0.3, 1.0), gen);
    const auto f = fixtures::random_gsm(3, 1 + gen.below(3), 0.5, gen);
    const auto vs = oracle::vertices(y, f);
    EXPECT_EQ(fixtures::members(actions(f, y)),
              oracle::maximal_independent_sets(oracle::adjacency(y, f, vs)));
  }
}

TEST(Actions, GuardMessage) {
  // One holder broadcasting to many devices: 45 vertices.
  ConnectivityMatrix y(10);
  for (DeviceId k = 1; k < 10; ++k) y.set_link(0, k, 0.8);
  std::vector<std::vector<int>> rows(10, std::vector<int>(5, 1));
  rows[0] = {0, 0, 0, 0, 0};
  const auto f = StatusMatrix::from_rows(rows);
  try {
    actions(f, y);
    FAIL();
  } catch (const GuardExceeded& e) {
    EXPECT_NE(std::string(e.what()).find("too large"), std::string::npos);
  }
}

TEST(Transition, Examples) {
  const auto y = ConnectivityMatrix::from_rows({{1, 0.75, 0}, {0.75, 1, 0.8}, {0, 0.8, 1}});
  const auto f = StatusMatrix::from_rows({{0}, {1}, {0}});
  const auto g = build_graph(y, f);
  const auto none = transition(g, {});
  ASSERT_EQ(none.size(), 1u);
  EXPECT_DOUBLE_EQ(none.front().probability, 1.0);
  EXPECT_EQ(none.front().next, f);

  const auto one = transition(g, IndependentSet({0}));
  EXPECT_EQ(probabilities(one), (std::vector<double>{0.75, 0.25}));

  // R2 serves R1 (0.8) and R3 (0.9) with the same packet.
  const auto y2 = ConnectivityMatrix::from_rows({{1, 0.8, 0}, {0.8, 1, 0.9}, {0, 0.9, 1}});
  const auto f2 = StatusMatrix::from_rows({{1}, {0}, {1}});
  const auto g2 = build_graph(y2, f2);
  ASSERT_EQ(g2.size(), 2u);
  const auto two = transition(g2, IndependentSet({0, 1}));
  const auto p = probabilities(two);
  ASSERT_EQ(p.size(), 4u);
  const std::vector<double> want{0.72, 0.18, 0.08, 0.02};
  double sum = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(p[i], want[i], 1e-15);
    sum += p[i];
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  for (const auto& o : two) {
    EXPECT_TRUE(o.next.descends_from(f2));
    EXPECT_EQ(o.next.rows()[1], std::vector<int>{0});
  }
}

TEST(Transition, PerfectLinkDropsZeroOutcomes) {
  const auto y = ConnectivityMatrix::from_rows({{1, 1}, {1, 1}});
  const auto f = StatusMatrix::from_rows({{0}, {1}});
  const auto d = transition(f, IndependentSet({0}), y);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_TRUE(d.front().next.complete());
}

TEST(Transition, MassIsOneOnRandomActions) {
  rng::Generator gen(42);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + gen.below(4);
    const auto y = fixtures::random_scm(m, gen.uniform(0.3, 1.0), gen);
    const auto f = fixtures::random_gsm(m, 1 + gen.below(4), 0.5, gen);
    const auto g = build_graph(y, f);
    if (g.size() > 30) continue;
    for (const auto& a : enumerate_maximal_independent_sets(g)) {
      double sum = 0.0;
      for (const auto& o : transition(g, a)) {
        EXPECT_GT(o.probability, 0.0);
        EXPECT_TRUE(o.next.descends_from(f));
        sum += o.probability;
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(ExpectedReward, Examples) {
  const auto y = fixtures::line4();
  const auto f = fixtures::golden_status();
  const auto g = build_graph(y, f);
  EXPECT_DOUBLE_EQ(expected_reward(g, {}, fixtures::ones(4, 3)), 0.0);
  EXPECT_NEAR(expected_reward(g, IndependentSet({1, 3}), fixtures::ones(4, 3)), 1.75, 1e-15);

  const auto y2 = ConnectivityMatrix::from_rows({{1, 0.8}, {0.8, 1}});
  const auto f2 = StatusMatrix::from_rows({{0}, {1}});
  EXPECT_NEAR(expected_reward(build_graph(y2, f2), IndependentSet({0}), ImportanceMatrix::replicate(2, {0.5})),
              0.4, 1e-15);
}

TEST(BackwardInduction, ZeroHorizon) {
  Swap x;
  const auto table = backward_induction(x.f, 0, x.y, x.delta);
  EXPECT_DOUBLE_EQ(table.value(x.f, 1), 0.0);
}

TEST(BackwardInduction, MutualExchangeOneSlot) {
  Swap x;
  const auto table = backward_induction(x.f, 1, x.y, x.delta);
  EXPECT_NEAR(table.value(x.f, 1), 0.5, 1e-15);
  EXPECT_EQ(table.find(x.f, 1)->action.size(), 1u);
}

TEST(BackwardInduction, ThreeDeviceLineMatchesPolicyTree) {
  const auto y = ConnectivityMatrix::from_rows({{1, 0.8, 0}, {0.8, 1, 0.6}, {0, 0.6, 1}});
  const auto f = StatusMatrix::from_rows({{1, 0}, {0, 1}, {1, 1}});
  const auto delta = ImportanceMatrix::replicate(3, {2.0, 1.0});
  const auto table = backward_induction(f, 2, y, delta);
  EXPECT_NEAR(table.value(f, 1), oracle::policy_tree_value(y, f, delta.rows(), 2), 1e-12);
}

TEST(BackwardInduction, RandomSmallInstancesMatchPolicyTree) {
  rng::Generator gen(43);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 2 + gen.below(2);
    const std::size_t n = 1 + gen.below(3);
    const auto y = fixtures::random_scm(m, gen.uniform(0.4, 1.0), gen, {0.3, 0.6, 0.85, 1.0});
    const auto f = fixtures::random_gsm(m, n, 0.6, gen);
    std::vector<std::vector<double>> rows(m, std::vector<double>(n));
    for (auto& r : rows)
      for (auto& d : r) d = gen.uniform(0.0, 4.0);
    const auto delta = ImportanceMatrix::from_rows(rows);
    const int theta = static_cast<int>(gen.below(4));
    const auto table = backward_induction(f, theta, y, delta);
    EXPECT_NEAR(table.value(f, 1), oracle::policy_tree_value(y, f, rows, theta), 1e-9);
  }
}

TEST(BackwardInduction, BellmanConsistencyAndMonotonicity) {
  rng::Generator gen(44);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 3 + gen.below(2);
    const auto y = fixtures::random_scm(m, 0.7, gen);
    const auto f = fixtures::random_gsm(m, 3, 0.5, gen);
    const auto delta = ImportanceMatrix::replicate(m, {3.0, 2.0, 1.0});
    const int theta = 2 + static_cast<int>(gen.below(3));
    const auto table = backward_induction(f, theta, y, delta);
    table.for_each([&](const StatusMatrix& s, int stage, const ValuePolicyTable::Entry& e) {
      EXPECT_GE(e.value, 0.0);
      if (stage == theta + 1) {
        EXPECT_EQ(e.value, 0.0);
        return;
      }
      EXPECT_TRUE(s.descends_from(f));
      EXPECT_NEAR(action_value(table, y, s, delta, e.action, stage), e.value, 1e-9);
      for (const auto& a : actions(s, y))
        EXPECT_LE(action_value(table, y, s, delta, a, stage), e.value + 1e-9);
      if (const auto* later = table.find(s, stage + 1)) {
        EXPECT_GE(e.value + 1e-12, later->value);
      }
    });
  }
}

TEST(BackwardInduction, Guards) {
  StatusMatrix big(10, 20);
  for (PacketId l = 0; l < 20; ++l) big.mark_received(0, l);
  try {
    backward_induction(big, 3, ConnectivityMatrix(10), fixtures::ones(10, 20));
    FAIL();
  } catch (const GuardExceeded& e) {
    EXPECT_NE(std::string(e.what()).find("200"), std::string::npos) << e.what();
  }
  const auto y = fixtures::line4();
  const auto f = fixtures::golden_status();
  EXPECT_THROW(backward_induction(f, 3, y, fixtures::ones(4, 3), {40, 5}), GuardExceeded);
  EXPECT_THROW(backward_induction(f, 3, y, fixtures::ones(4, 2)), ConfigError);
}

TEST(MdpScheduler, ReplaysTable) {
  Swap x;
  auto table = backward_induction(x.f, 2, x.y, x.delta);
  const auto expected = table.find(x.f, 1)->action;
  MdpScheduler sched(std::move(table));
  const SlotState s{x.y, x.f, x.delta, SessionClock(2, 1)};
  EXPECT_EQ(sched.select(s, build_graph(x.y, x.f)), expected);

  const auto done = StatusMatrix::from_rows({{0, 0}, {0, 0}});
  const SlotState absorbed{x.y, done, x.delta, SessionClock(2, 2)};
  EXPECT_TRUE(sched.select(absorbed, build_graph(x.y, done)).empty());

  const SlotState wrong_theta{x.y, x.f, x.delta, SessionClock(3, 1)};
  EXPECT_THROW(sched.select(wrong_theta, build_graph(x.y, x.f)), InvariantViolation);

  const auto other = StatusMatrix::from_rows({{1, 1}, {0, 0}});
  const SlotState off_table{x.y, other, x.delta, SessionClock(2, 1)};
  EXPECT_THROW(sched.select(off_table, build_graph(x.y, other)), InvariantViolation);
}

TEST(OnlineMdpScheduler, ChoosesValueOptimalActions) {
  rng::Generator gen(45);
  OnlineMdpScheduler online;
  for (int trial = 0; trial < 20; ++trial) {
    const auto y = fixtures::random_scm(3, 0.8, gen);
    const auto f = fixtures::random_gsm(3, 3, 0.5, gen);
    const auto delta = ImportanceMatrix::replicate(3, {3.0, 2.0, 1.0});
    const int theta = 1 + static_cast<int>(gen.below(4));
    const auto table = backward_induction(f, theta, y, delta);
    const auto g = build_graph(y, f);
    const auto a = online.select(SlotState{y, f, delta, SessionClock(theta, 1)}, g);
    if (g.empty()) {
      EXPECT_TRUE(a.empty());
      continue;
    }
    EXPECT_NEAR(action_value(table, y, f, delta, a, 1), table.value(f, 1), 1e-9);
  }
}
