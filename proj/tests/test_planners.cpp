#include "doctest.h"

#include <map>

#include "fixtures.hpp"
#include "harvest/planners.hpp"

using namespace harvest;
using harvest::testing::make_layout;

namespace {

bool contains(const std::vector<GroupAction>& v, const GroupAction& a) {
  return std::find(v.begin(), v.end(), a) != v.end();
}

// Checks every decision against the legal lists before stepping.
EpisodeResult checked_episode(std::shared_ptr<const FruitLayout> layout, Planner& p, const EnvConfig& env,
                              const WorkspaceConfig& ws, std::uint64_t seed) {
  auto s = initial_state(layout, ws);
  p.reset(s, seed);
  while (!p.finished(s)) {
    const auto legal = legal_actions(s, env, ws);
    const auto a = p.decide(s, legal);
    CHECK(contains(legal[Group::Up], a.up));
    CHECK(contains(legal[Group::Down], a.down));
    CHECK(joint_action_legal(s, a, env, ws));
    auto r = step(s, a, env, ws);
    s = r.next_state;
    if (r.done) break;
  }
  p.reset(initial_state(layout, ws), seed);
  return run_episode(layout, p, env, ws, seed);
}

}  // namespace

TEST_CASE("random planner") {
  const auto ws = WorkspaceConfig::defaults();
  const EnvConfig env;

  SUBCASE("single legal action per group is returned") {
    auto s = initial_state(make_layout({harvest::testing::in_e1()}), ws);
    s.attempts[0][0] = 1;
    s.picked[0][0] = 1;
    RandomPlanner p;
    p.reset(s, 5);
    const auto a = p.decide(s, legal_actions(s, env, ws));
    CHECK(a.up.is_pause());
    CHECK(a.down.is_pause());
  }
  SUBCASE("same seed, same choice") {
    auto s = initial_state(harvest::testing::random_layout(3, 12, ws), ws);
    const auto legal = legal_actions(s, env, ws);
    RandomPlanner a, b;
    a.reset(s, 77);
    b.reset(s, 77);
    for (int i = 0; i < 20; ++i) CHECK(a.decide(s, legal) == b.decide(s, legal));
  }
  SUBCASE("uniform over the legal list") {
    // Three E1 fruits: pause plus three claims for group U.
    auto s = initial_state(make_layout({harvest::testing::in_e1(), {0.2, 0.5, 1.0}, {0.1, 0.9, 1.2}}), ws);
    const auto legal = legal_actions(s, env, ws);
    REQUIRE(legal[Group::Up].size() == 4);
    RandomPlanner p;
    p.reset(s, 11);
    std::map<std::size_t, int> counts;
    const int draws = 10'000;
    for (int i = 0; i < draws; ++i) ++counts[p.decide(s, legal).up.target().value_or(99)];
    REQUIRE(counts.size() == 4);
    double chi2 = 0.0;
    const double expect = draws / 4.0;
    for (const auto& [k, c] : counts) chi2 += (c - expect) * (c - expect) / expect;
    // 3 degrees of freedom, p = 0.001.
    CHECK(chi2 < 16.27);
  }
}

TEST_CASE("greedy planner") {
  const auto ws = WorkspaceConfig::defaults();
  const EnvConfig env;
  const Vec3 d = ws.drop_points[0];

  SUBCASE("nearer fruit first") {
    auto s = initial_state(make_layout({{d[0], d[1] + 0.8, d[2]}, {d[0], d[1] + 0.2, d[2]}}), ws);
    const auto a = greedy_joint_action(s, legal_actions(s, env, ws), ws);
    CHECK(a.up.target() == std::optional<std::size_t>{1});
  }
  SUBCASE("ties go to the lower index") {
    std::vector<Vec3> pos;
    for (int i = 0; i < 8; ++i) pos.push_back({0.05 + 0.02 * i, 1.15, 0.55 + 0.01 * i});
    pos[2] = {d[0] - 0.3, d[1] + 0.5, d[2]};
    pos[6] = {d[0] + 0.3, d[1] + 0.5, d[2]};
    auto s = initial_state(make_layout(pos), ws);
    // Fruits 3 and 7 are equidistant and nearest.
    REQUIRE(travel_time(d, pos[2], ws) == travel_time(d, pos[6], ws));
    const auto a = greedy_joint_action(s, legal_actions(s, env, ws), ws);
    CHECK(a.up.target_label() == 3);
  }
  SUBCASE("no legal targets gives the pause action") {
    auto s = initial_state(make_layout({harvest::testing::in_e1()}), ws);
    s.attempts[0][0] = 1;
    s.picked[0][0] = 1;
    const auto a = greedy_joint_action(s, legal_actions(s, env, ws), ws);
    CHECK(a.up == GroupAction::make(std::nullopt, 1, 1));
    CHECK(a.down.is_pause());
  }
}

TEST_CASE("static list planner") {
  const auto ws = WorkspaceConfig::defaults();
  const EnvConfig env;

  SUBCASE("all fruits in E1") {
    const auto layout = make_layout({harvest::testing::in_e1(), {0.2, 0.5, 1.0}, {0.1, 0.9, 1.2}});
    const auto plan = static_list_plan(*layout, ws);
    CHECK(plan.per_arm[0].size() == 3);
    for (int m = 1; m < kArmCount; ++m) CHECK(plan.per_arm[m].empty());
  }
  SUBCASE("common fruits split evenly") {
    // Reachable by arms 1 and 2 only.
    const auto layout =
        make_layout({{0.75, 0.3, 1.0}, {0.8, 0.6, 1.1}, {0.85, 0.9, 1.2}, {0.9, 0.2, 0.9}});
    const auto plan = static_list_plan(*layout, ws);
    CHECK(plan.per_arm[0].size() == 2);
    CHECK(plan.per_arm[1].size() == 2);
    CHECK(plan.per_arm[2].empty());
    CHECK(plan.per_arm[3].empty());
  }
  SUBCASE("fruit needing a second attempt stays on the tree") {
    const auto layout = make_layout({harvest::testing::in_e1(), harvest::testing::in_e3()}, {2, 1});
    StaticListPlanner p(ws);
    const auto r = checked_episode(layout, p, env, ws, 1);
    CHECK(r.metrics.remaining == 1);
    CHECK(r.metrics.picked_total == 1);
    CHECK(r.final_state.attempts_total(0) == 1);
    for (const auto& arm : r.final_state.arms) CHECK(arm.phase == Phase::RP);
  }
  SUBCASE("failure-free layouts are cleared") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto layout = harvest::testing::random_layout(seed, 15, ws);
      StaticListPlanner p(ws);
      const auto r = checked_episode(layout, p, env, ws, seed);
      CHECK(r.metrics.remaining == 0);
    }
  }
}

TEST_CASE("every planner emits legal actions and greedy beats random on average") {
  const auto ws = WorkspaceConfig::defaults();
  const EnvConfig env;
  double greedy_sum = 0.0, random_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto layout = harvest::testing::random_layout(seed, 10, ws, {2, 1});
    RandomPlanner rp;
    GreedyPlanner gp(ws);
    StaticListPlanner sp(ws);
    const auto rr = checked_episode(layout, rp, env, ws, seed);
    const auto gr = checked_episode(layout, gp, env, ws, seed);
    checked_episode(layout, sp, env, ws, seed);
    CHECK(gr.reason == DoneReason::AllPicked);
    random_sum += rr.metrics.makespan;
    greedy_sum += gr.metrics.makespan;
  }
  CHECK(greedy_sum <= random_sum);
}

TEST_CASE("episode metrics are consistent") {
  const auto ws = WorkspaceConfig::defaults();
  const EnvConfig env;
  const auto layout = harvest::testing::random_layout(8, 12, ws, {2, 2});
  GreedyPlanner gp(ws);
  const auto r = run_episode(layout, gp, env, ws, 1);
  CHECK(r.trajectory.size() == static_cast<std::size_t>(r.metrics.steps));
  CHECK(r.latencies.size() == r.trajectory.size());
  CHECK(r.metrics.picked_total + r.metrics.remaining + r.metrics.abandoned == 12);
  for (double idle : r.metrics.idle_per_arm) {
    CHECK(idle >= 0.0);
    CHECK(idle <= r.metrics.makespan);
  }
  CHECK(r.trajectory.back().clocks[0] == r.metrics.makespan);
}
