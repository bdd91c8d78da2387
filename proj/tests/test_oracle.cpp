#include "doctest.h"

#include <limits>

#include "fixtures.hpp"
#include "harvest/oracle.hpp"
#include "harvest/planners.hpp"

using namespace harvest;
using harvest::testing::make_layout;

namespace {

// Plain exhaustive search without memoisation.
double brute_force(const SystemState& s, const EnvConfig& env, const WorkspaceConfig& ws) {
  double best = std::numeric_limits<double>::infinity();
  const auto legal = legal_actions(s, env, ws);
  for (const auto& up : legal[Group::Up]) {
    for (const auto& down : without_target(legal[Group::Down], up.target())) {
      auto r = step(s, {up, down}, env, ws);
      if (r.done) {
        if (r.done_reason == DoneReason::AllPicked) best = std::min(best, r.next_state.makespan());
      } else {
        best = std::min(best, brute_force(r.next_state, env, ws));
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("hand-traced optima") {
  const auto ws = WorkspaceConfig::defaults();
  const EnvConfig env;

  SUBCASE("one fruit at a drop point") {
    const auto r = optimal_makespan(*make_layout({ws.drop_points[0]}), ws, env);
    CHECK(r.makespan == doctest::Approx(ws.t_grasp + ws.t_place).epsilon(1e-12));
    CHECK(r.witness.size() == 2);
  }
  SUBCASE("E1 and E4 fruits run in parallel") {
    // Arm 1: 0.6 m along y each way, 1.2 s + 1.5 s + 1.2 s + 1.0 s = 4.9 s.
    // Arm 4: 1.0 m along y each way, 2.0 s + 1.5 s + 2.0 s + 1.0 s = 6.5 s.
    const auto r = optimal_makespan(*make_layout({{0.3, 0.6, 1.1}, {0.3, 1.0, 0.2}}), ws, env);
    CHECK(r.makespan == doctest::Approx(6.5).epsilon(1e-12));
  }
  SUBCASE("empty layout") {
    FruitLayout empty;
    const auto r = optimal_makespan(empty, ws, env);
    CHECK(r.makespan == 0.0);
    CHECK(r.witness.empty());
  }
  SUBCASE("a fruit needing two attempts at the drop point") {
    // grasp 1.5, place 1.0 and grasp 1.5 again, final place 1.0.
    OracleOptions opt;
    opt.with_failures = true;
    const auto r = optimal_makespan(*make_layout({ws.drop_points[0]}, {2}), ws, env, opt);
    CHECK(r.makespan == doctest::Approx(5.0).epsilon(1e-12));
  }
}

TEST_CASE("oracle errors") {
  const auto ws = WorkspaceConfig::defaults();
  const EnvConfig env;
  auto code_of = [&](const FruitLayout& l, OracleOptions opt) {
    try {
      optimal_makespan(l, ws, env, opt);
    } catch (const HarvestError& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code_of(*harvest::testing::random_layout(1, 7, ws), {}) == ErrorCode::InvalidConfig);
  CHECK(code_of(*make_layout({harvest::testing::in_e1()}, {2}), {}) == ErrorCode::InvalidLayout);
  OracleOptions tiny;
  tiny.node_budget = 10;
  CHECK(code_of(*harvest::testing::random_layout(2, 4, ws), tiny) == ErrorCode::SearchBudgetExceeded);
}

TEST_CASE("memoised search agrees with plain enumeration") {
  const auto ws = WorkspaceConfig::defaults();
  EnvConfig env;
  env.k_max = 4;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto layout = harvest::testing::random_layout(seed, 2, ws);
    const double expected = brute_force(initial_state(layout, ws), env, ws);
    REQUIRE(expected < std::numeric_limits<double>::infinity());
    const auto r = optimal_makespan(*layout, ws, env);
    CHECK(r.makespan == expected);
  }
}

TEST_CASE("oracle is a lower bound and its witness replays exactly") {
  const auto ws = WorkspaceConfig::defaults();
  const EnvConfig env;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const int n = 1 + static_cast<int>(seed % 4);
    const auto layout = harvest::testing::random_layout(500 + seed, n, ws);
    const auto r = optimal_makespan(*layout, ws, env);
    CHECK(replay_makespan(layout, r.witness, ws, env) == r.makespan);
    CHECK(r.makespan == doctest::Approx(r.search_makespan).epsilon(1e-9));

    RandomPlanner rp;
    GreedyPlanner gp(ws);
    StaticListPlanner sp(ws);
    for (Planner* p : std::initializer_list<Planner*>{&rp, &gp, &sp}) {
      const auto e = run_episode(layout, *p, env, ws, seed, false);
      INFO(p->name(), " reason ", static_cast<int>(e.reason), " steps ", e.metrics.steps);
      if (e.reason == DoneReason::AllPicked) CHECK(e.metrics.makespan >= r.makespan - 1e-9);
    }
  }
}
