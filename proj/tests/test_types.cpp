#include "doctest.h"

#include "fixtures.hpp"
#include "harvest/io.hpp"
#include "harvest/rng.hpp"
#include "harvest/types.hpp"

using namespace harvest;
using harvest::testing::make_layout;

namespace {

bool has(const std::vector<Violation>& v, ViolationCode code) {
  for (const auto& x : v) {
    if (x.code == code) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("fresh state has no violations") {
  const auto ws = WorkspaceConfig::defaults();
  const auto s = initial_state(make_layout({{0.3, 0.6, 1.1}, {1.4, 0.6, 0.2}}), ws);
  CHECK(validate_state(s, {&ws, 12}).empty());
}

TEST_CASE("validate_state reports each broken invariant") {
  const auto ws = WorkspaceConfig::defaults();
  auto s = initial_state(make_layout({{0.3, 0.6, 1.1}, {1.4, 0.6, 0.2}}), ws);

  SUBCASE("double pick") {
    s.attempts[0] = {1, 1, 0, 0};
    s.picked[0] = {1, 1, 0, 0};
    const auto v = validate_state(s);
    REQUIRE(v.size() == 1);
    CHECK(v[0].code == ViolationCode::DoublePick);
    CHECK(v[0].fruit == 0);
  }
  SUBCASE("attempt overflow") {
    s.attempts[1] = {0, 0, 4, 0};
    const auto v = validate_state(s);
    REQUIRE(v.size() == 1);
    CHECK(v[0].code == ViolationCode::AttemptOverflow);
  }
  SUBCASE("picked without attempt") {
    s.picked[1] = {0, 0, 1, 0};
    CHECK(has(validate_state(s), ViolationCode::PickWithoutAttempt));
  }
  SUBCASE("double allocation") {
    s.allocation[0] = {1, 0, 1, 0};
    CHECK(has(validate_state(s), ViolationCode::DoubleAllocation));
  }
  SUBCASE("step overflow only with k_max") {
    s.step_index = 13;
    CHECK(validate_state(s).empty());
    CHECK(has(validate_state(s, {nullptr, 12}), ViolationCode::StepOverflow));
  }
  SUBCASE("both arms of a group in AEG") {
    s.arms[0].phase = Phase::AEG;
    s.arms[1].phase = Phase::AEG;
    CHECK(has(validate_state(s), ViolationCode::JointConflict));
  }
  SUBCASE("arm outside its box") {
    s.arms[2].position = {0.1, 0.1, 1.2};
    CHECK(validate_state(s).empty());
    CHECK(has(validate_state(s, {&ws, std::nullopt}), ViolationCode::ArmOutOfReach));
  }
  SUBCASE("negative busy_until") {
    s.arms[3].busy_until = -1.0;
    CHECK(has(validate_state(s), ViolationCode::NegativeBusy));
  }
  SUBCASE("shape mismatch") {
    s.picked.pop_back();
    CHECK(has(validate_state(s), ViolationCode::ShapeMismatch));
  }
}

TEST_CASE("GroupAction rejects invalid bit combinations at construction") {
  CHECK_THROWS_AS(GroupAction::make(std::nullopt, 0, 0), HarvestError);
  CHECK_THROWS_AS(GroupAction::make(std::size_t{3}, 1, 1), HarvestError);
  CHECK_THROWS_AS(GroupAction::make(std::size_t{3}, 2, 0), HarvestError);
  try {
    (void)GroupAction::make(std::nullopt, 0, 0);
  } catch (const HarvestError& e) {
    CHECK(e.code() == ErrorCode::IllegalAction);
  }

  const auto a = GroupAction::make(std::size_t{9}, 0, 1);
  CHECK(a.target_label() == 10);
  CHECK(a.bits() == BitPair::EnterLeft);
  CHECK(a.entering_slot() == 0);
  const auto p = GroupAction::make(std::nullopt, 1, 1);
  CHECK(p.is_pause());
  CHECK(p == GroupAction::pause());
  CHECK_FALSE(p.entering_slot().has_value());
}

TEST_CASE("transition semantics follow the table") {
  CHECK(semantic_of(Transition::T1) == Semantic::Pause);
  CHECK(semantic_of(Transition::T6) == Semantic::Pause);
  CHECK(semantic_of(Transition::T7) == Semantic::Pause);
  CHECK(semantic_of(Transition::T2) == Semantic::Alternation);
  CHECK(semantic_of(Transition::T4) == Semantic::Alternation);
  CHECK(semantic_of(Transition::T3) == Semantic::NonAlternation);
  CHECK(semantic_of(Transition::T5) == Semantic::NonAlternation);
  CHECK(semantic_of(Transition::T8) == Semantic::Restart);
  CHECK(semantic_of(Transition::T9) == Semantic::Restart);
}

TEST_CASE("layout invariants") {
  CHECK(layout_problems(*make_layout({{0, 0, 0}})).empty());
  CHECK_FALSE(layout_problems(FruitLayout{}).empty());
  CHECK_FALSE(layout_problems(*make_layout({{0, 0, 0}}, {4})).empty());
  CHECK_FALSE(layout_problems(*make_layout({{0, 0, 0}}, {0})).empty());
  CHECK_FALSE(layout_problems(*make_layout({{0, 0, 0}, {0, 0, 0.0005}})).empty());
  CHECK(layout_problems(*make_layout({{0, 0, 0}, {0, 0, 0.001}})).empty());
  CHECK_FALSE(layout_problems(*make_layout({{0, std::nan(""), 0}})).empty());
  CHECK_THROWS_AS(validate_layout(FruitLayout{}), HarvestError);
}

TEST_CASE("state serialization round-trips bit-exactly along random rollouts") {
  const auto ws = WorkspaceConfig::defaults();
  const EnvConfig env;
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    auto layout = harvest::testing::random_layout(100 + trial, 2 + static_cast<int>(rng.below(7)), ws,
                                                  {1, 1});
    auto s = initial_state(layout, ws);
    for (int k = 0; k < 200; ++k) {
      const auto encoded = state_to_json(s);
      const auto decoded = state_from_json(Json::parse(encoded.dump()));
      REQUIRE(decoded == s);
      const auto legal = legal_actions(s, env, ws);
      JointAction a;
      a.up = legal[Group::Up][rng.below(legal[Group::Up].size())];
      std::vector<GroupAction> down;
      for (const auto& d : legal[Group::Down]) {
        if (!(d.target() && d.target() == a.up.target())) down.push_back(d);
      }
      a.down = down[rng.below(down.size())];
      auto r = step(s, a, env, ws);
      s = r.next_state;
      if (r.done) break;
    }
  }
}

TEST_CASE("layout file keeps 6 decimals and round-trips generated layouts") {
  const auto ws = WorkspaceConfig::defaults();
  const auto layout = harvest::testing::random_layout(7, 30, ws, {7, 2});
  const auto j = layout_to_json(*layout);
  CHECK(layout_from_json(Json::parse(j.dump())) == *layout);

  auto rough = *make_layout({{0.1234567891, 0.5, 0.5}});
  const auto back = layout_from_json(layout_to_json(rough));
  CHECK(back.positions[0][0] == 0.123457);
}
