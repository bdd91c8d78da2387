#include "harvest/planners.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <limits>

namespace harvest {

std::vector<GroupAction> without_target(const std::vector<GroupAction>& actions,
                                        std::optional<std::size_t> taken) {
  if (!taken) return actions;
  std::vector<GroupAction> out;
  out.reserve(actions.size());
  for (const auto& a : actions) {
    if (a.target() != taken) out.push_back(a);
  }
  return out;
}

JointAction random_joint_action(const LegalActions& legal, Rng& rng) {
  JointAction out;
  const auto& up = legal[Group::Up];
  out.up = up[rng.below(up.size())];
  const auto down = without_target(legal[Group::Down], out.up.target());
  out.down = down[rng.below(down.size())];
  return out;
}

double action_duration(const SystemState& s, Group g, const GroupAction& a,
                       const WorkspaceConfig& ws) {
  const auto slot = a.entering_slot();
  if (!slot || !a.target()) return 0.0;
  const int m = group_arms(g)[*slot];
  ArmState arm = s.arms[m];
  double t = 0.0;
  if (arm.phase == Phase::AEG) {
    t += rp_duration(arm.arm_id, arm.position, ws);
    arm.position = ws.drop_points[m];
  }
  return t + aeg_duration(arm, s.layout->positions[*a.target()], ws);
}

namespace {

GroupAction shortest(const SystemState& s, Group g, const std::vector<GroupAction>& actions,
                     const WorkspaceConfig& ws) {
  std::optional<GroupAction> best;
  double best_t = std::numeric_limits<double>::infinity();
  for (const auto& a : actions) {
    if (a.is_pause()) continue;
    const double t = action_duration(s, g, a, ws);
    // Lists are in fruit order, so strict < keeps the lowest index on ties.
    if (t < best_t) {
      best_t = t;
      best = a;
    }
  }
  return best.value_or(GroupAction::pause());
}

}  // namespace

JointAction greedy_joint_action(const SystemState& s, const LegalActions& legal,
                                const WorkspaceConfig& ws) {
  JointAction out;
  out.up = shortest(s, Group::Up, legal[Group::Up], ws);
  out.down = shortest(s, Group::Down, without_target(legal[Group::Down], out.up.target()), ws);
  return out;
}

StaticPlan static_list_plan(const FruitLayout& layout, const WorkspaceConfig& ws) {
  StaticPlan plan;
  std::array<std::vector<std::size_t>, kArmCount> assigned;
  std::vector<std::size_t> shared;
  for (std::size_t n = 0; n < layout.size(); ++n) {
    const unsigned mask = reach_mask(layout.positions[n], ws);
    if (mask == 0) continue;
    if (std::popcount(mask) == 1) {
      assigned[static_cast<std::size_t>(std::countr_zero(mask))].push_back(n);
    } else {
      shared.push_back(n);
    }
  }
  for (std::size_t n : shared) {
    const unsigned mask = reach_mask(layout.positions[n], ws);
    int best = -1;
    for (int m = 0; m < kArmCount; ++m) {
      if (!(mask & (1u << m))) continue;
      if (best < 0 || assigned[m].size() < assigned[best].size()) best = m;
    }
    assigned[best].push_back(n);
  }
  for (int m = 0; m < kArmCount; ++m) {
    auto pool = assigned[m];
    std::sort(pool.begin(), pool.end());
    Vec3 here = ws.drop_points[m];
    while (!pool.empty()) {
      std::size_t pick = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const double t = travel_time(here, layout.positions[pool[i]], ws);
        if (t < best) {
          best = t;
          pick = i;
        }
      }
      here = layout.positions[pool[pick]];
      plan.per_arm[m].push_back(pool[pick]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
  }
  return plan;
}

void RandomPlanner::reset(const SystemState&, std::uint64_t seed) { rng_ = Rng(seed); }

JointAction RandomPlanner::decide(const SystemState&, const LegalActions& legal) {
  return random_joint_action(legal, rng_);
}

JointAction GreedyPlanner::decide(const SystemState& state, const LegalActions& legal) {
  return greedy_joint_action(state, legal, ws_);
}

void StaticListPlanner::reset(const SystemState& initial, std::uint64_t) {
  plan_ = static_list_plan(*initial.layout, ws_);
  cursor_.fill(0);
}

std::optional<GroupAction> StaticListPlanner::next_for(const SystemState& s, Group g,
                                                       const std::vector<GroupAction>& legal) const {
  const auto slots = group_arms(g);
  auto left_items = [&](int slot) {
    const int m = slots[slot];
    return plan_.per_arm[m].size() - cursor_[m];
  };
  // Alternate: the arm not holding joint-1 goes first.
  std::array<int, 2> order{0, 1};
  const auto ph = s.phases(g);
  if (ph[0] == Phase::AEG) {
    order = {1, 0};
  } else if (ph[1] != Phase::AEG && left_items(1) > left_items(0)) {
    order = {1, 0};
  }
  for (int slot : order) {
    if (left_items(slot) == 0) continue;
    const int m = slots[slot];
    const std::size_t fruit = plan_.per_arm[m][cursor_[m]];
    const auto candidate =
        GroupAction::make(fruit, slot == 0 ? BitPair::EnterLeft : BitPair::EnterRight);
    if (std::find(legal.begin(), legal.end(), candidate) != legal.end()) return candidate;
  }
  return std::nullopt;
}

JointAction StaticListPlanner::decide(const SystemState& state, const LegalActions& legal) {
  JointAction out;
  for (Group g : kGroups) {
    const auto options = g == Group::Up ? legal[g] : without_target(legal[g], out.up.target());
    if (auto a = next_for(state, g, options)) {
      const int m = group_arms(g)[*a->entering_slot()];
      ++cursor_[m];
      out[g] = *a;
    }
  }
  return out;
}

bool StaticListPlanner::finished(const SystemState& state) const {
  for (int m = 0; m < kArmCount; ++m) {
    if (cursor_[m] < plan_.per_arm[m].size()) return false;
    if (state.arms[m].phase != Phase::RP) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

EpisodeResult run_episode(std::shared_ptr<const FruitLayout> layout, Planner& planner,
                          const EnvConfig& env, const WorkspaceConfig& ws, std::uint64_t seed,
                          bool keep_trajectory) {
  using Clock = std::chrono::steady_clock;
  EpisodeResult out;
  SystemState state = initial_state(std::move(layout), ws);
  planner.reset(state, seed);
  std::array<double, kArmCount> busy{};
  int conflicts = 0;

  while (!planner.finished(state)) {
    const LegalActions legal = legal_actions(state, env, ws);
    const auto t0 = Clock::now();
    const JointAction action = planner.decide(state, legal);
    out.latencies.push_back(std::chrono::duration<double>(Clock::now() - t0).count());

    StepResult r = step(state, action, env, ws);
    for (int m = 0; m < kArmCount; ++m) busy[m] += r.arm_busy[m];
    conflicts += r.conflict ? 1 : 0;
    if (keep_trajectory) {
      out.trajectory.push_back({r.next_state.step_index, action, r.transition_kinds, r.time_deltas,
                                r.rewards, r.next_state.agent_clock, r.next_state.picked_count()});
    }
    state = std::move(r.next_state);
    if (r.done) {
      out.reason = r.done_reason;
      break;
    }
  }

  auto& m = out.metrics;
  m.makespan = state.makespan();
  for (int i = 0; i < kArmCount; ++i) m.idle_per_arm[i] = std::max(0.0, m.makespan - busy[i]);
  m.conflicts = conflicts;
  m.picked_total = state.picked_count();
  m.abandoned = state.abandoned_count(env.max_attempts);
  m.remaining = state.remaining_count(env.max_attempts);
  m.steps = state.step_index;
  if (!out.latencies.empty()) {
    double sum = 0.0;
    for (double l : out.latencies) sum += l;
    m.planning_latency_mean = sum / static_cast<double>(out.latencies.size());
  }
  out.final_state = std::move(state);
  return out;
}

}  // namespace harvest
