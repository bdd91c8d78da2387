#include "harvest/env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace harvest {

int EnvConfig::effective_k_max(std::size_t n_fruit) const {
  if (k_max > 0) return k_max;
  return std::max(1, 6 * static_cast<int>(n_fruit));
}

void validate_env_config(const EnvConfig& cfg) {
  auto fail = [](const std::string& msg) { throw HarvestError(ErrorCode::InvalidConfig, msg); };
  if (!(cfg.alpha > 0.0)) fail("alpha must be positive");
  if (cfg.k_max < 0) fail("k_max must be >= 1 (or 0 for the 6N default)");
  if (cfg.max_attempts < 1 || cfg.max_attempts > kAttemptCap) fail("max_attempts must be 1..3");
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) fail("gamma must lie in (0, 1]");
  if (cfg.n_max < 1) fail("n_max must be positive");
  if (!(cfg.t_norm > 0.0)) fail("t_norm must be positive");
}

SystemState initial_state(std::shared_ptr<const FruitLayout> layout, const WorkspaceConfig& ws) {
  if (!layout) throw HarvestError(ErrorCode::InvalidLayout, "null layout");
  SystemState s;
  const std::size_t n = layout->size();
  s.layout = std::move(layout);
  for (int m = 0; m < kArmCount; ++m) {
    s.arms[m] = ArmState{m + 1, ws.drop_points[m], Phase::RP, 0.0, -1};
  }
  s.allocation.assign(n, ArmRow{});
  s.attempts.assign(n, ArmRow{});
  s.picked.assign(n, ArmRow{});
  return s;
}

Transition classify_transition(std::array<Phase, 2> cur, BitPair bits) {
  using enum Phase;
  if (cur[0] == AEG && cur[1] == RP) {
    switch (bits) {
      case BitPair::Pause: return Transition::T1;
      case BitPair::EnterRight: return Transition::T2;
      case BitPair::EnterLeft: return Transition::T3;
    }
  } else if (cur[0] == RP && cur[1] == AEG) {
    switch (bits) {
      case BitPair::EnterLeft: return Transition::T4;
      case BitPair::EnterRight: return Transition::T5;
      case BitPair::Pause: return Transition::T6;
    }
  } else if (cur[0] == RP && cur[1] == RP) {
    switch (bits) {
      case BitPair::Pause: return Transition::T7;
      case BitPair::EnterLeft: return Transition::T8;
      case BitPair::EnterRight: return Transition::T9;
    }
  }
  throw HarvestError(ErrorCode::IllegalAction, "no transition leaves phases (AEG, AEG)");
}

std::array<Phase, 2> phases_after(Transition t) {
  using enum Phase;
  switch (t) {
    case Transition::T1:
    case Transition::T6:
    case Transition::T7: return {RP, RP};
    case Transition::T2:
    case Transition::T5:
    case Transition::T9: return {RP, AEG};
    case Transition::T3:
    case Transition::T4:
    case Transition::T8: break;
  }
  return {AEG, RP};
}

std::array<Phase, 2> phases_before(Transition t) {
  using enum Phase;
  switch (t) {
    case Transition::T1:
    case Transition::T2:
    case Transition::T3: return {AEG, RP};
    case Transition::T4:
    case Transition::T5:
    case Transition::T6: return {RP, AEG};
    case Transition::T7:
    case Transition::T8:
    case Transition::T9: break;
  }
  return {RP, RP};
}

double time_cost(Transition kind, PhaseTimes d, double idle_wait) {
  switch (kind) {
    case Transition::T2:
    case Transition::T4:
    case Transition::T8:
    case Transition::T9: return d.aeg;
    case Transition::T3:
    case Transition::T5: return d.aeg + d.rp;
    case Transition::T1:
    case Transition::T6: return std::max(d.rp, idle_wait);
    case Transition::T7: break;
  }
  return std::max(0.0, idle_wait);
}

double time_reward(double t, double alpha) { return alpha * std::expm1(-t); }

const char* to_string(DoneReason r) {
  switch (r) {
    case DoneReason::NotDone: return "NotDone";
    case DoneReason::AllPicked: return "AllPicked";
    case DoneReason::Timeout: return "Timeout";
  }
  return "Unknown";
}

bool target_legal(const SystemState& s, int arm_index, std::size_t fruit, const EnvConfig& cfg,
                  const WorkspaceConfig& ws) {
  if (fruit >= s.fruit_count()) return false;
  if (s.is_picked(fruit) || s.is_allocated(fruit)) return false;
  if (s.attempts_total(fruit) >= cfg.max_attempts) return false;
  const Vec3& pos = s.layout->positions[fruit];
  if (!ws.arm_boxes[arm_index].contains(pos)) return false;
  const Group mine = arm_index < 2 ? Group::Up : Group::Down;
  for (int m : group_arms(other(mine))) {
    const auto& arm = s.arms[m];
    if (arm.phase == Phase::AEG && !separation_ok(pos, arm.position, ws)) return false;
  }
  return true;
}

LegalActions legal_actions(const SystemState& s, const EnvConfig& cfg, const WorkspaceConfig& ws) {
  LegalActions out;
  for (Group g : kGroups) {
    auto& list = out.per_group[group_index(g)];
    list.push_back(GroupAction::pause());
    const auto slots = group_arms(g);
    for (std::size_t n = 0; n < s.fruit_count(); ++n) {
      if (target_legal(s, slots[0], n, cfg, ws)) list.push_back(GroupAction::make(n, BitPair::EnterLeft));
      if (target_legal(s, slots[1], n, cfg, ws)) list.push_back(GroupAction::make(n, BitPair::EnterRight));
    }
  }
  return out;
}

bool group_action_legal(const SystemState& s, Group g, const GroupAction& a, const EnvConfig& cfg,
                        const WorkspaceConfig& ws) {
  const auto ph = s.phases(g);
  if (ph[0] == Phase::AEG && ph[1] == Phase::AEG) return false;
  const auto slot = a.entering_slot();
  if (!slot) return !a.target();
  if (!a.target()) return false;
  return target_legal(s, group_arms(g)[*slot], *a.target(), cfg, ws);
}

bool joint_action_legal(const SystemState& s, const JointAction& a, const EnvConfig& cfg,
                        const WorkspaceConfig& ws) {
  if (!group_action_legal(s, Group::Up, a.up, cfg, ws)) return false;
  if (!group_action_legal(s, Group::Down, a.down, cfg, ws)) return false;
  return !(a.up.target() && a.down.target() && *a.up.target() == *a.down.target());
}

bool all_work_done(const SystemState& s, const EnvConfig& cfg) {
  for (const auto& arm : s.arms) {
    if (arm.phase != Phase::RP) return false;
  }
  for (std::size_t n = 0; n < s.fruit_count(); ++n) {
    if (!s.is_picked(n) && !s.is_abandoned(n, cfg.max_attempts)) return false;
  }
  return true;
}

namespace {

bool is_common_zone(Zone z) {
  return z == Zone::OU || z == Zone::OD || z == Zone::OL || z == Zone::OR || z == Zone::OC;
}

bool targets_conflict(const Vec3& a, const Vec3& b, const EnvConfig& cfg,
                      const WorkspaceConfig& ws) {
  if (cfg.conflict_rule == ConflictRule::Distance) return !separation_ok(a, b, ws);
  const Zone za = zone_of(a, ws);
  return is_common_zone(za) && za == zone_of(b, ws);
}

struct GroupWork {
  Transition kind = Transition::T7;
  PhaseTimes times;
  double own = 0.0;  // work before any synchronisation
  bool pause = true;
  std::optional<std::size_t> claimed;
  bool explored = false;
};

}  // namespace

StepResult step(const SystemState& state, const JointAction& action, const EnvConfig& cfg,
                const WorkspaceConfig& ws) {
  const std::size_t n_fruit = state.fruit_count();
  const int k_max = cfg.effective_k_max(n_fruit);
  if (const auto v = validate_state(state, {&ws, k_max}); !v.empty()) {
    std::ostringstream os;
    os << "state violates " << to_string(v.front().code);
    if (v.front().fruit >= 0) os << " at fruit " << v.front().fruit + 1;
    throw HarvestError(ErrorCode::InvalidState, os.str());
  }
  if (state.step_index >= k_max || all_work_done(state, cfg)) {
    throw HarvestError(ErrorCode::InvalidState, "episode already finished");
  }
  for (Group g : kGroups) {
    if (!group_action_legal(state, g, action[g], cfg, ws)) {
      throw HarvestError(ErrorCode::IllegalAction,
                         std::string("masked action for group ") + to_string(g));
    }
  }
  if (!joint_action_legal(state, action, cfg, ws)) {
    throw HarvestError(ErrorCode::IllegalAction, "both groups claim the same fruit");
  }

  StepResult res;
  SystemState& next = res.next_state;
  next = state;
  std::array<GroupWork, 2> work;

  // Phase durations and arm motion.
  for (Group g : kGroups) {
    const int gi = group_index(g);
    const auto& act = action[g];
    auto& w = work[gi];
    w.kind = classify_transition(state.phases(g), act.bits());
    w.pause = act.is_pause();
    const auto before = phases_before(w.kind);
    const auto after = phases_after(w.kind);
    const auto slots = group_arms(g);
    const double c0 = state.agent_clock[gi];
    for (int s = 0; s < 2; ++s) {
      const int m = slots[s];
      const ArmState& arm = state.arms[m];
      ArmState& out = next.arms[m];
      const bool enters = act.entering_slot() == s;
      double rp = 0.0;
      if (before[s] == Phase::AEG && (after[s] == Phase::RP || enters)) {
        rp = rp_duration(arm.arm_id, arm.position, ws);
        w.times.rp = rp;
        out.position = ws.drop_points[m];
        out.phase = Phase::RP;
        out.target = -1;
        out.busy_until = c0 + rp;
        res.arm_busy[m] += rp;
      }
      if (enters) {
        const std::size_t n = *act.target();
        const Vec3& pos = state.layout->positions[n];
        const double aeg = aeg_duration(out, pos, ws);  // from the drop point
        w.times.aeg = aeg;
        w.claimed = n;
        w.explored = state.attempts_total(n) == 0 && !state.is_allocated(n);
        out.position = pos;
        out.phase = Phase::AEG;
        out.target = static_cast<int>(n);
        out.busy_until = c0 + rp + aeg;
        res.arm_busy[m] += aeg;
      }
    }
    w.own = w.pause ? w.times.rp : time_cost(w.kind, w.times, 0.0);
  }

  // Clock synchronisation: a pausing group waits for the other agent.
  std::array<double, 2> clock_after{};
  for (int gi = 0; gi < 2; ++gi) {
    if (!work[gi].pause) clock_after[gi] = state.agent_clock[gi] + work[gi].own;
  }
  if (work[0].pause && work[1].pause) {
    const double t = std::max(state.agent_clock[0] + work[0].own, state.agent_clock[1] + work[1].own);
    clock_after = {t, t};
  } else {
    for (int gi = 0; gi < 2; ++gi) {
      if (!work[gi].pause) continue;
      const double wait = std::max(0.0, clock_after[1 - gi] - state.agent_clock[gi]);
      clock_after[gi] = state.agent_clock[gi] + time_cost(work[gi].kind, work[gi].times, wait);
    }
  }
  for (int gi = 0; gi < 2; ++gi) {
    res.transition_kinds[gi] = work[gi].kind;
    res.time_deltas[gi] = clock_after[gi] - state.agent_clock[gi];
    next.agent_clock[gi] = clock_after[gi];
  }

  // Grasp outcomes.
  for (Group g : kGroups) {
    const auto& w = work[group_index(g)];
    if (!w.claimed) continue;
    const std::size_t n = *w.claimed;
    const int m = group_arms(g)[*action[g].entering_slot()];
    next.allocation[n][m] = 1;
    next.attempts[n][m] += 1;
    if (next.attempts_total(n) >= state.layout->required_attempts[n]) {
      next.picked[n][m] = 1;
    } else {
      next.allocation[n][m] = 0;  // failed grasp releases the fruit
    }
  }

  if (work[0].claimed && work[1].claimed) {
    res.conflict = targets_conflict(state.layout->positions[*work[0].claimed],
                                    state.layout->positions[*work[1].claimed], cfg, ws);
  }

  next.step_index = state.step_index + 1;
  for (int gi = 0; gi < 2; ++gi) {
    double r = time_reward(res.time_deltas[gi], cfg.alpha);
    if (work[gi].explored) r += cfg.r_explore;
    if (res.conflict) r += cfg.r_conflict;
    res.rewards[gi] = r;
  }

  if (all_work_done(next, cfg)) {
    res.done = true;
    res.done_reason = DoneReason::AllPicked;
    res.rewards = {cfg.r_complete, cfg.r_complete};
  } else if (next.step_index >= k_max) {
    res.done = true;
    res.done_reason = DoneReason::Timeout;
    res.rewards = {cfg.r_timeout, cfg.r_timeout};
    // The group that is behind idles until the last arm stops.
    const double t = next.makespan();
    for (int gi = 0; gi < 2; ++gi) {
      res.time_deltas[gi] += t - next.agent_clock[gi];
      next.agent_clock[gi] = t;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------

std::size_t observation_size(std::size_t n_max) { return n_max * 7 + kArmCount * 4 + 2; }

namespace {

double normalize(double v, double lo, double hi) { return (v - lo) / (hi - lo); }

}  // namespace

void fill_action_mask(const LegalActions& legal, const HeadLayout& layout,
                      std::vector<std::uint8_t>& mask) {
  mask.assign(layout.mask_size(), 0);
  for (Group g : kGroups) {
    for (const auto& a : legal[g]) {
      mask[layout.target_offset(g) + static_cast<std::size_t>(a.target_label())] = 1;
      mask[layout.bits_offset(g) + static_cast<std::size_t>(a.bits())] = 1;
    }
  }
}

Observation encode_observation(const SystemState& s, const EnvConfig& cfg,
                               const WorkspaceConfig& ws) {
  const std::size_t n_max = static_cast<std::size_t>(cfg.n_max);
  const std::size_t n = s.fruit_count();
  if (n > n_max) {
    throw HarvestError(ErrorCode::TooManyFruits,
                       std::to_string(n) + " fruits exceed n_max " + std::to_string(n_max));
  }
  const Box ext = workspace_extent(ws);
  Observation obs;
  obs.features.assign(observation_size(n_max), 0.0);
  auto* f = obs.features.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) f[i * 3 + k] = normalize(s.layout->positions[i][k], ext.lo[k], ext.hi[k]);
  }
  f += n_max * 3;
  for (std::size_t i = 0; i < n; ++i) {
    f[i * 4 + 0] = s.is_allocated(i) ? 1.0 : 0.0;
    f[i * 4 + 1] = s.attempts_total(i) / static_cast<double>(kAttemptCap);
    f[i * 4 + 2] = s.is_picked(i) ? 1.0 : 0.0;
    f[i * 4 + 3] = s.is_abandoned(i, cfg.max_attempts) ? 1.0 : 0.0;
  }
  f += n_max * 4;
  for (int m = 0; m < kArmCount; ++m) {
    for (int k = 0; k < 3; ++k) f[m * 4 + k] = normalize(s.arms[m].position[k], ext.lo[k], ext.hi[k]);
    f[m * 4 + 3] = s.arms[m].phase == Phase::RP ? 1.0 : 0.0;
  }
  f += kArmCount * 4;
  f[0] = s.agent_clock[0] / cfg.t_norm;
  f[1] = s.agent_clock[1] / cfg.t_norm;

  fill_action_mask(legal_actions(s, cfg, ws), HeadLayout{n_max}, obs.mask);
  return obs;
}

std::vector<Vec3> decode_positions(const std::vector<double>& features, std::size_t n_fruit,
                                   const WorkspaceConfig& ws) {
  const Box ext = workspace_extent(ws);
  std::vector<Vec3> out(n_fruit);
  for (std::size_t i = 0; i < n_fruit; ++i) {
    for (int k = 0; k < 3; ++k) {
      out[i][k] = ext.lo[k] + features.at(i * 3 + k) * (ext.hi[k] - ext.lo[k]);
    }
  }
  return out;
}

}  // namespace harvest
