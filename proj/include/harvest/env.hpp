#pragma once

// The two-agent Markov game: group U (arms 1,2) and group D (arms 3,4) each
// choose a GroupAction per joint step. One call to step() classifies both
// transitions, advances the group clocks, resolves grasps and pays rewards.

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "harvest/types.hpp"
#include "harvest/workspace.hpp"

namespace harvest {

enum class ConflictRule {
  Distance,  // active targets closer than d_min
  Zone,      // active targets in the same common zone
};

struct EnvConfig {
  double alpha = 1.0;
  double r_explore = 0.05;
  double r_conflict = -0.1;
  double r_timeout = -50.0;
  double r_complete = 100.0;
  int k_max = 0;  // 0 selects 6 * N
  int max_attempts = kAttemptCap;
  double gamma = 0.95;
  int n_max = 60;
  double t_norm = 100.0;  // clock scale in observations (s)
  ConflictRule conflict_rule = ConflictRule::Distance;

  int effective_k_max(std::size_t n_fruit) const;
  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

void validate_env_config(const EnvConfig& cfg);

/// Fresh episode: every arm parked at its drop point in RP, all matrices zero.
SystemState initial_state(std::shared_ptr<const FruitLayout> layout, const WorkspaceConfig& ws);

/// Table row for (current phases, next-phase bits). Throws IllegalAction when
/// the current phases are (AEG, AEG).
Transition classify_transition(std::array<Phase, 2> current, BitPair bits);
std::array<Phase, 2> phases_after(Transition t);
std::array<Phase, 2> phases_before(Transition t);

struct PhaseTimes {
  double aeg = 0.0;  // arm entering AEG this step
  double rp = 0.0;   // arm leaving AEG this step
};

/// Time charged to one agent for one transition. Alternation and restart cost
/// the AEG only; non-alternation costs RP plus AEG of the same arm. A pause
/// costs the wait imposed by the other agent, but never less than the
/// retraction of an arm that leaves AEG during the pause.
double time_cost(Transition kind, PhaseTimes durations, double idle_wait);

/// alpha * (exp(-t) - 1).
double time_reward(double t, double alpha);

enum class DoneReason { NotDone, AllPicked, Timeout };
const char* to_string(DoneReason r);

struct StepResult {
  SystemState next_state;
  std::array<double, 2> rewards{};
  std::array<Transition, 2> transition_kinds{Transition::T7, Transition::T7};
  std::array<double, 2> time_deltas{};
  std::array<double, kArmCount> arm_busy{};  // work time of each arm in this step
  bool conflict = false;
  bool done = false;
  DoneReason done_reason = DoneReason::NotDone;
};

struct LegalActions {
  std::array<std::vector<GroupAction>, 2> per_group;

  const std::vector<GroupAction>& operator[](Group g) const { return per_group[group_index(g)]; }
};

/// Fruits the given arm could claim now: unpicked, unallocated, attempts left,
/// inside the arm's box and clear of the other group's arm in AEG.
bool target_legal(const SystemState& state, int arm_index, std::size_t fruit,
                  const EnvConfig& cfg, const WorkspaceConfig& ws);

/// Per-group legal actions. Pause is always first. Targets are listed in
/// fruit order, EnterLeft before EnterRight for the same fruit.
LegalActions legal_actions(const SystemState& state, const EnvConfig& cfg,
                           const WorkspaceConfig& ws);

bool group_action_legal(const SystemState& state, Group g, const GroupAction& action,
                        const EnvConfig& cfg, const WorkspaceConfig& ws);

/// Both group actions legal and not claiming the same fruit.
bool joint_action_legal(const SystemState& state, const JointAction& action,
                        const EnvConfig& cfg, const WorkspaceConfig& ws);

/// Every fruit picked or abandoned and every arm back in RP.
bool all_work_done(const SystemState& state, const EnvConfig& cfg);

/// Throws IllegalAction on a masked action, InvalidState on a broken state.
StepResult step(const SystemState& state, const JointAction& action, const EnvConfig& cfg,
                const WorkspaceConfig& ws);

// ---------------------------------------------------------------------------
// Observation encoding for the centralized policy.
//
// Head layout of the action mask:
//   [target-U : n_max+1][bits-U : 3][target-D : n_max+1][bits-D : 3]
// target index 0 = no target, i = fruit i-1; bits index follows BitPair.

struct HeadLayout {
  std::size_t n_max = 0;

  std::size_t target_size() const noexcept { return n_max + 1; }
  static constexpr std::size_t bits_size() noexcept { return 3; }
  std::size_t target_offset(Group g) const noexcept {
    return g == Group::Up ? 0 : target_size() + bits_size();
  }
  std::size_t bits_offset(Group g) const noexcept { return target_offset(g) + target_size(); }
  std::size_t mask_size() const noexcept { return 2 * (target_size() + bits_size()); }
};

struct Observation {
  std::vector<double> features;
  std::vector<std::uint8_t> mask;
};

std::size_t observation_size(std::size_t n_max);

/// Throws TooManyFruits when N > n_max.
Observation encode_observation(const SystemState& state, const EnvConfig& cfg,
                               const WorkspaceConfig& ws);

/// Fills a mask from a list of legal actions (union over each head).
void fill_action_mask(const LegalActions& legal, const HeadLayout& layout,
                      std::vector<std::uint8_t>& mask);

/// Inverse of the position block of encode_observation.
std::vector<Vec3> decode_positions(const std::vector<double>& features, std::size_t n_fruit,
                                   const WorkspaceConfig& ws);

}  // namespace harvest
