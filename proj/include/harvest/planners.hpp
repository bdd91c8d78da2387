#pragma once

// Decision policies sharing one interface with the learned controller: given
// the state and the legal action lists, emit one joint action.

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "harvest/env.hpp"
#include "harvest/rng.hpp"

namespace harvest {

class Planner {
 public:
  virtual ~Planner() = default;

  virtual std::string name() const = 0;
  /// Called once per episode before the first decision.
  virtual void reset(const SystemState& initial, std::uint64_t seed) {
    (void)initial;
    (void)seed;
  }
  virtual JointAction decide(const SystemState& state, const LegalActions& legal) = 0;
  /// Open-loop planners report when their plan is exhausted.
  virtual bool finished(const SystemState& state) const {
    (void)state;
    return false;
  }
};

/// Legal actions of group D once group U has claimed `taken`.
std::vector<GroupAction> without_target(const std::vector<GroupAction>& actions,
                                        std::optional<std::size_t> taken);

/// Uniform over each group's legal list; D never repeats U's target.
JointAction random_joint_action(const LegalActions& legal, Rng& rng);

/// Time the group spends on `action` before synchronisation (AEG, plus the
/// preceding RP when the entering arm is still out at a fruit).
double action_duration(const SystemState& state, Group g, const GroupAction& action,
                       const WorkspaceConfig& ws);

/// Shortest action per group, ties to the lowest fruit index; pauses only
/// when nothing else is legal.
JointAction greedy_joint_action(const SystemState& state, const LegalActions& legal,
                                const WorkspaceConfig& ws);

struct StaticPlan {
  std::array<std::vector<std::size_t>, kArmCount> per_arm;
};

/// Offline assignment: exclusive fruits to their arm, shared fruits to the
/// candidate arm with the shortest list so far (ties to the lower id), then
/// nearest-neighbour ordering from each drop point.
StaticPlan static_list_plan(const FruitLayout& layout, const WorkspaceConfig& ws);

class RandomPlanner final : public Planner {
 public:
  std::string name() const override { return "random"; }
  void reset(const SystemState& initial, std::uint64_t seed) override;
  JointAction decide(const SystemState& state, const LegalActions& legal) override;

 private:
  Rng rng_{0};
};

class GreedyPlanner final : public Planner {
 public:
  explicit GreedyPlanner(WorkspaceConfig ws) : ws_(std::move(ws)) {}
  std::string name() const override { return "greedy"; }
  JointAction decide(const SystemState& state, const LegalActions& legal) override;

 private:
  WorkspaceConfig ws_;
};

/// Plans once from the initial state and executes the lists open-loop; every
/// fruit is attempted exactly once whatever the grasp outcome.
class StaticListPlanner final : public Planner {
 public:
  explicit StaticListPlanner(WorkspaceConfig ws) : ws_(std::move(ws)) {}
  std::string name() const override { return "static"; }
  void reset(const SystemState& initial, std::uint64_t seed) override;
  JointAction decide(const SystemState& state, const LegalActions& legal) override;
  bool finished(const SystemState& state) const override;

  const StaticPlan& plan() const noexcept { return plan_; }

 private:
  std::optional<GroupAction> next_for(const SystemState& state, Group g,
                                      const std::vector<GroupAction>& legal) const;

  WorkspaceConfig ws_;
  StaticPlan plan_;
  std::array<std::size_t, kArmCount> cursor_{};
};

// ---------------------------------------------------------------------------
// Episode driver

struct TrajectoryRecord {
  int k = 0;
  JointAction actions;
  std::array<Transition, 2> transition_kinds{};
  std::array<double, 2> time_deltas{};
  std::array<double, 2> rewards{};
  std::array<double, 2> clocks{};
  std::size_t picked_count = 0;
};

struct EpisodeResult {
  EpisodeMetrics metrics;
  DoneReason reason = DoneReason::NotDone;
  SystemState final_state;
  std::vector<TrajectoryRecord> trajectory;
  std::vector<double> latencies;  // seconds per decision
};

/// Runs one episode until the environment terminates or the planner reports
/// its plan finished with every arm parked.
EpisodeResult run_episode(std::shared_ptr<const FruitLayout> layout, Planner& planner,
                          const EnvConfig& env, const WorkspaceConfig& ws, std::uint64_t seed,
                          bool keep_trajectory = true);

}  // namespace harvest
