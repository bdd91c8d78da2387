#pragma once

// Core value types of the four-arm harvesting model: the fruit layout, arm and
// system state, per-group actions, transition labels and episode metrics.

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace harvest {

using Vec3 = std::array<double, 3>;

inline constexpr int kArmCount = 4;
inline constexpr int kGroupCount = 2;
inline constexpr int kAttemptCap = 3;
/// Minimum spacing between two fruits of one layout (meters).
inline constexpr double kMinFruitSpacing = 1e-3;

enum class ErrorCode {
  InvalidArm,
  Unreachable,
  IllegalAction,
  InvalidState,
  InvalidLayout,
  InvalidConfig,
  TooManyFruits,
  GenerationFailed,
  SearchBudgetExceeded,
  NumericalError,
  Io,
};

const char* to_string(ErrorCode code);

class HarvestError : public std::runtime_error {
 public:
  HarvestError(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Layout

struct FruitLayout {
  std::string id;
  std::vector<Vec3> positions;
  std::vector<int> required_attempts;

  std::size_t size() const noexcept { return positions.size(); }
  friend bool operator==(const FruitLayout&, const FruitLayout&) = default;
};

/// Empty when the layout is well formed. N == 0 is reported too; callers that
/// accept empty layouts (the oracle) check the remaining problems themselves.
std::vector<std::string> layout_problems(const FruitLayout& layout);
void validate_layout(const FruitLayout& layout);

// ---------------------------------------------------------------------------
// Arms and groups

/// Numeric value equals the action bit that selects the phase.
enum class Phase : std::uint8_t { AEG = 0, RP = 1 };

const char* to_string(Phase phase);

struct ArmState {
  int arm_id = 1;  // 1..4
  Vec3 position{};
  Phase phase = Phase::RP;
  double busy_until = 0.0;
  // Fruit the arm last approached (0-based); -1 while parked at the drop point.
  int target = -1;

  friend bool operator==(const ArmState&, const ArmState&) = default;
};

enum class Group : int { Up = 0, Down = 1 };

inline constexpr std::array<Group, 2> kGroups{Group::Up, Group::Down};

/// Zero-based arm indices of a group: U = arms 1,2 and D = arms 3,4.
constexpr std::array<int, 2> group_arms(Group g) {
  return g == Group::Up ? std::array<int, 2>{0, 1} : std::array<int, 2>{2, 3};
}
constexpr int group_index(Group g) { return static_cast<int>(g); }
constexpr Group other(Group g) { return g == Group::Up ? Group::Down : Group::Up; }
const char* to_string(Group g);

// ---------------------------------------------------------------------------
// System state

using ArmRow = std::array<std::uint8_t, kArmCount>;

struct SystemState {
  std::shared_ptr<const FruitLayout> layout;
  std::array<ArmState, kArmCount> arms{};
  std::vector<ArmRow> allocation;  // N x 4, binary
  std::vector<ArmRow> attempts;    // N x 4, 0..3
  std::vector<ArmRow> picked;      // N x 4, binary
  std::array<double, kGroupCount> agent_clock{0.0, 0.0};
  int step_index = 0;

  std::size_t fruit_count() const noexcept { return layout ? layout->size() : 0; }

  bool is_picked(std::size_t n) const;
  bool is_allocated(std::size_t n) const;
  int attempts_total(std::size_t n) const;
  /// Unpicked fruit whose attempt budget is spent.
  bool is_abandoned(std::size_t n, int max_attempts) const;

  std::size_t picked_count() const;
  std::size_t abandoned_count(int max_attempts) const;
  std::size_t remaining_count(int max_attempts) const;

  std::array<Phase, 2> phases(Group g) const;
  double makespan() const;

  friend bool operator==(const SystemState& a, const SystemState& b);
};

struct WorkspaceConfig;

enum class ViolationCode {
  ShapeMismatch,
  BadArmId,
  DoublePick,
  DoubleAllocation,
  AttemptOverflow,
  PickWithoutAttempt,
  NonBinaryEntry,
  NegativeBusy,
  NegativeClock,
  StepOverflow,
  JointConflict,  // both arms of one group in AEG
  ArmOutOfReach,
  BadTarget,
};

const char* to_string(ViolationCode code);

struct Violation {
  ViolationCode code;
  int fruit = -1;
  int arm = -1;
  std::string detail;
};

struct ValidationContext {
  const WorkspaceConfig* workspace = nullptr;  // enables reachability checks
  std::optional<int> k_max;
};

/// Total: returns one entry per violated invariant, empty when the state is valid.
std::vector<Violation> validate_state(const SystemState& state, const ValidationContext& ctx = {});

// ---------------------------------------------------------------------------
// Actions

/// Next-phase bits (left, right); 0 = AEG, 1 = RP. (0,0) does not exist.
enum class BitPair : std::uint8_t { EnterLeft = 0, EnterRight = 1, Pause = 2 };

inline constexpr std::array<BitPair, 3> kBitPairs{BitPair::EnterLeft, BitPair::EnterRight,
                                                  BitPair::Pause};

constexpr std::array<int, 2> bits_of(BitPair b) {
  switch (b) {
    case BitPair::EnterLeft: return {0, 1};
    case BitPair::EnterRight: return {1, 0};
    case BitPair::Pause: break;
  }
  return {1, 1};
}

/// Action of one group: optional new target (0-based fruit index) plus the
/// next-phase bits of its two arms. Invalid combinations cannot be built.
class GroupAction {
 public:
  /// Throws IllegalAction for bits (0,0), bits outside {0,1}, or a target
  /// together with bits (1,1).
  static GroupAction make(std::optional<std::size_t> target, int b_left, int b_right);
  static GroupAction make(std::optional<std::size_t> target, BitPair bits);
  static GroupAction pause() { return GroupAction(std::nullopt, BitPair::Pause); }

  std::optional<std::size_t> target() const noexcept { return target_; }
  BitPair bits() const noexcept { return bits_; }
  int b_left() const noexcept { return bits_of(bits_)[0]; }
  int b_right() const noexcept { return bits_of(bits_)[1]; }
  bool is_pause() const noexcept { return bits_ == BitPair::Pause; }
  /// Zero-based index within the group of the arm that enters AEG, if any.
  std::optional<int> entering_slot() const noexcept;
  /// Target as written in logs and files: 0 = none, 1..N = fruit.
  int target_label() const noexcept { return target_ ? static_cast<int>(*target_) + 1 : 0; }

  friend bool operator==(const GroupAction&, const GroupAction&) = default;

 private:
  GroupAction(std::optional<std::size_t> target, BitPair bits) : target_(target), bits_(bits) {}

  std::optional<std::size_t> target_;
  BitPair bits_;
};

struct JointAction {
  GroupAction up = GroupAction::pause();
  GroupAction down = GroupAction::pause();

  const GroupAction& operator[](Group g) const { return g == Group::Up ? up : down; }
  GroupAction& operator[](Group g) { return g == Group::Up ? up : down; }
  friend bool operator==(const JointAction&, const JointAction&) = default;
};

// ---------------------------------------------------------------------------
// Transitions

enum class Transition : std::uint8_t { T1 = 1, T2, T3, T4, T5, T6, T7, T8, T9 };
enum class Semantic : std::uint8_t { Pause, Alternation, NonAlternation, Restart };

constexpr Semantic semantic_of(Transition t) {
  switch (t) {
    case Transition::T1:
    case Transition::T6:
    case Transition::T7: return Semantic::Pause;
    case Transition::T2:
    case Transition::T4: return Semantic::Alternation;
    case Transition::T3:
    case Transition::T5: return Semantic::NonAlternation;
    case Transition::T8:
    case Transition::T9: break;
  }
  return Semantic::Restart;
}

const char* to_string(Transition t);
const char* to_string(Semantic s);

// ---------------------------------------------------------------------------
// Metrics

struct EpisodeMetrics {
  double makespan = 0.0;
  std::array<double, kArmCount> idle_per_arm{};
  int conflicts = 0;
  std::size_t remaining = 0;
  std::size_t abandoned = 0;
  std::size_t picked_total = 0;
  double planning_latency_mean = 0.0;  // seconds
  int steps = 0;
};

}  // namespace harvest
