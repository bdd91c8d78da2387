#include "harvest/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "harvest/workspace.hpp"

namespace harvest {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArm: return "InvalidArm";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::IllegalAction: return "IllegalAction";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::InvalidLayout: return "InvalidLayout";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TooManyFruits: return "TooManyFruits";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::SearchBudgetExceeded: return "SearchBudgetExceeded";
    case ErrorCode::NumericalError: return "NumericalError";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

HarvestError::HarvestError(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

std::vector<std::string> layout_problems(const FruitLayout& layout) {
  std::vector<std::string> out;
  if (layout.positions.empty()) out.emplace_back("layout has no fruit");
  if (layout.required_attempts.size() != layout.positions.size()) {
    out.emplace_back("required_attempts length differs from positions length");
  }
  for (std::size_t n = 0; n < layout.positions.size(); ++n) {
    for (double c : layout.positions[n]) {
      if (!std::isfinite(c)) {
        out.push_back("fruit " + std::to_string(n + 1) + " has a non-finite coordinate");
        break;
      }
    }
  }
  for (std::size_t n = 0; n < layout.required_attempts.size(); ++n) {
    const int r = layout.required_attempts[n];
    if (r < 1 || r > kAttemptCap) {
      out.push_back("fruit " + std::to_string(n + 1) + " requires " + std::to_string(r) +
                    " attempts (allowed 1..3)");
    }
  }
  const double min_sq = kMinFruitSpacing * kMinFruitSpacing;
  for (std::size_t a = 0; a < layout.positions.size(); ++a) {
    for (std::size_t b = a + 1; b < layout.positions.size(); ++b) {
      double d2 = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double d = layout.positions[a][k] - layout.positions[b][k];
        d2 += d * d;
      }
      if (d2 < min_sq) {
        out.push_back("fruits " + std::to_string(a + 1) + " and " + std::to_string(b + 1) +
                      " are closer than 1 mm");
      }
    }
  }
  return out;
}

void validate_layout(const FruitLayout& layout) {
  const auto problems = layout_problems(layout);
  if (!problems.empty()) {
    std::ostringstream os;
    os << "layout '" << layout.id << "': " << problems.front();
    if (problems.size() > 1) os << " (+" << problems.size() - 1 << " more)";
    throw HarvestError(ErrorCode::InvalidLayout, os.str());
  }
}

const char* to_string(Phase phase) { return phase == Phase::AEG ? "AEG" : "RP"; }

const char* to_string(Group g) { return g == Group::Up ? "U" : "D"; }

bool SystemState::is_picked(std::size_t n) const {
  const auto& row = picked.at(n);
  return std::any_of(row.begin(), row.end(), [](std::uint8_t v) { return v != 0; });
}

bool SystemState::is_allocated(std::size_t n) const {
  const auto& row = allocation.at(n);
  return std::any_of(row.begin(), row.end(), [](std::uint8_t v) { return v != 0; });
}

int SystemState::attempts_total(std::size_t n) const {
  int total = 0;
  for (auto v : attempts.at(n)) total += v;
  return total;
}

bool SystemState::is_abandoned(std::size_t n, int max_attempts) const {
  return !is_picked(n) && attempts_total(n) >= max_attempts;
}

std::size_t SystemState::picked_count() const {
  std::size_t c = 0;
  for (std::size_t n = 0; n < fruit_count(); ++n) c += is_picked(n) ? 1 : 0;
  return c;
}

std::size_t SystemState::abandoned_count(int max_attempts) const {
  std::size_t c = 0;
  for (std::size_t n = 0; n < fruit_count(); ++n) c += is_abandoned(n, max_attempts) ? 1 : 0;
  return c;
}

std::size_t SystemState::remaining_count(int max_attempts) const {
  return fruit_count() - picked_count() - abandoned_count(max_attempts);
}

std::array<Phase, 2> SystemState::phases(Group g) const {
  const auto idx = group_arms(g);
  return {arms[idx[0]].phase, arms[idx[1]].phase};
}

double SystemState::makespan() const { return std::max(agent_clock[0], agent_clock[1]); }

bool operator==(const SystemState& a, const SystemState& b) {
  const bool same_layout = (a.layout == b.layout) ||
                           (a.layout && b.layout && *a.layout == *b.layout);
  return same_layout && a.arms == b.arms && a.allocation == b.allocation &&
         a.attempts == b.attempts && a.picked == b.picked && a.agent_clock == b.agent_clock &&
         a.step_index == b.step_index;
}

const char* to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::ShapeMismatch: return "ShapeMismatch";
    case ViolationCode::BadArmId: return "BadArmId";
    case ViolationCode::DoublePick: return "DoublePick";
    case ViolationCode::DoubleAllocation: return "DoubleAllocation";
    case ViolationCode::AttemptOverflow: return "AttemptOverflow";
    case ViolationCode::PickWithoutAttempt: return "PickWithoutAttempt";
    case ViolationCode::NonBinaryEntry: return "NonBinaryEntry";
    case ViolationCode::NegativeBusy: return "NegativeBusy";
    case ViolationCode::NegativeClock: return "NegativeClock";
    case ViolationCode::StepOverflow: return "StepOverflow";
    case ViolationCode::JointConflict: return "JointConflict";
    case ViolationCode::ArmOutOfReach: return "ArmOutOfReach";
    case ViolationCode::BadTarget: return "BadTarget";
  }
  return "Unknown";
}

std::vector<Violation> validate_state(const SystemState& s, const ValidationContext& ctx) {
  std::vector<Violation> out;
  const std::size_t n_fruit = s.fruit_count();
  if (s.allocation.size() != n_fruit || s.attempts.size() != n_fruit ||
      s.picked.size() != n_fruit) {
    out.push_back({ViolationCode::ShapeMismatch, -1, -1, "matrix rows differ from fruit count"});
    return out;
  }

  for (int m = 0; m < kArmCount; ++m) {
    const auto& arm = s.arms[m];
    if (arm.arm_id != m + 1) {
      out.push_back({ViolationCode::BadArmId, -1, m, "arm slot holds wrong id"});
    }
    if (!(arm.busy_until >= 0.0)) {
      out.push_back({ViolationCode::NegativeBusy, -1, m, "busy_until below zero"});
    }
    if (arm.target < -1 || arm.target >= static_cast<int>(n_fruit)) {
      out.push_back({ViolationCode::BadTarget, -1, m, "arm target out of range"});
    }
    if (ctx.workspace && !reachable(m + 1, arm.position, *ctx.workspace)) {
      out.push_back({ViolationCode::ArmOutOfReach, -1, m, "arm outside its box"});
    }
  }
  for (Group g : kGroups) {
    const auto ph = s.phases(g);
    if (ph[0] == Phase::AEG && ph[1] == Phase::AEG) {
      out.push_back({ViolationCode::JointConflict, -1, group_arms(g)[0],
                     "both arms of a group hold joint-1"});
    }
  }
  for (double c : s.agent_clock) {
    if (!(c >= 0.0)) out.push_back({ViolationCode::NegativeClock, -1, -1, "negative clock"});
  }
  if (s.step_index < 0 || (ctx.k_max && s.step_index > *ctx.k_max)) {
    out.push_back({ViolationCode::StepOverflow, -1, -1, "step index outside [0, k_max]"});
  }

  for (std::size_t n = 0; n < n_fruit; ++n) {
    const int fn = static_cast<int>(n);
    int picks = 0;
    int allocs = 0;
    bool non_binary = false;
    for (int m = 0; m < kArmCount; ++m) {
      const auto p = s.picked[n][m];
      const auto a = s.allocation[n][m];
      const auto t = s.attempts[n][m];
      if (p > 1 || a > 1) non_binary = true;
      picks += p != 0;
      allocs += a != 0;
      if (t > kAttemptCap) {
        out.push_back({ViolationCode::AttemptOverflow, fn, m, "attempt entry above 3"});
      }
      if (t < p) {
        out.push_back({ViolationCode::PickWithoutAttempt, fn, m, "picked without an attempt"});
      }
    }
    if (non_binary) out.push_back({ViolationCode::NonBinaryEntry, fn, -1, "entry not 0/1"});
    if (picks > 1) out.push_back({ViolationCode::DoublePick, fn, -1, "picked by several arms"});
    if (allocs > 1) {
      out.push_back({ViolationCode::DoubleAllocation, fn, -1, "allocated to several arms"});
    }
  }
  return out;
}

std::optional<int> GroupAction::entering_slot() const noexcept {
  switch (bits_) {
    case BitPair::EnterLeft: return 0;
    case BitPair::EnterRight: return 1;
    case BitPair::Pause: break;
  }
  return std::nullopt;
}

GroupAction GroupAction::make(std::optional<std::size_t> target, int b_left, int b_right) {
  if ((b_left != 0 && b_left != 1) || (b_right != 0 && b_right != 1)) {
    throw HarvestError(ErrorCode::IllegalAction, "action bits must be 0 or 1");
  }
  if (b_left == 0 && b_right == 0) {
    throw HarvestError(ErrorCode::IllegalAction, "bits (0,0) would put both arms on joint-1");
  }
  const BitPair bits = b_left == 0 ? BitPair::EnterLeft
                       : b_right == 0 ? BitPair::EnterRight
                                      : BitPair::Pause;
  return make(target, bits);
}

GroupAction GroupAction::make(std::optional<std::size_t> target, BitPair bits) {
  if (bits == BitPair::Pause && target) {
    throw HarvestError(ErrorCode::IllegalAction, "a pausing group cannot claim a target");
  }
  return GroupAction(target, bits);
}

const char* to_string(Transition t) {
  static constexpr const char* names[] = {"T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8", "T9"};
  return names[static_cast<int>(t) - 1];
}

const char* to_string(Semantic s) {
  switch (s) {
    case Semantic::Pause: return "Pause";
    case Semantic::Alternation: return "Alternation";
    case Semantic::NonAlternation: return "NonAlternation";
    case Semantic::Restart: return "Restart";
  }
  return "Unknown";
}

}  // namespace harvest
