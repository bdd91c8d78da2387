#include "harvest/oracle.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>
#include <unordered_map>

#include "harvest/planners.hpp"

namespace harvest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Entry {
  double diff;
  double value;  // best final makespan minus the smaller clock
  bool has_action;
  JointAction action;
};

class Search {
 public:
  Search(const WorkspaceConfig& ws, const EnvConfig& env, const OracleOptions& opt)
      : ws_(ws), env_(env), opt_(opt) {}

  double solve(const SystemState& s) {
    const double diff = s.agent_clock[0] - s.agent_clock[1];
    auto& bucket = memo_[key(s, diff)];
    for (const auto& e : bucket) {
      if (e.diff == diff) return e.value;
    }

    const double base = std::min(s.agent_clock[0], s.agent_clock[1]);
    Entry best{diff, kInf, false, {}};
    const LegalActions legal = legal_actions(s, env_, ws_);
    const bool both_parked = s.phases(Group::Up) == std::array{Phase::RP, Phase::RP} &&
                             s.phases(Group::Down) == std::array{Phase::RP, Phase::RP};
    for (const auto& up : legal[Group::Up]) {
      for (const auto& down : without_target(legal[Group::Down], up.target())) {
        if (up.is_pause() && down.is_pause() && both_parked) continue;  // clock-only no-op
        if (++expanded_ > opt_.node_budget) {
          throw HarvestError(ErrorCode::SearchBudgetExceeded,
                             "more than " + std::to_string(opt_.node_budget) + " expansions");
        }
        const JointAction a{up, down};
        StepResult r = step(s, a, env_, ws_);
        double value = kInf;
        if (r.done) {
          if (r.done_reason == DoneReason::AllPicked) value = r.next_state.makespan() - base;
        } else {
          const double sub = solve(r.next_state);
          if (sub < kInf) {
            value = sub + (std::min(r.next_state.agent_clock[0], r.next_state.agent_clock[1]) - base);
          }
        }
        if (value < best.value) {
          best.value = value;
          best.action = a;
          best.has_action = true;
        }
      }
    }
    // `bucket` may have been invalidated by rehashing during recursion.
    memo_[key(s, diff)].push_back(best);
    return best.value;
  }

  const Entry* lookup(const SystemState& s) {
    const double diff = s.agent_clock[0] - s.agent_clock[1];
    const auto it = memo_.find(key(s, diff));
    if (it == memo_.end()) return nullptr;
    for (const auto& e : it->second) {
      if (e.diff == diff) return &e;
    }
    return nullptr;
  }

  std::size_t expanded() const noexcept { return expanded_; }
  std::size_t entries() const noexcept {
    std::size_t n = 0;
    for (const auto& [k, v] : memo_) n += v.size();
    return n;
  }

 private:
  std::string key(const SystemState& s, double diff) const {
    std::string k;
    k.reserve(16 + 3 * s.fruit_count());
    k.push_back(static_cast<char>(s.step_index & 0xff));
    k.push_back(static_cast<char>((s.step_index >> 8) & 0xff));
    for (const auto& arm : s.arms) {
      k.push_back(static_cast<char>(arm.phase));
      k.push_back(static_cast<char>(arm.phase == Phase::AEG ? arm.target : -1));
    }
    for (std::size_t n = 0; n < s.fruit_count(); ++n) {
      k.push_back(static_cast<char>(s.is_allocated(n)));
      k.push_back(static_cast<char>(s.attempts_total(n)));
      k.push_back(static_cast<char>(s.is_picked(n)));
    }
    const auto b = static_cast<long long>(std::floor(diff / opt_.clock_bucket));
    char raw[sizeof(b)];
    std::memcpy(raw, &b, sizeof(b));
    k.append(raw, sizeof(b));
    return k;
  }

  const WorkspaceConfig& ws_;
  const EnvConfig& env_;
  const OracleOptions& opt_;
  std::unordered_map<std::string, std::vector<Entry>> memo_;
  std::size_t expanded_ = 0;
};

}  // namespace

double replay_makespan(std::shared_ptr<const FruitLayout> layout,
                       const std::vector<JointAction>& actions, const WorkspaceConfig& ws,
                       const EnvConfig& env) {
  SystemState s = initial_state(std::move(layout), ws);
  if (s.fruit_count() == 0 && actions.empty()) return 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    StepResult r = step(s, actions[i], env, ws);
    s = std::move(r.next_state);
    if (r.done) {
      if (r.done_reason != DoneReason::AllPicked || i + 1 != actions.size()) break;
      return s.makespan();
    }
  }
  throw HarvestError(ErrorCode::InvalidState, "action sequence does not complete the episode");
}

OracleResult optimal_makespan(const FruitLayout& layout, const WorkspaceConfig& ws,
                              const EnvConfig& env, const OracleOptions& options) {
  OracleResult out;
  if (layout.size() > options.max_fruits) {
    throw HarvestError(ErrorCode::InvalidConfig, "oracle handles at most " +
                                                     std::to_string(options.max_fruits) + " fruits");
  }
  if (layout.size() == 0) return out;
  validate_layout(layout);
  if (!options.with_failures) {
    for (int r : layout.required_attempts) {
      if (r != 1) throw HarvestError(ErrorCode::InvalidLayout, "layout has failing fruits; enable failures");
    }
  }

  auto shared = std::make_shared<const FruitLayout>(layout);
  const SystemState root = initial_state(shared, ws);
  Search search(ws, env, options);
  const double best = search.solve(root);
  out.expanded = search.expanded();
  out.memo_entries = search.entries();
  if (!(best < kInf)) {
    throw HarvestError(ErrorCode::InvalidState, "no sequence finishes within k_max");
  }
  out.search_makespan = best;

  SystemState s = root;
  while (true) {
    const Entry* e = search.lookup(s);
    if (!e || !e->has_action) throw HarvestError(ErrorCode::InvalidState, "witness reconstruction failed");
    out.witness.push_back(e->action);
    StepResult r = step(s, e->action, env, ws);
    s = std::move(r.next_state);
    if (r.done) break;
  }
  out.makespan = replay_makespan(shared, out.witness, ws, env);
  return out;
}

}  // namespace harvest
