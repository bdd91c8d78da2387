#pragma once

// Exhaustive minimum-makespan search for tiny instances. Every candidate
// sequence is driven through env::step, so the oracle and the environment
// share one set of dynamics.

#include <cstddef>
#include <vector>

#include "harvest/env.hpp"

namespace harvest {

struct OracleOptions {
  bool with_failures = false;
  std::size_t node_budget = 10'000'000;
  /// Hash granularity of the clock difference (s). Entries inside a bucket
  /// are matched on the exact difference, so the bucket never merges states.
  double clock_bucket = 0.1;
  std::size_t max_fruits = 6;
};

struct OracleResult {
  double makespan = 0.0;         // from replaying the witness through step()
  double search_makespan = 0.0;  // value found by the search
  std::vector<JointAction> witness;
  std::size_t expanded = 0;
  std::size_t memo_entries = 0;
};

/// Throws InvalidConfig for N above max_fruits, InvalidLayout for a layout
/// with failing fruits when failures are not enabled, SearchBudgetExceeded
/// after node_budget expansions. An empty layout has makespan 0.
OracleResult optimal_makespan(const FruitLayout& layout, const WorkspaceConfig& ws,
                              const EnvConfig& env, const OracleOptions& options = {});

/// Drives `actions` through step() from the initial state; returns the final
/// state's makespan. Throws InvalidState if the sequence does not finish.
double replay_makespan(std::shared_ptr<const FruitLayout> layout,
                       const std::vector<JointAction>& actions, const WorkspaceConfig& ws,
                       const EnvConfig& env);

}  // namespace harvest
