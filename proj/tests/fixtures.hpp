#pragma once

#include <memory>
#include <vector>

#include "harvest/env.hpp"
#include "harvest/layouts.hpp"
#include "harvest/workspace.hpp"

namespace harvest::testing {

inline std::shared_ptr<const FruitLayout> make_layout(std::vector<Vec3> positions,
                                                      std::vector<int> attempts = {}) {
  auto layout = std::make_shared<FruitLayout>();
  layout->id = "fixture";
  layout->positions = std::move(positions);
  layout->required_attempts =
      attempts.empty() ? std::vector<int>(layout->positions.size(), 1) : std::move(attempts);
  return layout;
}

/// Points inside each exclusive zone of the default workspace.
inline Vec3 in_e1() { return {0.3, 0.6, 1.1}; }
inline Vec3 in_e2() { return {1.4, 0.6, 1.1}; }
inline Vec3 in_e3() { return {1.4, 0.6, 0.2}; }
inline Vec3 in_e4() { return {0.3, 0.6, 0.2}; }

inline std::shared_ptr<const FruitLayout> random_layout(std::uint64_t seed, int n,
                                                        const WorkspaceConfig& ws,
                                                        FailureProfile fp = {}) {
  LayoutSpec spec;
  spec.id = "rand-" + std::to_string(seed);
  spec.n_fruits = n;
  spec.seed = seed;
  spec.failure_profile = fp;
  return std::make_shared<FruitLayout>(generate_layout(spec, ws));
}

}  // namespace harvest::testing
