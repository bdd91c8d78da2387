#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "harvest/types.hpp"
#include "harvest/workspace.hpp"

namespace harvest {

enum class Distribution { Uniform, Clustered };

const char* to_string(Distribution d);
Distribution distribution_from_string(const std::string& s);

struct FailureProfile {
  int n_double = 0;  // fruits needing two attempts
  int n_triple = 0;  // fruits needing three attempts
  friend bool operator==(const FailureProfile&, const FailureProfile&) = default;
};

struct LayoutSpec {
  std::string id = "layout";
  int n_fruits = 10;
  Distribution distribution = Distribution::Uniform;
  int cluster_count = 3;
  double cluster_std = 0.15;  // m
  FailureProfile failure_profile;
  std::uint64_t seed = 1;

  friend bool operator==(const LayoutSpec&, const LayoutSpec&) = default;
};

/// Throws InvalidConfig. n_max bounds n_fruits when given.
void validate_layout_spec(const LayoutSpec& spec, std::optional<int> n_max = std::nullopt);

/// Positions are rounded to the micrometre so they survive the layout file
/// format unchanged. Throws GenerationFailed when a fruit cannot be placed
/// within 10^4 draws.
FruitLayout generate_layout(const LayoutSpec& spec, const WorkspaceConfig& ws);

/// The four experiment groups: "30-A", "30-B", "60-A", "60-B". Distribution A
/// is uniform, B is clustered around three centres. With failures the attempt
/// profiles are (7,2), (8,4), (10,5) and (12,3).
LayoutSpec experiment_preset(const std::string& name, bool with_failures, std::uint64_t seed);

/// Histogram of required attempts, index 1..3.
std::array<int, 4> attempt_histogram(const FruitLayout& layout);

}  // namespace harvest
