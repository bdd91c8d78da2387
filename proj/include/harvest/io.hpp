#pragma once

// JSON formats: layout files, workspace and environment configs, layout
// specs and full system-state snapshots. Fruit indices are 1-based on disk.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "harvest/env.hpp"
#include "harvest/layouts.hpp"
#include "harvest/types.hpp"
#include "harvest/workspace.hpp"

namespace harvest {

using Json = nlohmann::json;

/// Coordinates rounded to 6 decimals.
Json layout_to_json(const FruitLayout& layout);
FruitLayout layout_from_json(const Json& j);

Json workspace_to_json(const WorkspaceConfig& cfg);
/// Missing keys keep their defaults.
WorkspaceConfig workspace_from_json(const Json& j);

Json env_config_to_json(const EnvConfig& cfg);
EnvConfig env_config_from_json(const Json& j);

Json layout_spec_to_json(const LayoutSpec& spec);
LayoutSpec layout_spec_from_json(const Json& j);

/// Lossless: doubles are written with round-trip precision.
Json state_to_json(const SystemState& state);
SystemState state_from_json(const Json& j);

Json action_to_json(const GroupAction& a);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j, int indent = 2);

FruitLayout read_layout_file(const std::filesystem::path& path);
void write_layout_file(const std::filesystem::path& path, const FruitLayout& layout);
WorkspaceConfig read_workspace_file(const std::filesystem::path& path);
EnvConfig read_env_config_file(const std::filesystem::path& path);

}  // namespace harvest
