#pragma once

// Robot geometry: per-arm reachable boxes, conveyor drop points, the Cartesian
// travel-time law and the inter-arm separation rule. Zones are derived from
// the box intersections, never stored separately.

#include <array>
#include <string>
#include <vector>

#include "harvest/types.hpp"

namespace harvest {

struct Box {
  Vec3 lo{};
  Vec3 hi{};

  /// Closed intervals on every axis.
  bool contains(const Vec3& p) const noexcept;
  Vec3 center() const noexcept;
  friend bool operator==(const Box&, const Box&) = default;
};

struct WorkspaceConfig {
  std::array<Box, kArmCount> arm_boxes{};
  std::array<Vec3, kArmCount> drop_points{};
  Vec3 axis_speeds{0.5, 0.5, 0.5};  // m/s for x (joint-2), y (joint-3), z (joint-1)
  double t_grasp = 1.5;
  double t_place = 1.0;
  double d_min = 0.3;

  /// 1.0 x 1.2 x 0.8 m boxes overlapping by 0.3 m in x and z; arms 1,2 on top.
  static WorkspaceConfig defaults();
  friend bool operator==(const WorkspaceConfig&, const WorkspaceConfig&) = default;
};

/// Throws InvalidConfig on non-positive speeds or times, a drop point outside
/// its own box, or group siblings whose boxes do not overlap.
void validate_workspace(const WorkspaceConfig& cfg);

/// Smallest box containing every arm box.
Box workspace_extent(const WorkspaceConfig& cfg);

/// arm_id is 1-based. Throws InvalidArm outside 1..4.
bool reachable(int arm_id, const Vec3& point, const WorkspaceConfig& cfg);

/// Any arm reaches the point.
bool reachable_by_any(const Vec3& point, const WorkspaceConfig& cfg);

/// All three axes move at once, so the slowest axis sets the time.
double travel_time(const Vec3& from, const Vec3& to, const WorkspaceConfig& cfg);

/// Approach-extend-grasp from the arm's current position. Throws Unreachable.
double aeg_duration(const ArmState& arm, const Vec3& target, const WorkspaceConfig& cfg);

/// Retract from `from` to the arm's drop point and place.
double rp_duration(int arm_id, const Vec3& from, const WorkspaceConfig& cfg);

/// Inclusive: exactly d_min apart is fine.
bool separation_ok(const Vec3& a, const Vec3& b, const WorkspaceConfig& cfg);

enum class Zone { E1, E2, E3, E4, OU, OD, OL, OR, OC, Other, Outside };

const char* to_string(Zone z);

/// Arms (bit i set = arm i+1) whose box contains the point.
unsigned reach_mask(const Vec3& point, const WorkspaceConfig& cfg);
Zone zone_of_mask(unsigned mask);
Zone zone_of(const Vec3& point, const WorkspaceConfig& cfg);

struct ZoneCell {
  Zone zone;
  unsigned arms;
  Box box;
};

/// Cells of the grid spanned by all box faces, labeled by the set of arms
/// covering each cell. Cells outside every box are dropped.
std::vector<ZoneCell> zone_cells(const WorkspaceConfig& cfg);

}  // namespace harvest
