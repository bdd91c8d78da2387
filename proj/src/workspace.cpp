#include "harvest/workspace.hpp"

#include <algorithm>
#include <cmath>

namespace harvest {

bool Box::contains(const Vec3& p) const noexcept {
  for (int k = 0; k < 3; ++k) {
    if (!(p[k] >= lo[k] && p[k] <= hi[k])) return false;
  }
  return true;
}

Vec3 Box::center() const noexcept {
  return {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])};
}

WorkspaceConfig WorkspaceConfig::defaults() {
  WorkspaceConfig cfg;
  // x: side to side, y: toward the canopy, z: vertical. Arm 1 upper-left,
  // arm 2 upper-right, arm 3 lower-right, arm 4 lower-left.
  constexpr double kLeft[2] = {0.0, 1.0};
  constexpr double kRight[2] = {0.7, 1.7};
  constexpr double kLower[2] = {0.0, 0.8};
  constexpr double kUpper[2] = {0.5, 1.3};
  constexpr double kDepth[2] = {0.0, 1.2};
  auto box = [&](const double* x, const double* z) {
    return Box{{x[0], kDepth[0], z[0]}, {x[1], kDepth[1], z[1]}};
  };
  cfg.arm_boxes = {box(kLeft, kUpper), box(kRight, kUpper), box(kRight, kLower),
                   box(kLeft, kLower)};
  for (int m = 0; m < kArmCount; ++m) {
    const Vec3 c = cfg.arm_boxes[m].center();
    cfg.drop_points[m] = {c[0], cfg.arm_boxes[m].lo[1], c[2]};
  }
  return cfg;
}

namespace {

bool boxes_overlap(const Box& a, const Box& b) {
  for (int k = 0; k < 3; ++k) {
    if (a.hi[k] < b.lo[k] || b.hi[k] < a.lo[k]) return false;
  }
  return true;
}

void check_arm(int arm_id) {
  if (arm_id < 1 || arm_id > kArmCount) {
    throw HarvestError(ErrorCode::InvalidArm, "arm id " + std::to_string(arm_id));
  }
}

}  // namespace

void validate_workspace(const WorkspaceConfig& cfg) {
  auto fail = [](const std::string& msg) { throw HarvestError(ErrorCode::InvalidConfig, msg); };
  for (double v : cfg.axis_speeds) {
    if (!(v > 0.0) || !std::isfinite(v)) fail("axis speeds must be positive");
  }
  if (!(cfg.t_grasp > 0.0) || !(cfg.t_place > 0.0)) fail("t_grasp and t_place must be positive");
  if (!(cfg.d_min > 0.0)) fail("d_min must be positive");
  for (int m = 0; m < kArmCount; ++m) {
    const auto& b = cfg.arm_boxes[m];
    for (int k = 0; k < 3; ++k) {
      if (!(b.lo[k] < b.hi[k])) fail("arm box " + std::to_string(m + 1) + " is empty");
    }
    if (!b.contains(cfg.drop_points[m])) {
      fail("drop point of arm " + std::to_string(m + 1) + " lies outside its box");
    }
  }
  if (!boxes_overlap(cfg.arm_boxes[0], cfg.arm_boxes[1]) ||
      !boxes_overlap(cfg.arm_boxes[2], cfg.arm_boxes[3])) {
    fail("boxes of the two arms of a group must overlap");
  }
}

Box workspace_extent(const WorkspaceConfig& cfg) {
  Box out = cfg.arm_boxes[0];
  for (const auto& b : cfg.arm_boxes) {
    for (int k = 0; k < 3; ++k) {
      out.lo[k] = std::min(out.lo[k], b.lo[k]);
      out.hi[k] = std::max(out.hi[k], b.hi[k]);
    }
  }
  return out;
}

bool reachable(int arm_id, const Vec3& point, const WorkspaceConfig& cfg) {
  check_arm(arm_id);
  return cfg.arm_boxes[arm_id - 1].contains(point);
}

bool reachable_by_any(const Vec3& point, const WorkspaceConfig& cfg) {
  return reach_mask(point, cfg) != 0;
}

double travel_time(const Vec3& from, const Vec3& to, const WorkspaceConfig& cfg) {
  double t = 0.0;
  for (int k = 0; k < 3; ++k) t = std::max(t, std::abs(to[k] - from[k]) / cfg.axis_speeds[k]);
  return t;
}

double aeg_duration(const ArmState& arm, const Vec3& target, const WorkspaceConfig& cfg) {
  if (!reachable(arm.arm_id, target, cfg)) {
    throw HarvestError(ErrorCode::Unreachable,
                       "target outside the box of arm " + std::to_string(arm.arm_id));
  }
  return travel_time(arm.position, target, cfg) + cfg.t_grasp;
}

double rp_duration(int arm_id, const Vec3& from, const WorkspaceConfig& cfg) {
  check_arm(arm_id);
  return travel_time(from, cfg.drop_points[arm_id - 1], cfg) + cfg.t_place;
}

bool separation_ok(const Vec3& a, const Vec3& b, const WorkspaceConfig& cfg) {
  double d2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double d = a[k] - b[k];
    d2 += d * d;
  }
  return d2 >= cfg.d_min * cfg.d_min;
}

const char* to_string(Zone z) {
  switch (z) {
    case Zone::E1: return "E1";
    case Zone::E2: return "E2";
    case Zone::E3: return "E3";
    case Zone::E4: return "E4";
    case Zone::OU: return "OU";
    case Zone::OD: return "OD";
    case Zone::OL: return "OL";
    case Zone::OR: return "OR";
    case Zone::OC: return "OC";
    case Zone::Other: return "Other";
    case Zone::Outside: return "Outside";
  }
  return "Unknown";
}

unsigned reach_mask(const Vec3& point, const WorkspaceConfig& cfg) {
  unsigned mask = 0;
  for (int m = 0; m < kArmCount; ++m) {
    if (cfg.arm_boxes[m].contains(point)) mask |= 1u << m;
  }
  return mask;
}

Zone zone_of_mask(unsigned mask) {
  switch (mask) {
    case 0b0000: return Zone::Outside;
    case 0b0001: return Zone::E1;
    case 0b0010: return Zone::E2;
    case 0b0100: return Zone::E3;
    case 0b1000: return Zone::E4;
    case 0b0011: return Zone::OU;
    case 0b1100: return Zone::OD;
    case 0b1001: return Zone::OL;
    case 0b0110: return Zone::OR;
    case 0b1111: return Zone::OC;
    default: return Zone::Other;
  }
}

Zone zone_of(const Vec3& point, const WorkspaceConfig& cfg) {
  return zone_of_mask(reach_mask(point, cfg));
}

std::vector<ZoneCell> zone_cells(const WorkspaceConfig& cfg) {
  std::array<std::vector<double>, 3> cuts;
  for (int k = 0; k < 3; ++k) {
    for (const auto& b : cfg.arm_boxes) {
      cuts[k].push_back(b.lo[k]);
      cuts[k].push_back(b.hi[k]);
    }
    std::sort(cuts[k].begin(), cuts[k].end());
    cuts[k].erase(std::unique(cuts[k].begin(), cuts[k].end()), cuts[k].end());
  }
  std::vector<ZoneCell> cells;
  for (std::size_t i = 0; i + 1 < cuts[0].size(); ++i) {
    for (std::size_t j = 0; j + 1 < cuts[1].size(); ++j) {
      for (std::size_t k = 0; k + 1 < cuts[2].size(); ++k) {
        Box box{{cuts[0][i], cuts[1][j], cuts[2][k]}, {cuts[0][i + 1], cuts[1][j + 1], cuts[2][k + 1]}};
        // Interior point decides membership; faces are shared with neighbours.
        const unsigned mask = reach_mask(box.center(), cfg);
        if (mask == 0) continue;
        cells.push_back({zone_of_mask(mask), mask, box});
      }
    }
  }
  return cells;
}

}  // namespace harvest
