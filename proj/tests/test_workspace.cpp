#include "doctest.h"

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "harvest/rng.hpp"
#include "harvest/workspace.hpp"

using namespace harvest;

namespace {

Vec3 zone_center(const WorkspaceConfig& ws, Zone z) {
  for (const auto& c : zone_cells(ws)) {
    if (c.zone == z) return c.box.center();
  }
  FAIL("zone missing");
  return {};
}

}  // namespace

TEST_CASE("reachable follows the arm boxes") {
  const auto ws = WorkspaceConfig::defaults();
  const Vec3 e1 = zone_center(ws, Zone::E1);
  CHECK(reachable(1, e1, ws));
  CHECK_FALSE(reachable(3, e1, ws));
  CHECK_FALSE(reachable(2, e1, ws));

  // Shared face of boxes 1 and 2: closed intervals put it in both.
  const Vec3 face{ws.arm_boxes[1].lo[0], ws.arm_boxes[0].center()[1], ws.arm_boxes[0].center()[2]};
  CHECK(reachable(1, face, ws));
  CHECK(reachable(2, face, ws));
  const Vec3 edge{ws.arm_boxes[0].hi[0], ws.arm_boxes[0].hi[1], ws.arm_boxes[0].hi[2]};
  CHECK(reachable(1, edge, ws));
  CHECK(reachable(2, edge, ws));

  CHECK_THROWS_AS(reachable(0, e1, ws), HarvestError);
  try {
    reachable(5, e1, ws);
    FAIL("expected throw");
  } catch (const HarvestError& e) {
    CHECK(e.code() == ErrorCode::InvalidArm);
  }
}

TEST_CASE("zones derived from the boxes") {
  const auto ws = WorkspaceConfig::defaults();
  std::set<Zone> seen;
  for (const auto& cell : zone_cells(ws)) {
    seen.insert(cell.zone);
    int covering = 0;
    for (int m = 1; m <= kArmCount; ++m) covering += reachable(m, cell.box.center(), ws) ? 1 : 0;
    switch (cell.zone) {
      case Zone::E1:
      case Zone::E2:
      case Zone::E3:
      case Zone::E4: CHECK(covering == 1); break;
      default: CHECK(covering >= 2);
    }
  }
  for (Zone z : {Zone::E1, Zone::E2, Zone::E3, Zone::E4, Zone::OU, Zone::OD, Zone::OL, Zone::OR, Zone::OC}) {
    CHECK_MESSAGE(seen.count(z) == 1, to_string(z));
  }
  CHECK(zone_of(harvest::testing::in_e1(), ws) == Zone::E1);
  CHECK(zone_of(harvest::testing::in_e3(), ws) == Zone::E3);
  CHECK(zone_of({0.85, 0.6, 0.65}, ws) == Zone::OC);
  CHECK(zone_of({5, 5, 5}, ws) == Zone::Outside);
  // Cross-group boxes only meet inside common zones.
  CHECK(zone_of({0.3, 0.6, 0.65}, ws) == Zone::OL);
  CHECK(zone_of({1.4, 0.6, 0.65}, ws) == Zone::OR);
}

TEST_CASE("workspace validation") {
  auto ws = WorkspaceConfig::defaults();
  CHECK_NOTHROW(validate_workspace(ws));
  ws.axis_speeds[1] = 0.0;
  CHECK_THROWS_AS(validate_workspace(ws), HarvestError);
  ws = WorkspaceConfig::defaults();
  ws.d_min = 0.0;
  CHECK_THROWS_AS(validate_workspace(ws), HarvestError);
  ws = WorkspaceConfig::defaults();
  ws.drop_points[2] = {0.1, 0.0, 1.2};
  CHECK_THROWS_AS(validate_workspace(ws), HarvestError);
  ws = WorkspaceConfig::defaults();
  ws.arm_boxes[1].lo[0] = 1.2;  // separate arm 2 from arm 1
  ws.drop_points[1] = ws.arm_boxes[1].center();
  CHECK_THROWS_AS(validate_workspace(ws), HarvestError);
}

TEST_CASE("travel_time examples") {
  auto ws = WorkspaceConfig::defaults();
  CHECK(travel_time({0.2, 0.3, 0.4}, {0.2, 0.3, 0.4}, ws) == 0.0);
  CHECK(travel_time({0, 0, 0}, {0.5, 0.25, 0.1}, ws) == doctest::Approx(1.0).epsilon(1e-15));
  ws.axis_speeds = {0.5, 0.3, 0.4};
  CHECK(travel_time({0, 0, 0}, {0, 0.3, 0}, ws) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("travel_time behaves like a metric") {
  auto ws = WorkspaceConfig::defaults();
  ws.axis_speeds = {0.5, 0.35, 0.8};
  Rng rng(3);
  auto point = [&] { return Vec3{rng.uniform(-1, 2), rng.uniform(-1, 2), rng.uniform(-1, 2)}; };
  for (int i = 0; i < 2000; ++i) {
    const Vec3 a = point(), b = point(), c = point();
    CHECK(travel_time(a, b, ws) == travel_time(b, a, ws));
    CHECK(travel_time(a, b, ws) > 0.0);
    CHECK(travel_time(a, c, ws) <= travel_time(a, b, ws) + travel_time(b, c, ws) + 1e-12);
  }
}

TEST_CASE("phase durations") {
  auto ws = WorkspaceConfig::defaults();
  ArmState at_drop{1, ws.drop_points[0], Phase::RP, 0.0, -1};
  CHECK(aeg_duration(at_drop, ws.drop_points[0], ws) == ws.t_grasp);
  CHECK(rp_duration(1, ws.drop_points[0], ws) == ws.t_place);

  // Arm 4's box spans x in [0, 1], y in [0, 1.2], z in [0, 0.8].
  ArmState origin{4, {0, 0, 0}, Phase::RP, 0.0, -1};
  CHECK(aeg_duration(origin, {0.5, 0, 0}, ws) == doctest::Approx(2.5).epsilon(1e-15));

  try {
    aeg_duration(at_drop, harvest::testing::in_e3(), ws);
    FAIL("expected throw");
  } catch (const HarvestError& e) {
    CHECK(e.code() == ErrorCode::Unreachable);
  }

  // Monotone along a single axis.
  double last = 0.0;
  for (int i = 0; i <= 20; ++i) {
    const Vec3 target{ws.drop_points[0][0], 0.06 * i, ws.drop_points[0][2]};
    const double t = aeg_duration(at_drop, target, ws);
    CHECK(t >= last);
    last = t;
  }
}

TEST_CASE("default workspace is calibrated to a ~5.8 s harvesting cycle") {
  const auto ws = WorkspaceConfig::defaults();
  double sum = 0.0;
  int count = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto layout = harvest::testing::random_layout(seed, 60, ws);
    for (const auto& p : layout->positions) {
      for (int m = 0; m < kArmCount; ++m) {
        if (!reachable(m + 1, p, ws)) continue;
        const ArmState arm{m + 1, ws.drop_points[m], Phase::RP, 0.0, -1};
        sum += aeg_duration(arm, p, ws) + rp_duration(m + 1, p, ws);
        ++count;
      }
    }
  }
  const double mean = sum / count;
  MESSAGE("mean full cycle " << mean << " s");
  CHECK(std::abs(mean - 5.8) <= 1.5);
}

TEST_CASE("separation boundary is inclusive") {
  auto ws = WorkspaceConfig::defaults();
  CHECK_FALSE(separation_ok({0.4, 0.4, 0.4}, {0.4, 0.4, 0.4}, ws));
  CHECK(separation_ok({0, 0, 0}, {1, 0, 0}, ws));
  CHECK(ws.d_min == 0.3);
  CHECK(separation_ok({0.5, 0.2, 0.9}, {0.5, 0.2 + ws.d_min, 0.9}, ws) ==
        ((0.2 + ws.d_min) - 0.2 >= ws.d_min));
  CHECK(separation_ok({0, 0, 0}, {0, 0, ws.d_min}, ws));
  CHECK(separation_ok({0, 0, 0}, {ws.d_min, 0, 0}, ws));
  CHECK_FALSE(separation_ok({0, 0, 0}, {std::nextafter(ws.d_min, 0.0), 0, 0}, ws));
}
