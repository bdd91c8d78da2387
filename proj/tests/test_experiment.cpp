#include "doctest.h"

#include <sstream>

#include "fixtures.hpp"
#include "harvest/experiment.hpp"
#include "harvest/layouts.hpp"

using namespace harvest;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

// Drops the latency column, the only wall-clock field.
std::string without_latency(const std::string& csv) {
  std::string out;
  for (const auto& line : lines_of(csv)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

GridConfig small_grid() {
  const auto ws = WorkspaceConfig::defaults();
  GridConfig g;
  for (const char* p : {"static", "greedy", "random"}) g.planners.push_back(PlannerSpec::parse(p));
  for (const char* name : {"30-A", "30-B"}) {
    g.layouts.push_back({name, std::make_shared<const FruitLayout>(generate_layout(experiment_preset(name, true, 1), ws))});
  }
  g.reps = 5;
  return g;
}

}  // namespace

TEST_CASE("planner specs") {
  CHECK(PlannerSpec::parse("greedy").kind == "greedy");
  const auto p = PlannerSpec::parse("ppo:runs/final.json");
  CHECK(p.kind == "ppo");
  CHECK(p.checkpoint == "runs/final.json");
  CHECK_THROWS_AS(PlannerSpec::parse("ppo:"), HarvestError);
  CHECK_THROWS_AS(PlannerSpec::parse("oracle"), HarvestError);
  try {
    PlannerFactory f(PlannerSpec::parse("ppo:/nonexistent/ckpt.json"), EnvConfig{}, WorkspaceConfig::defaults());
    FAIL("expected a missing checkpoint error");
  } catch (const HarvestError& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}

TEST_CASE("grid runs, orders and reproduces its rows") {
  const GridConfig grid = small_grid();
  std::ostringstream csv, traj;
  const auto rows = run_grid(grid, &csv, &traj);
  REQUIRE(rows.size() == 30);
  const auto csv_lines = lines_of(csv.str());
  const auto traj_lines = lines_of(traj.str());
  REQUIRE(csv_lines.size() == 31);
  REQUIRE(traj_lines.size() == 30);
  CHECK(csv_lines[0] == kResultsHeader);

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    CHECK(r.planner == grid.planners[i / 10].kind);
    CHECK(r.layout == grid.layouts[(i / 5) % 2].name);
    CHECK(r.rep == static_cast<int>(i % 5) + 1);
    CHECK(csv_lines[i + 1] == csv_row(r));
    // Shared fields agree between the two files.
    const Json j = Json::parse(traj_lines[i]);
    CHECK(j["planner"] == r.planner);
    CHECK(j["layout"] == r.layout);
    CHECK(j["rep"] == r.rep);
    CHECK(j["seed"] == r.seed);
    CHECK(j["makespan_s"].get<double>() == r.metrics.makespan);
    CHECK(j["remaining"] == r.metrics.remaining);
    CHECK(j["picked"] == r.metrics.picked_total);
    CHECK(j["steps"].size() == static_cast<std::size_t>(r.metrics.steps));
  }
  // Static leaves every extra-attempt fruit of 30-A (7 + 2); replanning leaves at most one.
  int greedy_left = 0;
  for (const auto& r : rows) {
    if (r.planner == "static" && r.layout == "30-A") CHECK(r.metrics.remaining == 9);
    if (r.planner == "greedy") greedy_left += static_cast<int>(r.metrics.remaining);
  }
  CHECK(greedy_left <= 10);

  std::ostringstream again;
  run_grid(grid, &again, nullptr);
  CHECK(without_latency(again.str()) == without_latency(csv.str()));
}

TEST_CASE("report aggregates per planner and layout") {
  SUBCASE("five repetitions") {
    std::stringstream in;
    in << kResultsHeader << '\n';
    for (int i = 0; i < 5; ++i) {
      in << "greedy,30-A," << i + 1 << ",7," << 10 + i << ",0,0,0,0,1," << i % 2 << ",0,30,0.5\n";
    }
    const auto s = summarize_results(in);
    REQUIRE(s.blocks.size() == 1);
    CHECK(s.blocks[0].mean_makespan == 12.0);
    CHECK(s.blocks[0].max_makespan == 14.0);
    CHECK(s.blocks[0].min_makespan == 10.0);
    CHECK(s.blocks[0].remaining == std::vector<int>{0, 1, 0, 1, 0});
    CHECK(s.skipped_rows == 0);
    CHECK(format_summary(s).find("12.000") != std::string::npos);
  }
  SUBCASE("empty file") {
    std::stringstream in;
    const auto s = summarize_results(in);
    CHECK(s.blocks.empty());
    CHECK(summary_json(s)["blocks"].empty());
  }
  SUBCASE("mixed planners and malformed rows") {
    std::stringstream in;
    in << kResultsHeader << '\n'
       << "static,30-A,1,1,50,0,0,0,0,0,9,0,21,0.1\n"
       << "greedy,30-A,1,1,40,0,0,0,0,0,0,0,30,0.1\n"
       << "greedy,30-A,2,1,not-a-number,0,0,0,0,0,0,0,30,0.1\n"
       << "short,row\n";
    const auto s = summarize_results(in);
    CHECK(s.blocks.size() == 2);
    CHECK(s.blocks[0].planner == "greedy");
    CHECK(s.blocks[1].planner == "static");
    CHECK(s.skipped_rows == 2);
  }
}
