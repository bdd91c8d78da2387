#pragma once

// Planner x layout x repetition grids and their result files.

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "harvest/io.hpp"
#include "harvest/planners.hpp"

namespace harvest {

class PolicyNet;

/// "random", "greedy", "static" or "ppo:<checkpoint path>".
struct PlannerSpec {
  std::string kind;
  std::filesystem::path checkpoint;  // ppo only

  static PlannerSpec parse(const std::string& text);
  std::string label() const { return kind; }
};

/// Builds a fresh planner. Checkpoints are loaded once and shared.
class PlannerFactory {
 public:
  PlannerFactory(const PlannerSpec& spec, const EnvConfig& env, const WorkspaceConfig& ws);
  std::unique_ptr<Planner> make() const;
  const PlannerSpec& spec() const noexcept { return spec_; }

 private:
  PlannerSpec spec_;
  EnvConfig env_;
  WorkspaceConfig ws_;
  std::shared_ptr<const PolicyNet> policy_;
};

struct NamedLayout {
  std::string name;
  std::shared_ptr<const FruitLayout> layout;
};

struct GridConfig {
  std::vector<PlannerSpec> planners;
  std::vector<NamedLayout> layouts;
  int reps = 5;
  std::uint64_t seed = 1;
  WorkspaceConfig ws = WorkspaceConfig::defaults();
  EnvConfig env;
};

struct ResultRow {
  std::string planner;
  std::string layout;
  int rep = 0;
  std::uint64_t seed = 0;
  EpisodeMetrics metrics;
  DoneReason reason = DoneReason::NotDone;
};

/// Episode seed shared by every planner for the same (layout, rep).
std::uint64_t episode_seed(std::uint64_t base, std::size_t layout_index, int rep);

extern const char* const kResultsHeader;
std::string csv_row(const ResultRow& row);
Json trajectory_json(const ResultRow& row, const EpisodeResult& episode);

/// Runs the grid with episodes spread over OpenMP threads. Rows reach the
/// sinks through one writer, in (planner, layout, rep) order, as soon as
/// every earlier row is done.
std::vector<ResultRow> run_grid(const GridConfig& grid, std::ostream* csv, std::ostream* trajectories);

struct SummaryBlock {
  std::string planner;
  std::string layout;
  int count = 0;
  double mean_makespan = 0.0;
  double max_makespan = 0.0;
  double min_makespan = 0.0;
  double mean_latency_ms = 0.0;
  std::vector<int> remaining;  // per repetition, in file order
  double mean_conflicts = 0.0;
};

struct Summary {
  std::vector<SummaryBlock> blocks;  // sorted by planner, then layout
  int skipped_rows = 0;
};

/// Parses results.csv text; malformed rows are counted and skipped.
Summary summarize_results(std::istream& csv);
std::string format_summary(const Summary& summary);
Json summary_json(const Summary& summary);

}  // namespace harvest
