#include "harvest/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>

#include "harvest/ppo.hpp"

namespace harvest {

PlannerSpec PlannerSpec::parse(const std::string& text) {
  PlannerSpec s;
  if (text == "random" || text == "greedy" || text == "static") {
    s.kind = text;
    return s;
  }
  if (text.rfind("ppo:", 0) == 0 && text.size() > 4) {
    s.kind = "ppo";
    s.checkpoint = text.substr(4);
    return s;
  }
  throw HarvestError(ErrorCode::InvalidConfig,
                     "unknown planner '" + text + "' (random, greedy, static, ppo:<checkpoint>)");
}

PlannerFactory::PlannerFactory(const PlannerSpec& spec, const EnvConfig& env, const WorkspaceConfig& ws)
    : spec_(spec), env_(env), ws_(ws) {
  if (spec.kind == "ppo") {
    if (!std::filesystem::exists(spec.checkpoint)) {
      throw HarvestError(ErrorCode::Io, "checkpoint not found: " + spec.checkpoint.string());
    }
    policy_ = std::make_shared<const PolicyNet>(load_checkpoint(spec.checkpoint).net);
  }
}

std::unique_ptr<Planner> PlannerFactory::make() const {
  if (spec_.kind == "random") return std::make_unique<RandomPlanner>();
  if (spec_.kind == "greedy") return std::make_unique<GreedyPlanner>(ws_);
  if (spec_.kind == "static") return std::make_unique<StaticListPlanner>(ws_);
  return std::make_unique<PpoPlanner>(*policy_, env_, ws_, true);
}

std::uint64_t episode_seed(std::uint64_t base, std::size_t layout_index, int rep) {
  return Rng(base).split(static_cast<std::uint64_t>(layout_index) * 1'000'003ULL + static_cast<std::uint64_t>(rep)).next();
}

const char* const kResultsHeader =
    "planner,layout,rep,seed,makespan_s,idle_arm1_s,idle_arm2_s,idle_arm3_s,idle_arm4_s,"
    "conflicts,remaining,abandoned,picked,planning_latency_mean_ms";

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Json group_action_json(const GroupAction& a) { return action_to_json(a); }

}  // namespace

std::string csv_row(const ResultRow& r) {
  const auto& m = r.metrics;
  std::ostringstream os;
  os << r.planner << ',' << r.layout << ',' << r.rep << ',' << r.seed << ',' << fixed(m.makespan, 6);
  for (double idle : m.idle_per_arm) os << ',' << fixed(idle, 6);
  os << ',' << m.conflicts << ',' << m.remaining << ',' << m.abandoned << ',' << m.picked_total << ','
     << fixed(m.planning_latency_mean * 1e3, 6);
  return os.str();
}

Json trajectory_json(const ResultRow& r, const EpisodeResult& e) {
  Json steps = Json::array();
  for (const auto& t : e.trajectory) {
    steps.push_back({{"k", t.k},
                     {"actions", {{"U", group_action_json(t.actions.up)}, {"D", group_action_json(t.actions.down)}}},
                     {"transitions", {to_string(t.transition_kinds[0]), to_string(t.transition_kinds[1])}},
                     {"time_deltas", {t.time_deltas[0], t.time_deltas[1]}},
                     {"rewards", {t.rewards[0], t.rewards[1]}},
                     {"clocks", {t.clocks[0], t.clocks[1]}},
                     {"picked", t.picked_count}});
  }
  const auto& m = r.metrics;
  return Json{{"planner", r.planner},
              {"layout", r.layout},
              {"rep", r.rep},
              {"seed", r.seed},
              {"makespan_s", m.makespan},
              {"idle_s", m.idle_per_arm},
              {"conflicts", m.conflicts},
              {"remaining", m.remaining},
              {"abandoned", m.abandoned},
              {"picked", m.picked_total},
              {"done_reason", to_string(r.reason)},
              {"steps", steps}};
}

std::vector<ResultRow> run_grid(const GridConfig& grid, std::ostream* csv, std::ostream* trajectories) {
  if (grid.reps < 1) throw HarvestError(ErrorCode::InvalidConfig, "reps must be positive");
  std::vector<PlannerFactory> factories;
  for (const auto& p : grid.planners) factories.emplace_back(p, grid.env, grid.ws);

  const std::size_t n_layouts = grid.layouts.size();
  const std::size_t reps = static_cast<std::size_t>(grid.reps);
  const std::size_t total = factories.size() * n_layouts * reps;
  std::vector<std::optional<ResultRow>> rows(total);
  std::vector<std::string> traj_lines(total);
  std::size_t next_out = 0;
  std::mutex writer;
  if (csv) *csv << kResultsHeader << '\n' << std::flush;

  std::optional<HarvestError> failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t task = 0; task < static_cast<std::ptrdiff_t>(total); ++task) {
    const std::size_t t = static_cast<std::size_t>(task);
    const std::size_t p = t / (n_layouts * reps);
    const std::size_t l = (t / reps) % n_layouts;
    const int rep = static_cast<int>(t % reps) + 1;
    try {
      ResultRow row;
      row.planner = factories[p].spec().label();
      row.layout = grid.layouts[l].name;
      row.rep = rep;
      row.seed = episode_seed(grid.seed, l, rep);
      auto planner = factories[p].make();
      const EpisodeResult e = run_episode(grid.layouts[l].layout, *planner, grid.env, grid.ws, row.seed,
                                          trajectories != nullptr);
      row.metrics = e.metrics;
      row.reason = e.reason;
      std::string line = trajectories ? trajectory_json(row, e).dump() : std::string();

      std::lock_guard lock(writer);
      rows[t] = std::move(row);
      traj_lines[t] = std::move(line);
      // Flush the contiguous finished prefix.
      while (next_out < total && rows[next_out]) {
        if (csv) *csv << csv_row(*rows[next_out]) << '\n' << std::flush;
        if (trajectories) *trajectories << traj_lines[next_out] << '\n' << std::flush;
        traj_lines[next_out].clear();
        ++next_out;
      }
    } catch (const HarvestError& e) {
      std::lock_guard lock(writer);
      if (!failure) failure = e;
    }
  }
  if (failure) throw *failure;

  std::vector<ResultRow> out;
  out.reserve(total);
  for (auto& r : rows) out.push_back(std::move(*r));
  return out;
}

// ---------------------------------------------------------------------------
// Report

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace

Summary summarize_results(std::istream& in) {
  Summary summary;
  struct Acc {
    std::vector<double> makespans;
    double latency = 0.0;
    double conflicts = 0.0;
    std::vector<int> remaining;
  };
  std::map<std::pair<std::string, std::string>, Acc> groups;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("planner,", 0) == 0) continue;
    }
    const auto cells = split_csv(line);
    double makespan = 0, latency = 0, conflicts = 0, remaining = 0;
    if (cells.size() != 14 || cells[0].empty() || cells[1].empty() || !parse_double(cells[4], makespan) ||
        !parse_double(cells[9], conflicts) || !parse_double(cells[10], remaining) ||
        !parse_double(cells[13], latency)) {
      ++summary.skipped_rows;
      continue;
    }
    auto& acc = groups[{cells[0], cells[1]}];
    acc.makespans.push_back(makespan);
    acc.latency += latency;
    acc.conflicts += conflicts;
    acc.remaining.push_back(static_cast<int>(remaining));
  }
  for (const auto& [key, acc] : groups) {
    SummaryBlock b;
    b.planner = key.first;
    b.layout = key.second;
    b.count = static_cast<int>(acc.makespans.size());
    double sum = 0.0;
    for (double m : acc.makespans) sum += m;
    b.mean_makespan = sum / b.count;
    b.max_makespan = *std::max_element(acc.makespans.begin(), acc.makespans.end());
    b.min_makespan = *std::min_element(acc.makespans.begin(), acc.makespans.end());
    b.mean_latency_ms = acc.latency / b.count;
    b.mean_conflicts = acc.conflicts / b.count;
    b.remaining = acc.remaining;
    summary.blocks.push_back(std::move(b));
  }
  return summary;
}

std::string format_summary(const Summary& s) {
  std::ostringstream os;
  char buf[256];
  std::string current;
  for (const auto& b : s.blocks) {
    if (b.planner != current) {
      current = b.planner;
      os << "== " << current << " ==\n";
      std::snprintf(buf, sizeof buf, "%-12s %4s %10s %10s %10s %12s %9s  %s\n", "layout", "reps", "mean_s",
                    "max_s", "min_s", "latency_ms", "conflicts", "remaining");
      os << buf;
    }
    std::string remaining;
    for (int r : b.remaining) remaining += (remaining.empty() ? "" : " ") + std::to_string(r);
    std::snprintf(buf, sizeof buf, "%-12s %4d %10.3f %10.3f %10.3f %12.4f %9.2f  %s\n", b.layout.c_str(), b.count,
                  b.mean_makespan, b.max_makespan, b.min_makespan, b.mean_latency_ms, b.mean_conflicts,
                  remaining.c_str());
    os << buf;
  }
  if (s.skipped_rows > 0) os << "skipped " << s.skipped_rows << " malformed row(s)\n";
  return os.str();
}

Json summary_json(const Summary& s) {
  Json blocks = Json::array();
  for (const auto& b : s.blocks) {
    blocks.push_back({{"planner", b.planner},
                      {"layout", b.layout},
                      {"reps", b.count},
                      {"mean_makespan_s", b.mean_makespan},
                      {"max_makespan_s", b.max_makespan},
                      {"min_makespan_s", b.min_makespan},
                      {"mean_planning_latency_ms", b.mean_latency_ms},
                      {"mean_conflicts", b.mean_conflicts},
                      {"remaining", b.remaining}});
  }
  return Json{{"blocks", blocks}, {"skipped_rows", s.skipped_rows}};
}

}  // namespace harvest
