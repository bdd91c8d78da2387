// harvest: layout generation, planner grids, reports, exact optima and
// policy training from the command line.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "harvest/experiment.hpp"
#include "harvest/oracle.hpp"
#include "harvest/ppo.hpp"

namespace fs = std::filesystem;
using namespace harvest;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;

struct MissingArtifact : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw MissingArtifact(std::string(what) + " not found: " + path);
}

WorkspaceConfig load_workspace(const std::string& path) {
  if (path.empty()) return WorkspaceConfig::defaults();
  require_file(path, "workspace file");
  return read_workspace_file(path);
}

EnvConfig load_env(const std::string& path) {
  if (path.empty()) return EnvConfig{};
  require_file(path, "env config");
  return read_env_config_file(path);
}

std::string layout_name(const fs::path& p, const FruitLayout& layout) {
  return layout.id.empty() || layout.id == "layout" ? p.stem().string() : layout.id;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task planning for a four-arm harvesting robot"};
  app.require_subcommand(1);

  std::string workspace_path, env_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--workspace", workspace_path, "workspace JSON (defaults built in)");
    sub->add_option("--env-config", env_path, "environment JSON (defaults built in)");
  };

  // generate
  auto* gen = app.add_subcommand("generate", "sample a fruit layout from a layout spec");
  std::string spec_path, preset, gen_out;
  bool preset_failures = false;
  std::uint64_t preset_seed = 1;
  auto* spec_opt = gen->add_option("--spec", spec_path, "layout spec JSON");
  gen->add_option("--preset", preset, "experiment group instead of a spec: 30-A, 30-B, 60-A, 60-B")
      ->excludes(spec_opt);
  gen->add_flag("--failures", preset_failures, "with --preset: use the group's attempt profile");
  gen->add_option("--seed", preset_seed, "with --preset: layout seed");
  gen->add_option("--out", gen_out, "output layout JSON")->required();
  add_common(gen);

  // run
  auto* run = app.add_subcommand("run", "run planner x layout x repetition grid");
  std::vector<std::string> planners, layouts;
  int reps = 5;
  std::uint64_t seed = 1;
  std::string run_out;
  run->add_option("--planner", planners, "random | greedy | static | ppo:<checkpoint>; repeatable")
      ->required()
      ->delimiter(',');
  run->add_option("--layout", layouts, "layout JSON; repeatable")->required()->delimiter(',');
  run->add_option("--reps", reps, "repetitions per planner and layout")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "base seed");
  run->add_option("--out", run_out, "output directory for results.csv and trajectories.jsonl")->required();
  add_common(run);

  // report
  auto* rep = app.add_subcommand("report", "summarise a results.csv");
  std::string results_path, summary_out;
  rep->add_option("--results", results_path, "results.csv")->required();
  rep->add_option("--out", summary_out, "summary JSON (default: next to the results)");

  // oracle
  auto* orc = app.add_subcommand("oracle", "exact minimum makespan for a layout of up to 6 fruits");
  std::string oracle_layout;
  bool with_failures = false;
  std::size_t budget = OracleOptions{}.node_budget;
  orc->add_option("--layout", oracle_layout, "layout JSON")->required();
  orc->add_flag("--with-failures", with_failures, "allow fruits that need repeated attempts");
  orc->add_option("--budget", budget, "maximum expanded nodes");
  add_common(orc);

  // train
  auto* trn = app.add_subcommand("train", "train the centralised policy");
  std::string train_config_path, train_out;
  trn->add_option("--config", train_config_path, "training JSON (defaults built in when omitted)");
  trn->add_option("--out", train_out, "checkpoint directory")->required();
  add_common(trn);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) {
      const WorkspaceConfig ws = load_workspace(workspace_path);
      LayoutSpec spec;
      if (!preset.empty()) {
        spec = experiment_preset(preset, preset_failures, preset_seed);
      } else if (!spec_path.empty()) {
        require_file(spec_path, "layout spec");
        spec = layout_spec_from_json(read_json_file(spec_path));
      } else {
        throw HarvestError(ErrorCode::InvalidConfig, "generate needs --spec or --preset");
      }
      const FruitLayout layout = generate_layout(spec, ws);
      write_layout_file(gen_out, layout);
      const auto h = attempt_histogram(layout);
      std::cout << "wrote " << gen_out << ": " << layout.size() << " fruits (" << h[1] << " single, " << h[2]
                << " double, " << h[3] << " triple)\n";
    } else if (*run) {
      GridConfig grid;
      grid.ws = load_workspace(workspace_path);
      grid.env = load_env(env_path);
      grid.reps = reps;
      grid.seed = seed;
      for (const auto& p : planners) {
        grid.planners.push_back(PlannerSpec::parse(p));
        if (grid.planners.back().kind == "ppo") require_file(grid.planners.back().checkpoint.string(), "checkpoint");
      }
      for (const auto& path : layouts) {
        require_file(path, "layout");
        auto layout = std::make_shared<const FruitLayout>(read_layout_file(path));
        grid.layouts.push_back({layout_name(path, *layout), layout});
      }
      fs::create_directories(run_out);
      std::ofstream csv(fs::path(run_out) / "results.csv");
      std::ofstream traj(fs::path(run_out) / "trajectories.jsonl");
      if (!csv || !traj) throw HarvestError(ErrorCode::Io, "cannot write into " + run_out);
      const auto rows = run_grid(grid, &csv, &traj);
      std::cout << "wrote " << rows.size() << " rows to " << (fs::path(run_out) / "results.csv").string() << '\n';
    } else if (*rep) {
      require_file(results_path, "results file");
      std::ifstream in(results_path);
      const Summary summary = summarize_results(in);
      std::cout << format_summary(summary);
      if (summary.blocks.empty()) std::cerr << "warning: no result rows in " << results_path << '\n';
      if (summary.skipped_rows > 0) std::cerr << "warning: skipped " << summary.skipped_rows << " malformed row(s)\n";
      const fs::path out = summary_out.empty() ? fs::path(results_path).replace_filename("summary.json") : fs::path(summary_out);
      write_json_file(out, summary_json(summary));
    } else if (*orc) {
      const WorkspaceConfig ws = load_workspace(workspace_path);
      const EnvConfig env = load_env(env_path);
      require_file(oracle_layout, "layout");
      OracleOptions opt;
      opt.with_failures = with_failures;
      opt.node_budget = budget;
      const OracleResult r = optimal_makespan(read_layout_file(oracle_layout), ws, env, opt);
      Json seq = Json::array();
      for (const auto& a : r.witness) seq.push_back({{"U", action_to_json(a.up)}, {"D", action_to_json(a.down)}});
      std::cout << Json{{"makespan_s", r.makespan}, {"expanded", r.expanded}, {"sequence", seq}}.dump(2) << '\n';
    } else if (*trn) {
      const WorkspaceConfig ws = load_workspace(workspace_path);
      const EnvConfig env = load_env(env_path);
      TrainConfig cfg;
      if (!train_config_path.empty()) {
        require_file(train_config_path, "training config");
        cfg = train_config_from_json(read_json_file(train_config_path));
      }
      fs::create_directories(train_out);
      std::ofstream log(fs::path(train_out) / "train_log.jsonl");
      std::size_t seen = 0;
      const auto result = train(cfg, env, ws, fs::path(train_out), [&](const UpdateLog& u, const std::vector<EpisodeLog>& eps) {
        double ret = 0.0, makespan = 0.0;
        const std::size_t fresh = eps.size() - seen;
        for (std::size_t i = seen; i < eps.size(); ++i) {
          ret += eps[i].episode_return;
          makespan += eps[i].makespan;
        }
        seen = eps.size();
        Json j{{"steps", u.steps}, {"stage", u.stage}, {"episodes", fresh},
               {"mean_return", fresh ? ret / fresh : 0.0}, {"mean_makespan_s", fresh ? makespan / fresh : 0.0},
               {"loss", u.loss.total}, {"entropy", u.loss.entropy}, {"approx_kl", u.loss.approx_kl}};
        log << j.dump() << '\n' << std::flush;
        std::cout << "step " << u.steps << "/" << cfg.total_steps() << " stage " << u.stage << " return "
                  << j["mean_return"].get<double>() << '\n';
      });
      std::cout << "final checkpoint " << result.checkpoints.back().string() << " (held-out makespan "
                << result.final.eval_makespan << " s, completion " << result.final.eval_completion << ")\n";
    }
  } catch (const MissingArtifact& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissing;
  } catch (const HarvestError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
