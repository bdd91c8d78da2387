#include "harvest/io.hpp"

#include <cmath>
#include <fstream>

namespace harvest {

namespace {

double round6(double v) { return std::round(v * 1e6) / 1e6; }

Json vec_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

Vec3 vec_from(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw HarvestError(ErrorCode::Io, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json matrix_json(const std::vector<ArmRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) out.push_back(Json::array({r[0], r[1], r[2], r[3]}));
  return out;
}

std::vector<ArmRow> matrix_from(const Json& j) {
  std::vector<ArmRow> out;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != kArmCount) throw HarvestError(ErrorCode::Io, "matrix row must have 4 entries");
    ArmRow r{};
    for (int m = 0; m < kArmCount; ++m) {
      const int v = row[m].get<int>();
      if (v < 0 || v > 255) throw HarvestError(ErrorCode::Io, "matrix entry out of range");
      r[m] = static_cast<std::uint8_t>(v);
    }
    out.push_back(r);
  }
  return out;
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw HarvestError(ErrorCode::Io, std::string(what) + ": " + e.what());
  }
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Json layout_to_json(const FruitLayout& layout) {
  Json pos = Json::array();
  for (const auto& p : layout.positions) pos.push_back(Json::array({round6(p[0]), round6(p[1]), round6(p[2])}));
  return Json{{"id", layout.id}, {"positions", pos}, {"required_attempts", layout.required_attempts}};
}

FruitLayout layout_from_json(const Json& j) {
  return guarded("layout", [&] {
    FruitLayout layout;
    layout.id = j.value("id", std::string("layout"));
    for (const auto& p : j.at("positions")) layout.positions.push_back(vec_from(p));
    if (j.contains("required_attempts")) {
      layout.required_attempts = j.at("required_attempts").get<std::vector<int>>();
    } else {
      layout.required_attempts.assign(layout.positions.size(), 1);
    }
    validate_layout(layout);
    return layout;
  });
}

Json workspace_to_json(const WorkspaceConfig& cfg) {
  Json boxes = Json::array();
  for (const auto& b : cfg.arm_boxes) boxes.push_back({{"min", vec_json(b.lo)}, {"max", vec_json(b.hi)}});
  Json drops = Json::array();
  for (const auto& d : cfg.drop_points) drops.push_back(vec_json(d));
  return Json{{"arm_boxes", boxes},        {"drop_points", drops},   {"axis_speeds", vec_json(cfg.axis_speeds)},
              {"t_grasp", cfg.t_grasp},    {"t_place", cfg.t_place}, {"d_min", cfg.d_min}};
}

WorkspaceConfig workspace_from_json(const Json& j) {
  return guarded("workspace", [&] {
    WorkspaceConfig cfg = WorkspaceConfig::defaults();
    if (j.contains("arm_boxes")) {
      const auto& boxes = j.at("arm_boxes");
      if (boxes.size() != kArmCount) throw HarvestError(ErrorCode::InvalidConfig, "need 4 arm boxes");
      for (int m = 0; m < kArmCount; ++m) {
        cfg.arm_boxes[m] = Box{vec_from(boxes[m].at("min")), vec_from(boxes[m].at("max"))};
      }
    }
    if (j.contains("drop_points")) {
      const auto& drops = j.at("drop_points");
      if (drops.size() != kArmCount) throw HarvestError(ErrorCode::InvalidConfig, "need 4 drop points");
      for (int m = 0; m < kArmCount; ++m) cfg.drop_points[m] = vec_from(drops[m]);
    }
    if (j.contains("axis_speeds")) cfg.axis_speeds = vec_from(j.at("axis_speeds"));
    read_opt(j, "t_grasp", cfg.t_grasp);
    read_opt(j, "t_place", cfg.t_place);
    read_opt(j, "d_min", cfg.d_min);
    validate_workspace(cfg);
    return cfg;
  });
}

Json env_config_to_json(const EnvConfig& cfg) {
  return Json{{"alpha", cfg.alpha},
              {"r_explore", cfg.r_explore},
              {"r_conflict", cfg.r_conflict},
              {"r_timeout", cfg.r_timeout},
              {"r_complete", cfg.r_complete},
              {"k_max", cfg.k_max},
              {"max_attempts", cfg.max_attempts},
              {"gamma", cfg.gamma},
              {"n_max", cfg.n_max},
              {"t_norm", cfg.t_norm},
              {"conflict_rule", cfg.conflict_rule == ConflictRule::Distance ? "distance" : "zone"}};
}

EnvConfig env_config_from_json(const Json& j) {
  return guarded("env config", [&] {
    EnvConfig cfg;
    read_opt(j, "alpha", cfg.alpha);
    read_opt(j, "r_explore", cfg.r_explore);
    read_opt(j, "r_conflict", cfg.r_conflict);
    read_opt(j, "r_timeout", cfg.r_timeout);
    read_opt(j, "r_complete", cfg.r_complete);
    read_opt(j, "k_max", cfg.k_max);
    read_opt(j, "max_attempts", cfg.max_attempts);
    read_opt(j, "gamma", cfg.gamma);
    read_opt(j, "n_max", cfg.n_max);
    read_opt(j, "t_norm", cfg.t_norm);
    if (j.contains("conflict_rule")) {
      const auto rule = j.at("conflict_rule").get<std::string>();
      if (rule == "distance") cfg.conflict_rule = ConflictRule::Distance;
      else if (rule == "zone") cfg.conflict_rule = ConflictRule::Zone;
      else throw HarvestError(ErrorCode::InvalidConfig, "conflict_rule must be distance or zone");
    }
    validate_env_config(cfg);
    return cfg;
  });
}

Json layout_spec_to_json(const LayoutSpec& spec) {
  return Json{{"id", spec.id},
              {"n_fruits", spec.n_fruits},
              {"distribution", to_string(spec.distribution)},
              {"cluster_count", spec.cluster_count},
              {"cluster_std", spec.cluster_std},
              {"failure_profile", {{"n_double", spec.failure_profile.n_double}, {"n_triple", spec.failure_profile.n_triple}}},
              {"seed", spec.seed}};
}

LayoutSpec layout_spec_from_json(const Json& j) {
  return guarded("layout spec", [&] {
    LayoutSpec spec;
    read_opt(j, "id", spec.id);
    read_opt(j, "n_fruits", spec.n_fruits);
    if (j.contains("distribution")) spec.distribution = distribution_from_string(j.at("distribution").get<std::string>());
    read_opt(j, "cluster_count", spec.cluster_count);
    read_opt(j, "cluster_std", spec.cluster_std);
    if (j.contains("failure_profile")) {
      const auto& fp = j.at("failure_profile");
      read_opt(fp, "n_double", spec.failure_profile.n_double);
      read_opt(fp, "n_triple", spec.failure_profile.n_triple);
    }
    read_opt(j, "seed", spec.seed);
    validate_layout_spec(spec);
    return spec;
  });
}

Json state_to_json(const SystemState& s) {
  Json layout = Json::object();
  if (s.layout) {
    Json pos = Json::array();
    for (const auto& p : s.layout->positions) pos.push_back(vec_json(p));
    layout = Json{{"id", s.layout->id}, {"positions", pos}, {"required_attempts", s.layout->required_attempts}};
  }
  Json arms = Json::array();
  for (const auto& a : s.arms) {
    arms.push_back({{"arm_id", a.arm_id},
                    {"position", vec_json(a.position)},
                    {"phase", to_string(a.phase)},
                    {"busy_until", a.busy_until},
                    {"target", a.target + 1}});
  }
  return Json{{"layout", layout},
              {"arms", arms},
              {"allocation", matrix_json(s.allocation)},
              {"attempts", matrix_json(s.attempts)},
              {"picked", matrix_json(s.picked)},
              {"agent_clock", {s.agent_clock[0], s.agent_clock[1]}},
              {"step_index", s.step_index}};
}

SystemState state_from_json(const Json& j) {
  return guarded("state", [&] {
    SystemState s;
    auto layout = std::make_shared<FruitLayout>();
    const auto& lj = j.at("layout");
    layout->id = lj.at("id").get<std::string>();
    for (const auto& p : lj.at("positions")) layout->positions.push_back(vec_from(p));
    layout->required_attempts = lj.at("required_attempts").get<std::vector<int>>();
    s.layout = std::move(layout);
    const auto& arms = j.at("arms");
    if (arms.size() != kArmCount) throw HarvestError(ErrorCode::Io, "state needs 4 arms");
    for (int m = 0; m < kArmCount; ++m) {
      auto& a = s.arms[m];
      a.arm_id = arms[m].at("arm_id").get<int>();
      a.position = vec_from(arms[m].at("position"));
      const auto phase = arms[m].at("phase").get<std::string>();
      if (phase != "AEG" && phase != "RP") throw HarvestError(ErrorCode::Io, "phase must be AEG or RP");
      a.phase = phase == "AEG" ? Phase::AEG : Phase::RP;
      a.busy_until = arms[m].at("busy_until").get<double>();
      a.target = arms[m].at("target").get<int>() - 1;
    }
    s.allocation = matrix_from(j.at("allocation"));
    s.attempts = matrix_from(j.at("attempts"));
    s.picked = matrix_from(j.at("picked"));
    s.agent_clock = {j.at("agent_clock")[0].get<double>(), j.at("agent_clock")[1].get<double>()};
    s.step_index = j.at("step_index").get<int>();
    return s;
  });
}

Json action_to_json(const GroupAction& a) {
  return Json{{"target", a.target_label()}, {"b_left", a.b_left()}, {"b_right", a.b_right()}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw HarvestError(ErrorCode::Io, "cannot open " + path.string());
  return guarded(path.string().c_str(), [&] { return Json::parse(in); });
}

void write_json_file(const std::filesystem::path& path, const Json& j, int indent) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw HarvestError(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(indent) << '\n';
}

FruitLayout read_layout_file(const std::filesystem::path& path) { return layout_from_json(read_json_file(path)); }

void write_layout_file(const std::filesystem::path& path, const FruitLayout& layout) {
  write_json_file(path, layout_to_json(layout));
}

WorkspaceConfig read_workspace_file(const std::filesystem::path& path) {
  return workspace_from_json(read_json_file(path));
}

EnvConfig read_env_config_file(const std::filesystem::path& path) {
  return env_config_from_json(read_json_file(path));
}

}  // namespace harvest
