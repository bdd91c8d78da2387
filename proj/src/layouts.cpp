#include "harvest/layouts.hpp"

#include <cmath>
#include <numeric>

#include "harvest/rng.hpp"

namespace harvest {

const char* to_string(Distribution d) { return d == Distribution::Uniform ? "uniform" : "clustered"; }

Distribution distribution_from_string(const std::string& s) {
  if (s == "uniform" || s == "Uniform" || s == "A") return Distribution::Uniform;
  if (s == "clustered" || s == "Clustered" || s == "B") return Distribution::Clustered;
  throw HarvestError(ErrorCode::InvalidConfig, "unknown distribution '" + s + "'");
}

void validate_layout_spec(const LayoutSpec& spec, std::optional<int> n_max) {
  auto fail = [&](const std::string& m) {
    throw HarvestError(ErrorCode::InvalidConfig, "layout spec '" + spec.id + "': " + m);
  };
  if (spec.n_fruits < 1) fail("n_fruits must be positive");
  if (n_max && spec.n_fruits > *n_max) fail("n_fruits exceeds n_max");
  const auto& fp = spec.failure_profile;
  if (fp.n_double < 0 || fp.n_triple < 0) fail("negative failure counts");
  if (fp.n_double + fp.n_triple > spec.n_fruits) fail("more failing fruits than fruits");
  if (spec.distribution == Distribution::Clustered) {
    if (spec.cluster_count < 1) fail("cluster_count must be positive");
    if (!(spec.cluster_std > 0.0)) fail("cluster_std must be positive");
  }
}

namespace {

constexpr int kMaxDraws = 10'000;

Vec3 round_um(Vec3 p) {
  for (double& c : p) c = std::round(c * 1e6) / 1e6;
  return p;
}

Vec3 uniform_in(const Box& b, Rng& rng) {
  return {rng.uniform(b.lo[0], b.hi[0]), rng.uniform(b.lo[1], b.hi[1]),
          rng.uniform(b.lo[2], b.hi[2])};
}

bool spaced(const Vec3& p, const std::vector<Vec3>& placed) {
  const double min_sq = kMinFruitSpacing * kMinFruitSpacing;
  for (const auto& q : placed) {
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) d2 += (p[k] - q[k]) * (p[k] - q[k]);
    if (d2 < min_sq) return false;
  }
  return true;
}

Vec3 sample_in_union(const Box& extent, const WorkspaceConfig& ws, Rng& rng) {
  for (int i = 0; i < kMaxDraws; ++i) {
    const Vec3 p = round_um(uniform_in(extent, rng));
    if (reachable_by_any(p, ws)) return p;
  }
  throw HarvestError(ErrorCode::GenerationFailed, "arm boxes cover too little of their extent");
}

}  // namespace

FruitLayout generate_layout(const LayoutSpec& spec, const WorkspaceConfig& ws) {
  validate_layout_spec(spec);
  const Rng root(spec.seed);
  Rng pos_rng = root.split(1);
  Rng attempt_rng = root.split(2);
  Rng centre_rng = root.split(3);
  const Box extent = workspace_extent(ws);

  std::vector<Vec3> centres;
  if (spec.distribution == Distribution::Clustered) {
    for (int c = 0; c < spec.cluster_count; ++c) centres.push_back(sample_in_union(extent, ws, centre_rng));
  }

  FruitLayout layout;
  layout.id = spec.id;
  layout.positions.reserve(static_cast<std::size_t>(spec.n_fruits));
  for (int n = 0; n < spec.n_fruits; ++n) {
    bool placed = false;
    for (int draw = 0; draw < kMaxDraws && !placed; ++draw) {
      Vec3 p;
      if (centres.empty()) {
        p = round_um(uniform_in(extent, pos_rng));
      } else {
        const auto& c = centres[pos_rng.below(centres.size())];
        for (int k = 0; k < 3; ++k) p[k] = c[k] + spec.cluster_std * pos_rng.normal();
        p = round_um(p);
      }
      if (reachable_by_any(p, ws) && spaced(p, layout.positions)) {
        layout.positions.push_back(p);
        placed = true;
      }
    }
    if (!placed) {
      throw HarvestError(ErrorCode::GenerationFailed,
                         "could not place fruit " + std::to_string(n + 1) + " of '" + spec.id + "'");
    }
  }

  // Partial Fisher-Yates picks the fruits that need extra attempts.
  std::vector<std::size_t> order(layout.positions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& fp = spec.failure_profile;
  const std::size_t hard = static_cast<std::size_t>(fp.n_double + fp.n_triple);
  for (std::size_t i = 0; i < hard; ++i) {
    const std::size_t j = i + attempt_rng.below(order.size() - i);
    std::swap(order[i], order[j]);
  }
  layout.required_attempts.assign(layout.positions.size(), 1);
  for (std::size_t i = 0; i < hard; ++i) {
    layout.required_attempts[order[i]] = i < static_cast<std::size_t>(fp.n_double) ? 2 : 3;
  }
  validate_layout(layout);
  return layout;
}

LayoutSpec experiment_preset(const std::string& name, bool with_failures, std::uint64_t seed) {
  LayoutSpec spec;
  spec.id = name;
  spec.seed = seed;
  if (name == "30-A") {
    spec.n_fruits = 30;
    spec.failure_profile = {7, 2};
  } else if (name == "30-B") {
    spec.n_fruits = 30;
    spec.distribution = Distribution::Clustered;
    spec.failure_profile = {8, 4};
  } else if (name == "60-A") {
    spec.n_fruits = 60;
    spec.failure_profile = {10, 5};
  } else if (name == "60-B") {
    spec.n_fruits = 60;
    spec.distribution = Distribution::Clustered;
    spec.failure_profile = {12, 3};
  } else {
    throw HarvestError(ErrorCode::InvalidConfig, "unknown preset '" + name + "'");
  }
  if (!with_failures) spec.failure_profile = {};
  return spec;
}

std::array<int, 4> attempt_histogram(const FruitLayout& layout) {
  std::array<int, 4> h{};
  for (int r : layout.required_attempts) {
    if (r >= 1 && r <= 3) ++h[static_cast<std::size_t>(r)];
  }
  return h;
}

}  // namespace harvest
