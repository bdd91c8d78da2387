#pragma once

// Centralised PPO controller: one MLP observes the full state and emits both
// groups' actions through four masked categorical heads plus a value head.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "harvest/env.hpp"
#include "harvest/io.hpp"
#include "harvest/layouts.hpp"
#include "harvest/planners.hpp"
#include "harvest/rng.hpp"

namespace harvest {

/// Logit given to masked entries before the softmax.
inline constexpr double kMaskedLogit = -1e9;

/// tanh MLP with two hidden layers. The output row is the concatenation
/// [target-U | bits-U | target-D | bits-D | value], matching HeadLayout.
class PolicyNet {
 public:
  PolicyNet() = default;
  PolicyNet(std::size_t n_max, std::size_t hidden, std::uint64_t seed);
  /// Free-form sizes, used by the gradient check on toy networks.
  PolicyNet(std::size_t obs_size, std::size_t n_max, std::size_t hidden, std::uint64_t seed);

  std::size_t n_max() const noexcept { return n_max_; }
  std::size_t hidden() const noexcept { return hidden_; }
  std::size_t obs_size() const noexcept { return obs_; }
  std::size_t out_size() const noexcept { return HeadLayout{n_max_}.mask_size() + 1; }
  std::uint64_t seed() const noexcept { return seed_; }
  HeadLayout heads() const noexcept { return HeadLayout{n_max_}; }

  std::vector<double>& params() noexcept { return params_; }
  const std::vector<double>& params() const noexcept { return params_; }

  struct Cache {
    std::size_t batch = 0;
    std::vector<double> input, h1, h2, out;
  };

  void forward(const double* obs, std::size_t batch, Cache& cache) const;
  /// Accumulates d(loss)/d(params) into grad given d(loss)/d(out).
  void backward(Cache& cache, const double* d_out, std::vector<double>& grad) const;

  friend bool operator==(const PolicyNet&, const PolicyNet&) = default;

 private:
  std::size_t offset_w(int layer) const;
  std::size_t offset_b(int layer) const;
  std::array<std::size_t, 2> dims(int layer) const;  // {in, out}

  std::size_t obs_ = 0, n_max_ = 0, hidden_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> params_;
};

/// Log-softmax over n logits with masked entries replaced by kMaskedLogit.
void masked_log_softmax(const double* logits, const std::uint8_t* mask, std::size_t n, double* logp);

/// Head indices in mask order: target-U slot, bits-U, target-D slot, bits-D.
using HeadChoice = std::array<int, 4>;

struct PolicyStep {
  HeadChoice choice{};
  std::vector<std::uint8_t> mask;  // masks as conditioned during sampling
  double log_prob = 0.0;
  double value = 0.0;
  JointAction action;
};

/// Samples (or takes the argmax of) bits-U, target-U, bits-D, target-D in that
/// order; each later head is masked by the earlier choices, and D never gets
/// U's fruit. `logits` is one output row of the network.
PolicyStep select_action(const double* logits, const LegalActions& legal, const HeadLayout& heads,
                         Rng* rng);

/// Sum of per-head log-probs of `choice` under `mask`.
double choice_log_prob(const double* logits, const std::uint8_t* mask, const HeadChoice& choice,
                       const HeadLayout& heads);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// values has one more entry than rewards (the bootstrap value). Throws
/// InvalidConfig on mismatched lengths.
GaeResult gae_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                         const std::vector<std::uint8_t>& dones, double gamma, double lambda);

struct Curriculum {
  int n_fruits = 10;
  long stage1_steps = 50'000;
  long stage2_steps = 50'000;
  long stage3_steps = 100'000;
  int stage2_layouts = 10;
  int stage3_min_fruits = 1;
  /// Stage 3 gives up to a fifth of the fruits a second required attempt.
  bool stage3_failures = true;
};

struct TrainConfig {
  double gamma = 0.95;
  double clip_eps = 0.20;
  double lr = 5e-4;
  double gae_lambda = 0.88;
  int epochs_per_batch = 8;
  int minibatch = 512;
  int rollout_horizon = 2048;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  double adam_eps = 1e-5;
  bool normalize_advantages = true;
  /// Multiplies rewards before advantage and return estimation.
  double reward_scale = 0.1;  // keeps the +-100 terminal rewards from swamping the value loss
  int hidden = 256;
  int n_max = 10;
  long checkpoint_every = 50'000;
  int eval_episodes = 5;
  std::uint64_t seed = 1;
  Curriculum curriculum;

  long total_steps() const noexcept {
    return curriculum.stage1_steps + curriculum.stage2_steps + curriculum.stage3_steps;
  }
};

void validate_train_config(const TrainConfig& cfg);
Json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const Json& j);

/// On-policy samples of one rollout, flattened row-major.
struct Batch {
  std::size_t obs_size = 0;
  std::size_t mask_size = 0;
  std::vector<double> obs;
  std::vector<std::uint8_t> masks;
  std::vector<HeadChoice> choices;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const noexcept { return choices.size(); }
};

struct LossStats {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

/// Clipped-surrogate loss over the rows `idx` of `batch`, averaged. When grad
/// is given it receives d(total)/d(params) (overwritten).
LossStats ppo_loss(const PolicyNet& net, const Batch& batch, const std::vector<std::size_t>& idx,
                   const TrainConfig& cfg, std::vector<double>* grad);

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr, double eps) : lr_(lr), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grad);
  long steps() const noexcept { return t_; }

  Json to_json() const;
  static Adam from_json(const Json& j);

 private:
  double lr_ = 5e-4, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-5;
  long t_ = 0;
  std::vector<double> m_, v_;
};

/// Runs epochs_per_batch passes of shuffled minibatches. Advantages are
/// normalised in place first when enabled. Throws NumericalError on a
/// non-finite loss or weight.
LossStats ppo_update(PolicyNet& net, Adam& opt, Batch& batch, const TrainConfig& cfg, Rng& rng);

struct EpisodeLog {
  long end_step = 0;  // global step count when the episode ended
  int stage = 0;
  double episode_return = 0.0;  // undiscounted, mean of the two groups
  double makespan = 0.0;
  DoneReason reason = DoneReason::NotDone;
};

struct UpdateLog {
  long steps = 0;
  int stage = 0;
  LossStats loss;
};

struct Checkpoint {
  static constexpr int kVersion = 1;
  TrainConfig train;
  EnvConfig env;
  WorkspaceConfig ws = WorkspaceConfig::defaults();
  PolicyNet net;
  Adam adam;
  std::string rng_state;
  long steps = 0;
  /// Greedy-policy results on held-out layouts at save time.
  double eval_makespan = 0.0;
  double eval_completion = 0.0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrainResult {
  Checkpoint final;
  std::vector<EpisodeLog> episodes;
  std::vector<UpdateLog> updates;
  std::vector<std::filesystem::path> checkpoints;
};

struct PolicyEval {
  double mean_makespan = 0.0;  // over completed episodes
  double completion_rate = 0.0;
};

/// Runs the greedy policy once on each layout.
PolicyEval evaluate_policy(const PolicyNet& net, const std::vector<std::shared_ptr<const FruitLayout>>& layouts,
                           const EnvConfig& env, const WorkspaceConfig& ws);

using ProgressFn = std::function<void(const UpdateLog&, const std::vector<EpisodeLog>&)>;

/// Three-stage curriculum: one fixed layout, then a cycle of fixed layouts,
/// then a fresh layout with random fruit count at every reset. Rollouts are
/// collected single-threaded, so a run is reproducible from cfg.seed. With
/// out_dir set, checkpoints land there every checkpoint_every steps and at
/// the end (final.json).
TrainResult train(const TrainConfig& cfg, const EnvConfig& env, const WorkspaceConfig& ws,
                  const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                  const ProgressFn& progress = {});

/// Learned controller behind the planner interface. Greedy mode takes the
/// most likely option of every head.
class PpoPlanner final : public Planner {
 public:
  PpoPlanner(PolicyNet net, EnvConfig env, WorkspaceConfig ws, bool greedy = true);

  std::string name() const override { return "ppo"; }
  void reset(const SystemState& initial, std::uint64_t seed) override;
  JointAction decide(const SystemState& state, const LegalActions& legal) override;

 private:
  PolicyNet net_;
  EnvConfig env_;
  WorkspaceConfig ws_;
  bool greedy_;
  Rng rng_{0};
  PolicyNet::Cache cache_;
};

}  // namespace harvest
