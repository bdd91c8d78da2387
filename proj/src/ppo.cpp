#include "harvest/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "harvest/kernels.hpp"

namespace harvest {

// ---------------------------------------------------------------------------
// Network

PolicyNet::PolicyNet(std::size_t n_max, std::size_t hidden, std::uint64_t seed)
    : PolicyNet(observation_size(n_max), n_max, hidden, seed) {}

PolicyNet::PolicyNet(std::size_t obs_size, std::size_t n_max, std::size_t hidden, std::uint64_t seed)
    : obs_(obs_size), n_max_(n_max), hidden_(hidden), seed_(seed) {
  if (obs_ == 0 || n_max_ == 0 || hidden_ == 0) {
    throw HarvestError(ErrorCode::InvalidConfig, "network sizes must be positive");
  }
  params_.assign(offset_b(2) + out_size(), 0.0);
  Rng rng(seed);
  for (int layer = 0; layer < 3; ++layer) {
    const auto [in, out] = dims(layer);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    double* w = params_.data() + offset_w(layer);
    for (std::size_t o = 0; o < out; ++o) {
      // Small policy logits keep the initial policy close to uniform.
      double gain = 1.0;
      if (layer == 2) gain = o + 1 == out ? 1.0 : 0.01;
      for (std::size_t i = 0; i < in; ++i) w[o * in + i] = gain * scale * rng.normal();
    }
  }
}

std::array<std::size_t, 2> PolicyNet::dims(int layer) const {
  switch (layer) {
    case 0: return {obs_, hidden_};
    case 1: return {hidden_, hidden_};
    default: return {hidden_, out_size()};
  }
}

std::size_t PolicyNet::offset_w(int layer) const {
  std::size_t off = 0;
  for (int l = 0; l < layer; ++l) {
    const auto [in, out] = dims(l);
    off += in * out + out;
  }
  return off;
}

std::size_t PolicyNet::offset_b(int layer) const {
  const auto [in, out] = dims(layer);
  return offset_w(layer) + in * out;
}

void PolicyNet::forward(const double* obs, std::size_t batch, Cache& c) const {
  c.batch = batch;
  c.input.assign(obs, obs + batch * obs_);
  c.h1.resize(batch * hidden_);
  c.h2.resize(batch * hidden_);
  c.out.resize(batch * out_size());
  const double* p = params_.data();
  kernels::dense_forward(c.input.data(), batch, obs_, p + offset_w(0), p + offset_b(0), hidden_, c.h1.data());
  kernels::tanh_inplace(c.h1.data(), c.h1.size());
  kernels::dense_forward(c.h1.data(), batch, hidden_, p + offset_w(1), p + offset_b(1), hidden_, c.h2.data());
  kernels::tanh_inplace(c.h2.data(), c.h2.size());
  kernels::dense_forward(c.h2.data(), batch, hidden_, p + offset_w(2), p + offset_b(2), out_size(), c.out.data());
}

void PolicyNet::backward(Cache& c, const double* d_out, std::vector<double>& grad) const {
  grad.resize(params_.size(), 0.0);
  const std::size_t B = c.batch;
  std::vector<double> d2(B * hidden_), d1(B * hidden_);
  const double* p = params_.data();
  double* g = grad.data();
  kernels::dense_backward(c.h2.data(), B, hidden_, p + offset_w(2), out_size(), d_out, d2.data(),
                          g + offset_w(2), g + offset_b(2));
  kernels::tanh_backward(c.h2.data(), d2.data(), d2.size());
  kernels::dense_backward(c.h1.data(), B, hidden_, p + offset_w(1), hidden_, d2.data(), d1.data(),
                          g + offset_w(1), g + offset_b(1));
  kernels::tanh_backward(c.h1.data(), d1.data(), d1.size());
  kernels::dense_backward(c.input.data(), B, obs_, p + offset_w(0), hidden_, d1.data(), nullptr,
                          g + offset_w(0), g + offset_b(0));
}

// ---------------------------------------------------------------------------
// Masked heads

void masked_log_softmax(const double* logits, const std::uint8_t* mask, std::size_t n, double* logp) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    logp[j] = mask[j] ? logits[j] : kMaskedLogit;
    hi = std::max(hi, logp[j]);
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += std::exp(logp[j] - hi);
  const double lse = hi + std::log(sum);
  for (std::size_t j = 0; j < n; ++j) logp[j] -= lse;
}

namespace {

struct HeadSpan {
  std::size_t offset;
  std::size_t size;
};

// In HeadChoice order.
std::array<HeadSpan, 4> head_spans(const HeadLayout& h) {
  return {{{h.target_offset(Group::Up), h.target_size()},
           {h.bits_offset(Group::Up), HeadLayout::bits_size()},
           {h.target_offset(Group::Down), h.target_size()},
           {h.bits_offset(Group::Down), HeadLayout::bits_size()}}};
}

int pick(const double* logits, const std::uint8_t* mask, std::size_t n, Rng* rng, double& log_prob) {
  std::vector<double> logp(n);
  masked_log_softmax(logits, mask, n, logp.data());
  int chosen = -1;
  if (!rng) {
    for (std::size_t j = 0; j < n; ++j) {
      if (mask[j] && (chosen < 0 || logp[j] > logp[static_cast<std::size_t>(chosen)])) chosen = static_cast<int>(j);
    }
  } else {
    double u = rng->uniform();
    for (std::size_t j = 0; j < n; ++j) {
      if (!mask[j]) continue;
      chosen = static_cast<int>(j);
      u -= std::exp(logp[j]);
      if (u < 0.0) break;
    }
  }
  if (chosen < 0) throw HarvestError(ErrorCode::InvalidState, "head has no legal option");
  log_prob += logp[static_cast<std::size_t>(chosen)];
  return chosen;
}

}  // namespace

PolicyStep select_action(const double* logits, const LegalActions& legal, const HeadLayout& heads,
                         Rng* rng) {
  PolicyStep out;
  out.mask.assign(heads.mask_size(), 0);
  out.value = logits[heads.mask_size()];
  for (Group g : kGroups) {
    const auto options = g == Group::Up ? legal[g] : without_target(legal[g], out.action.up.target());
    std::uint8_t* bits_mask = out.mask.data() + heads.bits_offset(g);
    std::uint8_t* target_mask = out.mask.data() + heads.target_offset(g);
    for (const auto& a : options) bits_mask[static_cast<int>(a.bits())] = 1;
    const int b = pick(logits + heads.bits_offset(g), bits_mask, HeadLayout::bits_size(), rng, out.log_prob);
    for (const auto& a : options) {
      if (static_cast<int>(a.bits()) == b) target_mask[a.target_label()] = 1;
    }
    const int t = pick(logits + heads.target_offset(g), target_mask, heads.target_size(), rng, out.log_prob);
    const std::optional<std::size_t> target =
        t == 0 ? std::nullopt : std::optional<std::size_t>(static_cast<std::size_t>(t - 1));
    out.action[g] = GroupAction::make(target, static_cast<BitPair>(b));
    const std::size_t base = g == Group::Up ? 0 : 2;
    out.choice[base] = t;
    out.choice[base + 1] = b;
  }
  return out;
}

double choice_log_prob(const double* logits, const std::uint8_t* mask, const HeadChoice& choice,
                       const HeadLayout& heads) {
  double lp = 0.0;
  const auto spans = head_spans(heads);
  std::vector<double> logp;
  for (std::size_t h = 0; h < 4; ++h) {
    logp.resize(spans[h].size);
    masked_log_softmax(logits + spans[h].offset, mask + spans[h].offset, spans[h].size, logp.data());
    lp += logp[static_cast<std::size_t>(choice[h])];
  }
  return lp;
}

// ---------------------------------------------------------------------------
// Advantages

GaeResult gae_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                         const std::vector<std::uint8_t>& dones, double gamma, double lambda) {
  const std::size_t T = rewards.size();
  if (values.size() != T + 1 || dones.size() != T) {
    throw HarvestError(ErrorCode::InvalidConfig, "gae needs T rewards, T dones and T+1 values");
  }
  GaeResult out;
  out.advantages.assign(T, 0.0);
  out.returns.assign(T, 0.0);
  double next = 0.0;
  for (std::size_t i = T; i-- > 0;) {
    const double live = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * values[i + 1] * live - values[i];
    next = delta + gamma * lambda * live * next;
    out.advantages[i] = next;
    out.returns[i] = next + values[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config

void validate_train_config(const TrainConfig& c) {
  auto fail = [](const std::string& m) { throw HarvestError(ErrorCode::InvalidConfig, "train config: " + m); };
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) fail("gamma must be in (0, 1]");
  if (!(c.clip_eps > 0.0)) fail("clip_eps must be positive");
  if (!(c.lr > 0.0)) fail("lr must be positive");
  if (!(c.gae_lambda >= 0.0 && c.gae_lambda <= 1.0)) fail("gae_lambda must be in [0, 1]");
  if (c.epochs_per_batch < 1) fail("epochs_per_batch must be positive");
  if (c.rollout_horizon < 1) fail("rollout_horizon must be positive");
  if (c.minibatch < 1 || c.minibatch > c.rollout_horizon) fail("minibatch must be in [1, rollout_horizon]");
  if (c.entropy_coef < 0.0 || c.value_coef < 0.0) fail("loss coefficients must be non-negative");
  if (!(c.max_grad_norm > 0.0) || !(c.adam_eps > 0.0)) fail("max_grad_norm and adam_eps must be positive");
  if (!(c.reward_scale > 0.0)) fail("reward_scale must be positive");
  if (c.hidden < 1 || c.n_max < 1) fail("hidden and n_max must be positive");
  if (c.checkpoint_every < 1) fail("checkpoint_every must be positive");
  if (c.eval_episodes < 0) fail("eval_episodes must be non-negative");
  const auto& k = c.curriculum;
  if (k.n_fruits < 1 || k.n_fruits > c.n_max) fail("curriculum n_fruits must be in [1, n_max]");
  if (k.stage1_steps < 0 || k.stage2_steps < 0 || k.stage3_steps < 0) fail("stage lengths must be non-negative");
  if (c.total_steps() < 1) fail("no training steps");
  if (k.stage2_layouts < 1) fail("stage2_layouts must be positive");
  if (k.stage3_min_fruits < 1 || k.stage3_min_fruits > k.n_fruits) fail("stage3_min_fruits must be in [1, n_fruits]");
}

namespace {

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Json train_config_to_json(const TrainConfig& c) {
  const auto& k = c.curriculum;
  return Json{{"gamma", c.gamma},
              {"clip_eps", c.clip_eps},
              {"lr", c.lr},
              {"gae_lambda", c.gae_lambda},
              {"epochs_per_batch", c.epochs_per_batch},
              {"minibatch", c.minibatch},
              {"rollout_horizon", c.rollout_horizon},
              {"entropy_coef", c.entropy_coef},
              {"value_coef", c.value_coef},
              {"max_grad_norm", c.max_grad_norm},
              {"adam_eps", c.adam_eps},
              {"normalize_advantages", c.normalize_advantages},
              {"reward_scale", c.reward_scale},
              {"hidden", c.hidden},
              {"n_max", c.n_max},
              {"checkpoint_every", c.checkpoint_every},
              {"eval_episodes", c.eval_episodes},
              {"seed", c.seed},
              {"curriculum",
               {{"n_fruits", k.n_fruits},
                {"stage1_steps", k.stage1_steps},
                {"stage2_steps", k.stage2_steps},
                {"stage3_steps", k.stage3_steps},
                {"stage2_layouts", k.stage2_layouts},
                {"stage3_min_fruits", k.stage3_min_fruits},
                {"stage3_failures", k.stage3_failures}}}};
}

TrainConfig train_config_from_json(const Json& j) {
  try {
    TrainConfig c;
    read_opt(j, "gamma", c.gamma);
    read_opt(j, "clip_eps", c.clip_eps);
    read_opt(j, "lr", c.lr);
    read_opt(j, "gae_lambda", c.gae_lambda);
    read_opt(j, "epochs_per_batch", c.epochs_per_batch);
    read_opt(j, "minibatch", c.minibatch);
    read_opt(j, "rollout_horizon", c.rollout_horizon);
    read_opt(j, "entropy_coef", c.entropy_coef);
    read_opt(j, "value_coef", c.value_coef);
    read_opt(j, "max_grad_norm", c.max_grad_norm);
    read_opt(j, "adam_eps", c.adam_eps);
    read_opt(j, "normalize_advantages", c.normalize_advantages);
    read_opt(j, "reward_scale", c.reward_scale);
    read_opt(j, "hidden", c.hidden);
    read_opt(j, "n_max", c.n_max);
    read_opt(j, "checkpoint_every", c.checkpoint_every);
    read_opt(j, "eval_episodes", c.eval_episodes);
    read_opt(j, "seed", c.seed);
    if (j.contains("curriculum")) {
      const auto& k = j.at("curriculum");
      read_opt(k, "n_fruits", c.curriculum.n_fruits);
      read_opt(k, "stage1_steps", c.curriculum.stage1_steps);
      read_opt(k, "stage2_steps", c.curriculum.stage2_steps);
      read_opt(k, "stage3_steps", c.curriculum.stage3_steps);
      read_opt(k, "stage2_layouts", c.curriculum.stage2_layouts);
      read_opt(k, "stage3_min_fruits", c.curriculum.stage3_min_fruits);
      read_opt(k, "stage3_failures", c.curriculum.stage3_failures);
    }
    validate_train_config(c);
    return c;
  } catch (const Json::exception& e) {
    throw HarvestError(ErrorCode::Io, std::string("train config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Loss and optimiser

LossStats ppo_loss(const PolicyNet& net, const Batch& batch, const std::vector<std::size_t>& idx,
                   const TrainConfig& cfg, std::vector<double>* grad) {
  const std::size_t M = idx.size();
  const std::size_t O = net.out_size();
  const HeadLayout heads = net.heads();
  const auto spans = head_spans(heads);
  LossStats stats;
  if (M == 0) return stats;

  std::vector<double> obs(M * batch.obs_size);
  for (std::size_t r = 0; r < M; ++r) {
    std::copy_n(batch.obs.data() + idx[r] * batch.obs_size, batch.obs_size, obs.data() + r * batch.obs_size);
  }
  PolicyNet::Cache cache;
  net.forward(obs.data(), M, cache);

  std::vector<double> d_out(grad ? M * O : 0, 0.0);
  const double inv_m = 1.0 / static_cast<double>(M);
  std::vector<double> logp;
  for (std::size_t r = 0; r < M; ++r) {
    const std::size_t row = idx[r];
    const double* z = cache.out.data() + r * O;
    const std::uint8_t* mask = batch.masks.data() + row * batch.mask_size;
    const HeadChoice& c = batch.choices[row];

    // Per-head log-probs, kept for the gradient.
    std::array<std::vector<double>, 4> lps;
    std::array<double, 4> ent{};
    double lp = 0.0;
    for (std::size_t h = 0; h < 4; ++h) {
      auto& l = lps[h];
      l.resize(spans[h].size);
      masked_log_softmax(z + spans[h].offset, mask + spans[h].offset, spans[h].size, l.data());
      lp += l[static_cast<std::size_t>(c[h])];
      for (std::size_t j = 0; j < spans[h].size; ++j) {
        if (mask[spans[h].offset + j]) ent[h] -= std::exp(l[j]) * l[j];
      }
    }
    const double entropy = ent[0] + ent[1] + ent[2] + ent[3];
    const double log_ratio = lp - batch.old_log_probs[row];
    const double ratio = std::exp(log_ratio);
    const double a = batch.advantages[row];
    const double unclipped = ratio * a;
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * a;
    const double policy = -std::min(unclipped, clipped);
    const double v = z[O - 1];
    const double err = v - batch.returns[row];

    stats.policy += policy * inv_m;
    stats.value += err * err * inv_m;
    stats.entropy += entropy * inv_m;
    stats.approx_kl += ((ratio - 1.0) - log_ratio) * inv_m;
    stats.clip_fraction += (std::abs(ratio - 1.0) > cfg.clip_eps ? 1.0 : 0.0) * inv_m;

    if (!grad) continue;
    double* dz = d_out.data() + r * O;
    // d(policy)/d(lp): the min picks the unclipped branch or has zero slope.
    const double d_lp = unclipped <= clipped ? -a * ratio : 0.0;
    for (std::size_t h = 0; h < 4; ++h) {
      const auto& l = lps[h];
      for (std::size_t j = 0; j < spans[h].size; ++j) {
        if (!mask[spans[h].offset + j]) continue;
        const double p = std::exp(l[j]);
        const double hot = j == static_cast<std::size_t>(c[h]) ? 1.0 : 0.0;
        const double d_entropy = -p * (l[j] + ent[h]);
        dz[spans[h].offset + j] = (d_lp * (hot - p) - cfg.entropy_coef * d_entropy) * inv_m;
      }
    }
    dz[O - 1] = cfg.value_coef * 2.0 * err * inv_m;
  }
  stats.total = stats.policy + cfg.value_coef * stats.value - cfg.entropy_coef * stats.entropy;
  if (grad) {
    grad->assign(net.params().size(), 0.0);
    net.backward(cache, d_out.data(), *grad);
  }
  return stats;
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

Json Adam::to_json() const {
  return Json{{"lr", lr_}, {"beta1", beta1_}, {"beta2", beta2_}, {"eps", eps_}, {"t", t_}, {"m", m_}, {"v", v_}};
}

Adam Adam::from_json(const Json& j) {
  Adam a;
  a.lr_ = j.at("lr").get<double>();
  a.beta1_ = j.at("beta1").get<double>();
  a.beta2_ = j.at("beta2").get<double>();
  a.eps_ = j.at("eps").get<double>();
  a.t_ = j.at("t").get<long>();
  a.m_ = j.at("m").get<std::vector<double>>();
  a.v_ = j.at("v").get<std::vector<double>>();
  return a;
}

namespace {

void require_finite(const LossStats& s, long update) {
  for (double v : {s.total, s.policy, s.value, s.entropy}) {
    if (!std::isfinite(v)) {
      throw HarvestError(ErrorCode::NumericalError,
                         "non-finite loss at update " + std::to_string(update) + ": policy " +
                             std::to_string(s.policy) + ", value " + std::to_string(s.value) +
                             ", entropy " + std::to_string(s.entropy));
    }
  }
}

}  // namespace

LossStats ppo_update(PolicyNet& net, Adam& opt, Batch& batch, const TrainConfig& cfg, Rng& rng) {
  const std::size_t n = batch.size();
  LossStats mean;
  if (n == 0) return mean;
  if (cfg.normalize_advantages && n > 1) {
    double mu = 0.0, var = 0.0;
    for (double a : batch.advantages) mu += a;
    mu /= static_cast<double>(n);
    for (double a : batch.advantages) var += (a - mu) * (a - mu);
    const double sd = std::sqrt(var / static_cast<double>(n)) + 1e-8;
    for (double& a : batch.advantages) a = (a - mu) / sd;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad;
  std::vector<std::size_t> idx;
  const std::size_t mb = static_cast<std::size_t>(cfg.minibatch);
  int count = 0;
  for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < n; start += mb) {
      idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                 order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + mb)));
      const LossStats s = ppo_loss(net, batch, idx, cfg, &grad);
      require_finite(s, opt.steps());
      double norm = 0.0;
      for (double g : grad) norm += g * g;
      norm = std::sqrt(norm);
      if (!std::isfinite(norm)) throw HarvestError(ErrorCode::NumericalError, "non-finite gradient");
      if (norm > cfg.max_grad_norm) {
        const double k = cfg.max_grad_norm / norm;
        for (double& g : grad) g *= k;
      }
      opt.step(net.params(), grad);
      mean.total += s.total;
      mean.policy += s.policy;
      mean.value += s.value;
      mean.entropy += s.entropy;
      mean.approx_kl += s.approx_kl;
      mean.clip_fraction += s.clip_fraction;
      ++count;
    }
  }
  for (double w : net.params()) {
    if (!std::isfinite(w)) throw HarvestError(ErrorCode::NumericalError, "non-finite weight after update");
  }
  const double k = 1.0 / count;
  mean.total *= k;
  mean.policy *= k;
  mean.value *= k;
  mean.entropy *= k;
  mean.approx_kl *= k;
  mean.clip_fraction *= k;
  return mean;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

Json net_to_json(const PolicyNet& net) {
  return Json{{"obs_size", net.obs_size()},
              {"n_max", net.n_max()},
              {"hidden", net.hidden()},
              {"seed", net.seed()},
              {"params", net.params()}};
}

PolicyNet net_from_json(const Json& j) {
  PolicyNet net(j.at("obs_size").get<std::size_t>(), j.at("n_max").get<std::size_t>(),
                j.at("hidden").get<std::size_t>(), j.at("seed").get<std::uint64_t>());
  auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != net.params().size()) {
    throw HarvestError(ErrorCode::Io, "checkpoint parameter count does not match its shape");
  }
  net.params() = std::move(params);
  return net;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  const Json j{{"format", "harvest-ppo"},
               {"version", Checkpoint::kVersion},
               {"steps", c.steps},
               {"train", train_config_to_json(c.train)},
               {"env", env_config_to_json(c.env)},
               {"workspace", workspace_to_json(c.ws)},
               {"net", net_to_json(c.net)},
               {"adam", c.adam.to_json()},
               {"rng", c.rng_state},
               {"eval", {{"mean_makespan", c.eval_makespan}, {"completion_rate", c.eval_completion}}}};
  write_json_file(path, j, -1);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  try {
    if (j.value("format", std::string()) != "harvest-ppo") {
      throw HarvestError(ErrorCode::Io, path.string() + " is not a policy checkpoint");
    }
    if (j.at("version").get<int>() != Checkpoint::kVersion) {
      throw HarvestError(ErrorCode::Io, "unsupported checkpoint version in " + path.string());
    }
    Checkpoint c;
    c.steps = j.at("steps").get<long>();
    c.train = train_config_from_json(j.at("train"));
    c.env = env_config_from_json(j.at("env"));
    c.ws = workspace_from_json(j.at("workspace"));
    c.net = net_from_json(j.at("net"));
    c.adam = Adam::from_json(j.at("adam"));
    c.rng_state = j.at("rng").get<std::string>();
    if (j.contains("eval")) {
      c.eval_makespan = j.at("eval").at("mean_makespan").get<double>();
      c.eval_completion = j.at("eval").at("completion_rate").get<double>();
    }
    return c;
  } catch (const Json::exception& e) {
    throw HarvestError(ErrorCode::Io, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Training

namespace {

class LayoutSchedule {
 public:
  LayoutSchedule(const TrainConfig& cfg, const WorkspaceConfig& ws, const Rng& root)
      : cfg_(cfg), ws_(ws), rng_(root.split(22)) {
    const auto& k = cfg.curriculum;
    Rng seeds = root.split(20);
    LayoutSpec spec;
    spec.n_fruits = k.n_fruits;
    spec.id = "stage1";
    spec.seed = seeds.next();
    fixed_ = std::make_shared<const FruitLayout>(generate_layout(spec, ws));
    for (int i = 0; i < k.stage2_layouts; ++i) {
      spec.id = "stage2-" + std::to_string(i + 1);
      spec.seed = seeds.next();
      cycle_.push_back(std::make_shared<const FruitLayout>(generate_layout(spec, ws)));
    }
  }

  int stage_at(long steps) const {
    const auto& k = cfg_.curriculum;
    if (steps < k.stage1_steps) return 1;
    if (steps < k.stage1_steps + k.stage2_steps) return 2;
    return 3;
  }

  std::shared_ptr<const FruitLayout> next(int stage) {
    if (stage == 1) return fixed_;
    if (stage == 2) return cycle_[cursor_++ % cycle_.size()];
    const auto& k = cfg_.curriculum;
    LayoutSpec spec;
    spec.id = "stage3";
    spec.n_fruits = k.stage3_min_fruits + static_cast<int>(rng_.below(static_cast<std::uint64_t>(k.n_fruits - k.stage3_min_fruits + 1)));
    if (k.stage3_failures) spec.failure_profile.n_double = static_cast<int>(rng_.below(static_cast<std::uint64_t>(spec.n_fruits / 5 + 1)));
    spec.seed = rng_.next();
    return std::make_shared<const FruitLayout>(generate_layout(spec, ws_));
  }

 private:
  const TrainConfig& cfg_;
  const WorkspaceConfig& ws_;
  Rng rng_;
  std::shared_ptr<const FruitLayout> fixed_;
  std::vector<std::shared_ptr<const FruitLayout>> cycle_;
  std::size_t cursor_ = 0;
};

}  // namespace

TrainResult train(const TrainConfig& cfg, const EnvConfig& env_in, const WorkspaceConfig& ws,
                  const std::optional<std::filesystem::path>& out_dir, const ProgressFn& progress) {
  validate_train_config(cfg);
  validate_env_config(env_in);
  validate_workspace(ws);
  EnvConfig env = env_in;
  env.n_max = cfg.n_max;

  const Rng root(cfg.seed);
  Rng rng = root.split(10);
  PolicyNet net(static_cast<std::size_t>(cfg.n_max), static_cast<std::size_t>(cfg.hidden), root.split(11).next());
  Adam opt(net.params().size(), cfg.lr, cfg.adam_eps);
  LayoutSchedule schedule(cfg, ws, root);
  const HeadLayout heads = net.heads();
  const std::size_t obs_size = net.obs_size();

  std::vector<std::shared_ptr<const FruitLayout>> held_out;
  {
    Rng seeds = root.split(30);
    LayoutSpec spec;
    spec.n_fruits = cfg.curriculum.n_fruits;
    for (int i = 0; i < cfg.eval_episodes; ++i) {
      spec.id = "eval-" + std::to_string(i + 1);
      spec.seed = seeds.next();
      held_out.push_back(std::make_shared<const FruitLayout>(generate_layout(spec, ws)));
    }
  }

  TrainResult result;
  auto snapshot = [&](long steps) {
    Checkpoint c;
    c.train = cfg;
    c.env = env;
    c.ws = ws;
    c.net = net;
    c.adam = opt;
    c.rng_state = rng.state();
    c.steps = steps;
    if (!held_out.empty()) {
      const PolicyEval e = evaluate_policy(net, held_out, env, ws);
      c.eval_makespan = e.mean_makespan;
      c.eval_completion = e.completion_rate;
    }
    return c;
  };

  long steps = 0;
  long next_checkpoint = cfg.checkpoint_every;
  int episode_stage = 1;
  SystemState state = initial_state(schedule.next(1), ws);
  double episode_return = 0.0;
  PolicyNet::Cache cache;

  while (steps < cfg.total_steps()) {
    const std::size_t horizon = static_cast<std::size_t>(std::min<long>(cfg.rollout_horizon, cfg.total_steps() - steps));
    Batch batch;
    batch.obs_size = obs_size;
    batch.mask_size = heads.mask_size();
    batch.obs.reserve(horizon * obs_size);
    batch.masks.reserve(horizon * heads.mask_size());
    std::vector<double> rewards, values;
    std::vector<std::uint8_t> dones;

    for (std::size_t t = 0; t < horizon; ++t) {
      const Observation obs = encode_observation(state, env, ws);
      const LegalActions legal = legal_actions(state, env, ws);
      net.forward(obs.features.data(), 1, cache);
      PolicyStep ps = select_action(cache.out.data(), legal, heads, &rng);

      batch.obs.insert(batch.obs.end(), obs.features.begin(), obs.features.end());
      batch.masks.insert(batch.masks.end(), ps.mask.begin(), ps.mask.end());
      batch.choices.push_back(ps.choice);
      batch.old_log_probs.push_back(ps.log_prob);
      values.push_back(ps.value);

      StepResult r = step(state, ps.action, env, ws);
      const double reward = 0.5 * (r.rewards[0] + r.rewards[1]);
      rewards.push_back(reward * cfg.reward_scale);
      dones.push_back(r.done ? 1 : 0);
      episode_return += reward;
      ++steps;
      state = std::move(r.next_state);
      if (r.done) {
        result.episodes.push_back({steps, episode_stage, episode_return, state.makespan(), r.done_reason});
        episode_return = 0.0;
        episode_stage = schedule.stage_at(steps);
        state = initial_state(schedule.next(episode_stage), ws);
      }
    }
    double bootstrap = 0.0;
    if (!dones.back()) {
      const Observation obs = encode_observation(state, env, ws);
      net.forward(obs.features.data(), 1, cache);
      bootstrap = cache.out[net.out_size() - 1];
    }
    values.push_back(bootstrap);
    GaeResult gae = gae_advantages(rewards, values, dones, cfg.gamma, cfg.gae_lambda);
    batch.advantages = std::move(gae.advantages);
    batch.returns = std::move(gae.returns);

    UpdateLog log;
    log.steps = steps;
    log.stage = schedule.stage_at(steps - 1);
    log.loss = ppo_update(net, opt, batch, cfg, rng);
    result.updates.push_back(log);
    if (progress) progress(log, result.episodes);

    if (out_dir && steps >= next_checkpoint && steps < cfg.total_steps()) {
      const auto path = *out_dir / ("ckpt_" + std::to_string(steps) + ".json");
      save_checkpoint(path, snapshot(steps));
      result.checkpoints.push_back(path);
      while (next_checkpoint <= steps) next_checkpoint += cfg.checkpoint_every;
    }
  }

  result.final = snapshot(steps);
  if (out_dir) {
    const auto path = *out_dir / "final.json";
    save_checkpoint(path, result.final);
    result.checkpoints.push_back(path);
  }
  return result;
}

PolicyEval evaluate_policy(const PolicyNet& net, const std::vector<std::shared_ptr<const FruitLayout>>& layouts,
                           const EnvConfig& env, const WorkspaceConfig& ws) {
  PolicyEval out;
  int done = 0;
  for (const auto& layout : layouts) {
    PpoPlanner planner(net, env, ws, true);
    const EpisodeResult r = run_episode(layout, planner, env, ws, 0, false);
    if (r.reason != DoneReason::AllPicked) continue;
    out.mean_makespan += r.metrics.makespan;
    ++done;
  }
  if (done > 0) out.mean_makespan /= done;
  if (!layouts.empty()) out.completion_rate = static_cast<double>(done) / static_cast<double>(layouts.size());
  return out;
}

// ---------------------------------------------------------------------------

PpoPlanner::PpoPlanner(PolicyNet net, EnvConfig env, WorkspaceConfig ws, bool greedy)
    : net_(std::move(net)), env_(env), ws_(std::move(ws)), greedy_(greedy) {
  env_.n_max = static_cast<int>(net_.n_max());
  if (net_.obs_size() != observation_size(net_.n_max())) {
    throw HarvestError(ErrorCode::InvalidConfig, "network input does not match the observation size");
  }
}

void PpoPlanner::reset(const SystemState&, std::uint64_t seed) { rng_ = Rng(seed); }

JointAction PpoPlanner::decide(const SystemState& state, const LegalActions& legal) {
  const Observation obs = encode_observation(state, env_, ws_);
  net_.forward(obs.features.data(), 1, cache_);
  return select_action(cache_.out.data(), legal, net_.heads(), greedy_ ? nullptr : &rng_).action;
}

}  // namespace harvest
