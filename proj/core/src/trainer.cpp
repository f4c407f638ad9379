// Copyright 2026 The curled-wm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "curled/trainer.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "curled/checkpoint.hpp"
#include "curled/errors.hpp"

namespace curled {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, std::span<const double> values) {
  for (double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= kFnvPrime;
    }
  }
}

double encoder_norm(const GradientMap& grads, const BoundMlp& encoder) {
  double sq = 0.0;
  for (const Tensor& leaf : encoder.leaves()) {
    for (double g : grads.values_or_zero(leaf)) sq += g * g;
  }
  return std::sqrt(sq);
}

std::string describe(const LossBreakdown& b) {
  return "policy=" + std::to_string(b.policy) + " dynamics=" + std::to_string(b.dynamics) +
         " infonce=" + std::to_string(b.infonce) + " reconstruction=" + std::to_string(b.reconstruction) +
         " total=" + std::to_string(b.total);
}

}  // namespace

std::uint64_t hash_params(const Mlp& mlp) {
  std::uint64_t h = kFnvOffset;
  for (const DenseLayer& layer : mlp.layers) {
    fnv_mix(h, layer.weight.data);
    fnv_mix(h, layer.bias.data);
  }
  return h;
}

std::uint64_t hash_optimizer(const OptimizerState& state) {
  std::uint64_t h = kFnvOffset;
  const double step = static_cast<double>(state.step);
  fnv_mix(h, std::span<const double>(&step, 1));
  for (const auto& m : state.first_moment) fnv_mix(h, m);
  for (const auto& v : state.second_moment) fnv_mix(h, v);
  return h;
}

std::vector<Episode> collect_experience(EnvKind kind, const ModelParams* params, std::int64_t steps, Rng& rng,
                                        CollectMode mode, const CropSpec& crop) {
  if (steps < 1) throw ContractError("collect_experience: steps must be at least 1");
  if (mode == CollectMode::policy && params == nullptr) {
    throw ContractError("collect_experience: policy mode needs model parameters");
  }
  const std::size_t dim = action_dim(kind);
  const std::int64_t count = (steps + kEpisodeLength - 1) / kEpisodeLength;
  BoundMlp encoder;
  BoundMlp policy;
  if (mode == CollectMode::policy) {
    encoder = bind(params->encoder, false);
    policy = bind(params->policy, false);
  }

  std::vector<Episode> episodes;
  episodes.reserve(static_cast<std::size_t>(count));
  for (std::int64_t e = 0; e < count; ++e) {
    Episode ep;
    ep.seed = rng.next_u64();
    ResetResult reset = env_reset(kind, ep.seed);
    EnvState state = reset.state;
    ep.observations.push_back(std::move(reset.observation));
    for (int t = 0; t < kEpisodeLength; ++t) {
      std::vector<double> action(dim);
      if (mode == CollectMode::random) {
        for (double& a : action) a = rng.uniform(-1.0, 1.0);
      } else {
        const Image view = center_crop(ep.observations.back(), crop);
        const Tensor z = encode(encoder, stack_images(std::span<const Image>(&view, 1)));
        const Tensor a = policy_act(policy, z, ActionMode::stochastic, rng).action;
        action.assign(a.data().begin(), a.data().end());
      }
      StepResult step = env_step(state, action);
      state = step.state;
      ep.actions.push_back(std::move(action));
      ep.rewards.push_back(step.reward);
      ep.observations.push_back(std::move(step.observation));
    }
    ep.validate();
    episodes.push_back(std::move(ep));
  }
  return episodes;
}

StepOutcome train_step(const SequenceBatch& batch, ModelParams& params, OptimizerState& optimizer,
                       const Hyperparams& hyper, double learning_rate, Rng& rng, const TrainStepOptions& options,
                       const CropSpec& crop) {
  if (batch.batch == 0 || batch.length == 0 || batch.observations.size() != batch.batch) {
    throw ContractError("train_step: malformed sequence batch");
  }
  const BoundModel model = bind(params);

  const std::vector<Image> firsts = batch.first_observations();
  const AugmentedBatch pairs = make_pairs(firsts, crop, rng);
  const Tensor anchors = encode(model.encoder, stack_images(pairs.anchors));
  const Tensor positives = encode(model.target_encoder, stack_images(pairs.positives));

  const Tensor views = batch.center_views(crop);
  const Tensor latents = encode(model.encoder, views);

  LossTerms terms;
  terms.infonce = infonce_loss(anchors, positives, hyper, &model.bilinear);
  terms.dynamics =
      dynamics_loss(latents, batch.action_tensor(), batch.reward_tensor(), batch.batch, model.dynamics, model.reward);
  terms.reconstruction = reconstruction_loss(views, decode(model.decoder, latents));
  // Imagination starts from each sequence's first latent (rows 0..N-1).
  const Tensor starts = slice(latents, 0, batch.batch, 0);
  terms.policy = policy_loss(starts, model.policy, model.dynamics, model.reward, hyper, rng);

  WeightedLoss loss;
  try {
    loss = total_loss(terms, hyper);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("train_step: ") + e.what());
  }
  if (!std::isfinite(loss.breakdown.total)) {
    throw NumericalError("train_step: non-finite total loss (" + describe(loss.breakdown) + ")");
  }

  StepOutcome outcome;
  outcome.losses = loss.breakdown;
  if (options.telemetry) {
    GradientNorms norms;
    norms.infonce = encoder_norm(backward(loss.weighted_infonce), model.encoder);
    norms.dynamics = encoder_norm(backward(loss.weighted_dynamics), model.encoder);
    norms.reconstruction = encoder_norm(backward(loss.weighted_reconstruction), model.encoder);
    outcome.gradient_norms = norms;
  }

  const GradientMap grads = backward(loss.total);
  const std::vector<Tensor> leaves = model.trainable_leaves();
  std::vector<std::vector<double>> grad_values;
  grad_values.reserve(leaves.size());
  for (const Tensor& leaf : leaves) {
    grad_values.push_back(grads.values_or_zero(leaf));
    for (double g : grad_values.back()) {
      if (!std::isfinite(g)) throw NumericalError("train_step: non-finite gradient (" + describe(loss.breakdown) + ")");
    }
  }

  const std::uint64_t target_before = options.audit ? hash_params(params.target_encoder) : 0;
  const std::vector<Param*> trainable = params.trainable();
  adaptive_moment_update(trainable, grad_values, optimizer, learning_rate);
  if (options.audit && hash_params(params.target_encoder) != target_before) {
    throw ContractError("train_step: target encoder changed outside ema_update");
  }

  const std::uint64_t optimizer_before = options.audit ? hash_optimizer(optimizer) : 0;
  ema_update(params.target_encoder, params.encoder, hyper.momentum);
  if (options.audit && hash_optimizer(optimizer) != optimizer_before) {
    throw ContractError("train_step: ema_update touched the optimizer state");
  }
  return outcome;
}

double evaluate_policy(const ModelParams& params, EnvKind kind, int episodes, std::uint64_t seed,
                       const CropSpec& crop) {
  if (episodes < 1) throw ContractError("evaluate_policy: episodes must be at least 1");
  if (params.spec.action_dim != action_dim(kind)) {
    throw ContractError("evaluate_policy: model acts in " + std::to_string(params.spec.action_dim) +
                        " dimensions, " + std::string(env_name(kind)) + " needs " +
                        std::to_string(action_dim(kind)));
  }
  const BoundMlp encoder = bind(params.encoder, false);
  const BoundMlp policy = bind(params.policy, false);
  Rng seeds(seed);
  Rng unused(0);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    ResetResult reset = env_reset(kind, seeds.next_u64());
    EnvState state = reset.state;
    Image obs = std::move(reset.observation);
    double episode_return = 0.0;
    bool done = false;
    while (!done) {
      const Image view = center_crop(obs, crop);
      const Tensor z = encode(encoder, stack_images(std::span<const Image>(&view, 1)));
      const Tensor a = policy_act(policy, z, ActionMode::mean, unused).action;
      StepResult step = env_step(state, a.data());
      state = step.state;
      obs = std::move(step.observation);
      episode_return += step.reward;
      done = step.done;
    }
    total += episode_return;
  }
  return total / static_cast<double>(episodes);
}

std::uint64_t eval_seed(const TrainConfig& config) { return config.seed + 1000000; }

TrainResult train(const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  const EnvKind kind = parse_env(config.env);
  const CropSpec crop;

  Rng master(config.seed);
  Rng init_rng = master.split();
  Rng collect_rng = master.split();

  TrainResult result;
  result.params = init_model(config.model_spec(), init_rng);
  result.optimizer = OptimizerState::for_params(std::as_const(result.params).trainable());
  result.rng = master.split();

  if (options.write_files) {
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec) throw IoError("train: cannot create " + config.output_dir + ": " + ec.message());
  }

  ReplayBuffer buffer(config.buffer_capacity);
  std::int64_t next_eval = config.eval_interval;
  std::int64_t last_eval_env_steps = -1;

  auto run_eval = [&] {
    MetricsRecord row;
    row.step = result.train_steps;
    row.env_steps = result.env_steps;
    row.eval_return = evaluate_policy(result.params, kind, config.eval_episodes, eval_seed(config), crop);
    result.final_eval_return = row.eval_return;
    last_eval_env_steps = result.env_steps;
    result.history.push_back(row);
  };

  auto collect = [&](std::int64_t steps, CollectMode mode) {
    for (Episode& ep : collect_experience(kind, &result.params, steps, collect_rng, mode, crop)) {
      result.env_steps += static_cast<std::int64_t>(ep.length());
      buffer.add(std::move(ep));
    }
  };

  auto train_until_caught_up = [&] {
    while ((result.train_steps + 1) * config.train_every <= result.env_steps) {
      const SequenceBatch batch = buffer.sample_sequences(config.batch_size, config.sequence_length, result.rng);
      const bool log = (result.train_steps + 1) % config.log_every == 0;
      TrainStepOptions step_options;
      step_options.telemetry = log;
      step_options.audit = options.audit;
      StepOutcome out;
      try {
        out = train_step(batch, result.params, result.optimizer, config.hyper, config.learning_rate, result.rng,
                         step_options, crop);
      } catch (const NumericalError& e) {
        throw NumericalError("train: step " + std::to_string(result.train_steps + 1) + ": " + e.what());
      }
      ++result.train_steps;
      if (options.audit) ++result.audited_steps;
      if (!log) continue;
      MetricsRecord row;
      row.step = result.train_steps;
      row.env_steps = result.env_steps;
      row.loss_total = out.losses.total;
      row.loss_policy = out.losses.policy;
      row.loss_dynamics = out.losses.dynamics;
      row.loss_infonce = out.losses.infonce;
      row.loss_recon = out.losses.reconstruction;
      row.gnorm_infonce = out.gradient_norms->infonce;
      row.gnorm_dynamics = out.gradient_norms->dynamics;
      row.gnorm_recon = out.gradient_norms->reconstruction;
      result.history.push_back(row);
      result.logged_losses.push_back(out.losses);
    }
  };

  auto eval_if_due = [&] {
    if (result.env_steps < next_eval) return;
    run_eval();
    while (next_eval <= result.env_steps) next_eval += config.eval_interval;
  };

  const std::int64_t warmup = std::min(config.warmup_steps, config.total_env_steps);
  if (warmup > 0) {
    collect(warmup, CollectMode::random);
    train_until_caught_up();
    eval_if_due();
  }
  while (result.env_steps < config.total_env_steps) {
    collect(kEpisodeLength, CollectMode::policy);
    train_until_caught_up();
    eval_if_due();
  }
  if (result.env_steps > 0 && last_eval_env_steps != result.env_steps) run_eval();

  if (options.write_files) {
    const std::filesystem::path dir(config.output_dir);
    write_metrics(dir / "metrics.csv", result.history);
    save_checkpoint(dir / "checkpoint.json",
                    Checkpoint{config, result.params, result.optimizer, result.rng});
  }
  return result;
}

}  // namespace curled
