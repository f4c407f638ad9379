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

// Experience collection, the fused gradient step and the full training loop.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "curled/augment.hpp"
#include "curled/config.hpp"
#include "curled/env.hpp"
#include "curled/losses.hpp"
#include "curled/metrics.hpp"
#include "curled/nets.hpp"
#include "curled/optimizer.hpp"
#include "curled/replay.hpp"
#include "curled/rng.hpp"

namespace curled {

enum class CollectMode { random, policy };

/// Rolls ceil(steps / episode length) complete episodes. Random mode draws
/// uniform actions and ignores `params`; policy mode samples stochastic
/// actions from the encoded center crop.
std::vector<Episode> collect_experience(EnvKind kind, const ModelParams* params, std::int64_t steps, Rng& rng,
                                        CollectMode mode, const CropSpec& crop = {});

/// L2 norm over encoder parameters of the gradient of each weighted term.
struct GradientNorms {
  double infonce = 0.0;
  double dynamics = 0.0;
  double reconstruction = 0.0;
};

struct TrainStepOptions {
  bool telemetry = false;
  /// Hash the target encoder around the optimizer update and the optimizer
  /// state around the EMA update; a change raises ContractError.
  bool audit = false;
};

struct StepOutcome {
  LossBreakdown losses;
  std::optional<GradientNorms> gradient_norms;
};

/// One fused update: contrastive pairs from each sequence's first frame,
/// all four losses, one backward pass, one Adam step over the trainable
/// parameters, then the EMA update of the target encoder.
StepOutcome train_step(const SequenceBatch& batch, ModelParams& params, OptimizerState& optimizer,
                       const Hyperparams& hyper, double learning_rate, Rng& rng,
                       const TrainStepOptions& options = {}, const CropSpec& crop = {});

/// Mean undiscounted return with mean-mode actions on center crops.
/// Episode seeds are drawn from Rng(seed).
double evaluate_policy(const ModelParams& params, EnvKind kind, int episodes, std::uint64_t seed,
                       const CropSpec& crop = {});

/// FNV-1a over the raw bytes of the values, in order.
std::uint64_t hash_params(const Mlp& mlp);
std::uint64_t hash_optimizer(const OptimizerState& state);

struct TrainOptions {
  /// Write metrics.csv and checkpoint.json under config.output_dir.
  bool write_files = true;
  bool audit = false;
};

struct TrainResult {
  std::vector<MetricsRecord> history;
  /// Full-precision breakdown of every telemetry row, in history order.
  std::vector<LossBreakdown> logged_losses;
  ModelParams params;
  OptimizerState optimizer;
  Rng rng;
  std::int64_t env_steps = 0;
  std::int64_t train_steps = 0;
  std::optional<double> final_eval_return;
  std::int64_t audited_steps = 0;
};

/// Seed used for evaluation episodes of a run.
std::uint64_t eval_seed(const TrainConfig& config);

TrainResult train(const TrainConfig& config, const TrainOptions& options = {});

}  // namespace curled
