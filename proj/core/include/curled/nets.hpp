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

// Function approximators of the world model and the actor.
//
// Parameters are stored as plain values (Param, Mlp, ModelParams). For a
// training step they are bound to fresh graph leaves with bind(); the
// gradients of those leaves are then applied back to the stored values.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "curled/rng.hpp"
#include "curled/tensor.hpp"

namespace curled {

struct Param {
  std::string name;
  Shape shape;
  std::vector<double> data;

  bool operator==(const Param&) const = default;
};

enum class OutputSquash { identity, sigmoid };

struct DenseLayer {
  Param weight;  // [in, out]
  Param bias;    // [out]

  bool operator==(const DenseLayer&) const = default;
};

/// Dense layers with tanh between them and `squash` after the last one.
struct Mlp {
  std::vector<DenseLayer> layers;
  OutputSquash squash = OutputSquash::identity;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;

  bool operator==(const Mlp&) const = default;
};

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
Mlp make_mlp(const std::string& name, std::size_t input, std::span<const std::size_t> hidden, std::size_t output,
             OutputSquash squash, Rng& rng);

struct ModelSpec {
  std::size_t observation_dim = 32 * 32;  // flattened crop
  std::size_t latent_dim = 32;
  std::size_t action_dim = 1;
  std::vector<std::size_t> hidden = {128, 128};

  bool operator==(const ModelSpec&) const = default;
};

/// Online encoder, EMA target encoder, decoder, latent dynamics, reward
/// predictor, policy and the bilinear similarity matrix.
struct ModelParams {
  ModelSpec spec;
  Mlp encoder;
  Mlp target_encoder;
  Mlp decoder;
  Mlp dynamics;
  Mlp reward;
  Mlp policy;
  Param bilinear;

  /// Gradient-trained parameters in a fixed order: encoder, decoder,
  /// dynamics, reward, policy, bilinear. The target encoder is excluded.
  std::vector<Param*> trainable();
  std::vector<const Param*> trainable() const;

  /// Every stored parameter including the target encoder, in checkpoint order.
  std::vector<const Param*> all() const;
  std::vector<Param*> all();

  bool operator==(const ModelParams&) const = default;
};

/// Fresh model; the target encoder starts as a copy of the encoder and the
/// bilinear matrix as the identity.
ModelParams init_model(const ModelSpec& spec, Rng& rng);

struct BoundLayer {
  Tensor weight;
  Tensor bias;
};

struct BoundMlp {
  std::string name;
  std::vector<BoundLayer> layers;
  OutputSquash squash = OutputSquash::identity;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;

  /// weight0, bias0, weight1, ... in layer order.
  std::vector<Tensor> leaves() const;
};

BoundMlp bind(const Mlp& mlp, bool trainable);

/// Same structure with every leaf cut off from gradients.
BoundMlp frozen(const BoundMlp& mlp);

Tensor mlp_forward(const BoundMlp& mlp, const Tensor& x);

struct BoundModel {
  BoundMlp encoder;
  BoundMlp target_encoder;  // never requires gradients
  BoundMlp decoder;
  BoundMlp dynamics;
  BoundMlp reward;
  BoundMlp policy;
  Tensor bilinear;

  /// Leaves aligned one-to-one with ModelParams::trainable().
  std::vector<Tensor> trainable_leaves() const;
};

BoundModel bind(const ModelParams& params);

/// [B, observation_dim] views -> [B, D] latents.
Tensor encode(const BoundMlp& encoder, const Tensor& views);
/// [B, D] latents -> [B, observation_dim] reconstructions in [0, 1].
Tensor decode(const BoundMlp& decoder, const Tensor& latents);
/// ([B, D], [B, A]) -> [B, D]
Tensor predict_dynamics(const BoundMlp& dynamics, const Tensor& z, const Tensor& a);
/// ([B, D], [B, A]) -> [B, 1]
Tensor predict_reward(const BoundMlp& reward, const Tensor& z, const Tensor& a);

enum class ActionMode { stochastic, mean };

struct PolicyOutput {
  Tensor action;   // [B, A], strictly inside (-1, 1)
  Tensor mean;     // pre-squash Gaussian mean
  Tensor log_std;  // in [-5, 2]
};

inline constexpr double kMinLogStd = -5.0;
inline constexpr double kMaxLogStd = 2.0;
// tanh rounds to exactly +-1 for large inputs; actions are scaled by this bound.
inline constexpr double kActionBound = 1.0 - 1e-9;

/// Tanh-squashed diagonal Gaussian. Stochastic mode samples
/// tanh(mean + exp(log_std) * noise) so gradients reach the policy.
PolicyOutput policy_act(const BoundMlp& policy, const Tensor& z, ActionMode mode, Rng& rng);

/// target <- m * target + (1 - m) * online, parameter by parameter.
void ema_update(Mlp& target, const Mlp& online, double m);

}  // namespace curled
