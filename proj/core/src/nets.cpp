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

#include "curled/nets.hpp"

#include <cmath>

#include "curled/errors.hpp"

namespace curled {

std::size_t Mlp::input_dim() const { return layers.empty() ? 0 : layers.front().weight.shape[0]; }
std::size_t Mlp::output_dim() const { return layers.empty() ? 0 : layers.back().weight.shape[1]; }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.data.size() + l.bias.data.size();
  return n;
}

Mlp make_mlp(const std::string& name, std::size_t input, std::span<const std::size_t> hidden, std::size_t output,
             OutputSquash squash, Rng& rng) {
  if (input == 0 || output == 0) throw ContractError("make_mlp: " + name + " needs positive input and output sizes");
  Mlp mlp;
  mlp.squash = squash;
  std::vector<std::size_t> dims{input};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t fan_in = dims[l];
    const std::size_t fan_out = dims[l + 1];
    if (fan_out == 0) throw ContractError("make_mlp: " + name + " has an empty hidden layer");
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer;
    layer.weight.name = name + "." + std::to_string(l) + ".weight";
    layer.weight.shape = {fan_in, fan_out};
    layer.weight.data.resize(fan_in * fan_out);
    for (double& w : layer.weight.data) w = rng.uniform(-limit, limit);
    layer.bias.name = name + "." + std::to_string(l) + ".bias";
    layer.bias.shape = {fan_out};
    layer.bias.data.assign(fan_out, 0.0);
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

namespace {

template <typename Model, typename ParamPtr>
std::vector<ParamPtr> collect(Model& m, bool include_target) {
  std::vector<ParamPtr> out;
  auto add = [&out](auto& mlp) {
    for (auto& l : mlp.layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
  };
  add(m.encoder);
  if (include_target) add(m.target_encoder);
  add(m.decoder);
  add(m.dynamics);
  add(m.reward);
  add(m.policy);
  out.push_back(&m.bilinear);
  return out;
}

}  // namespace

std::vector<Param*> ModelParams::trainable() { return collect<ModelParams, Param*>(*this, false); }
std::vector<const Param*> ModelParams::trainable() const {
  return collect<const ModelParams, const Param*>(*this, false);
}
std::vector<Param*> ModelParams::all() { return collect<ModelParams, Param*>(*this, true); }
std::vector<const Param*> ModelParams::all() const { return collect<const ModelParams, const Param*>(*this, true); }

ModelParams init_model(const ModelSpec& spec, Rng& rng) {
  if (spec.latent_dim == 0 || spec.action_dim == 0 || spec.observation_dim == 0) {
    throw ContractError("init_model: dimensions must be positive");
  }
  const std::size_t d = spec.latent_dim;
  const std::size_t a = spec.action_dim;
  ModelParams m;
  m.spec = spec;
  m.encoder = make_mlp("encoder", spec.observation_dim, spec.hidden, d, OutputSquash::identity, rng);
  m.target_encoder = m.encoder;
  for (auto& l : m.target_encoder.layers) {
    l.weight.name.replace(0, 7, "target_encoder");
    l.bias.name.replace(0, 7, "target_encoder");
  }
  m.decoder = make_mlp("decoder", d, spec.hidden, spec.observation_dim, OutputSquash::sigmoid, rng);
  m.dynamics = make_mlp("dynamics", d + a, spec.hidden, d, OutputSquash::identity, rng);
  m.reward = make_mlp("reward", d + a, spec.hidden, 1, OutputSquash::identity, rng);
  m.policy = make_mlp("policy", d, spec.hidden, 2 * a, OutputSquash::identity, rng);
  m.bilinear.name = "bilinear";
  m.bilinear.shape = {d, d};
  m.bilinear.data.assign(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) m.bilinear.data[i * d + i] = 1.0;
  return m;
}

std::vector<Tensor> BoundMlp::leaves() const {
  std::vector<Tensor> out;
  out.reserve(layers.size() * 2);
  for (const auto& l : layers) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

BoundMlp bind(const Mlp& mlp, bool trainable) {
  if (mlp.layers.empty()) throw ContractError("bind: network has no layers");
  BoundMlp b;
  const std::string& wname = mlp.layers.front().weight.name;
  b.name = wname.substr(0, wname.find('.'));
  b.squash = mlp.squash;
  b.input_dim = mlp.input_dim();
  b.output_dim = mlp.output_dim();
  for (const auto& l : mlp.layers) {
    b.layers.push_back({Tensor(l.weight.shape, l.weight.data, trainable), Tensor(l.bias.shape, l.bias.data, trainable)});
  }
  return b;
}

BoundMlp frozen(const BoundMlp& mlp) {
  BoundMlp out = mlp;
  for (auto& l : out.layers) {
    l.weight = l.weight.detach();
    l.bias = l.bias.detach();
  }
  return out;
}

Tensor mlp_forward(const BoundMlp& mlp, const Tensor& x) {
  if (x.rank() != 2 || x.shape()[1] != mlp.input_dim) {
    throw ShapeError(mlp.name + ": expected input [B," + std::to_string(mlp.input_dim) + "], got " +
                     shape_string(x.shape()));
  }
  Tensor h = x;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    h = add(matmul(h, mlp.layers[l].weight), mlp.layers[l].bias);
    if (l + 1 < mlp.layers.size()) h = tanh(h);
  }
  return mlp.squash == OutputSquash::sigmoid ? sigmoid(h) : h;
}

std::vector<Tensor> BoundModel::trainable_leaves() const {
  std::vector<Tensor> out;
  for (const BoundMlp* m : {&encoder, &decoder, &dynamics, &reward, &policy}) {
    auto l = m->leaves();
    out.insert(out.end(), l.begin(), l.end());
  }
  out.push_back(bilinear);
  return out;
}

BoundModel bind(const ModelParams& params) {
  BoundModel b;
  b.encoder = bind(params.encoder, true);
  b.target_encoder = bind(params.target_encoder, false);
  b.decoder = bind(params.decoder, true);
  b.dynamics = bind(params.dynamics, true);
  b.reward = bind(params.reward, true);
  b.policy = bind(params.policy, true);
  b.bilinear = Tensor(params.bilinear.shape, params.bilinear.data, true);
  return b;
}

Tensor encode(const BoundMlp& encoder, const Tensor& views) { return mlp_forward(encoder, views); }

Tensor decode(const BoundMlp& decoder, const Tensor& latents) { return mlp_forward(decoder, latents); }

namespace {

Tensor state_action(std::string_view who, const BoundMlp& net, const Tensor& z, const Tensor& a) {
  if (z.rank() != 2 || a.rank() != 2 || z.shape()[0] != a.shape()[0] ||
      z.shape()[1] + a.shape()[1] != net.input_dim) {
    throw ShapeError(std::string(who) + ": latent " + shape_string(z.shape()) + " and action " +
                     shape_string(a.shape()) + " do not form input width " + std::to_string(net.input_dim));
  }
  const Tensor parts[] = {z, a};
  return concat(parts);
}

}  // namespace

Tensor predict_dynamics(const BoundMlp& dynamics, const Tensor& z, const Tensor& a) {
  return mlp_forward(dynamics, state_action("predict_dynamics", dynamics, z, a));
}

Tensor predict_reward(const BoundMlp& reward, const Tensor& z, const Tensor& a) {
  return mlp_forward(reward, state_action("predict_reward", reward, z, a));
}

PolicyOutput policy_act(const BoundMlp& policy, const Tensor& z, ActionMode mode, Rng& rng) {
  if (policy.output_dim % 2 != 0) throw ShapeError("policy_act: policy output width must be even");
  const std::size_t a = policy.output_dim / 2;
  const Tensor head = mlp_forward(policy, z);
  PolicyOutput out;
  out.mean = slice(head, 0, a);
  // Smooth map of the raw head onto [kMinLogStd, kMaxLogStd].
  const double half_range = 0.5 * (kMaxLogStd - kMinLogStd);
  out.log_std = affine(tanh(slice(head, a, 2 * a)), half_range, kMinLogStd + half_range);
  if (mode == ActionMode::mean) {
    out.action = affine(tanh(out.mean), kActionBound);
    return out;
  }
  std::vector<double> noise(out.mean.size());
  for (double& n : noise) n = rng.normal();
  const Tensor eps(out.mean.shape(), std::move(noise));
  out.action = affine(tanh(add(out.mean, multiply(exp(out.log_std), eps))), kActionBound);
  return out;
}

void ema_update(Mlp& target, const Mlp& online, double m) {
  if (!(m >= 0.0 && m <= 1.0)) throw ContractError("ema_update: momentum " + std::to_string(m) + " outside [0, 1]");
  if (target.layers.size() != online.layers.size()) throw ShapeError("ema_update: layer count mismatch");
  auto blend = [m](Param& t, const Param& o) {
    if (t.shape != o.shape) {
      throw ShapeError("ema_update: " + t.name + " has shape " + shape_string(t.shape) + ", online " +
                       shape_string(o.shape));
    }
    for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = m * t.data[i] + (1.0 - m) * o.data[i];
  };
  for (std::size_t l = 0; l < target.layers.size(); ++l) {
    blend(target.layers[l].weight, online.layers[l].weight);
    blend(target.layers[l].bias, online.layers[l].bias);
  }
}

}  // namespace curled
