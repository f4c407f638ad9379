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

#include "curled/losses.hpp"

#include <cmath>
#include <string>

#include "curled/errors.hpp"

namespace curled {

std::string_view similarity_name(SimilarityKind kind) {
  return kind == SimilarityKind::cosine ? "cosine" : "bilinear";
}

SimilarityKind parse_similarity(std::string_view name) {
  if (name == "cosine") return SimilarityKind::cosine;
  if (name == "bilinear") return SimilarityKind::bilinear;
  throw ContractError("unknown similarity '" + std::string(name) + "' (expected cosine or bilinear)");
}

void Hyperparams::validate() const {
  if (!(tau > 0.0)) throw ContractError("Hyperparams: tau must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ContractError("Hyperparams: gamma must lie in [0, 1]");
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw ContractError("Hyperparams: momentum must lie in [0, 1]");
  if (!(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda3 >= 0.0)) {
    throw ContractError("Hyperparams: loss weights must be non-negative");
  }
  if (horizon == 0) throw ContractError("Hyperparams: horizon must be at least 1");
}

namespace {

const Tensor& require_bilinear(const Tensor* w, std::size_t d) {
  if (w == nullptr) throw ContractError("similarity: bilinear kind needs the matrix W");
  if (w->rank() != 2 || w->shape()[0] != d || w->shape()[1] != d) {
    throw ShapeError("similarity: W has shape " + shape_string(w->shape()) + ", expected [" + std::to_string(d) +
                     "," + std::to_string(d) + "]");
  }
  return *w;
}

}  // namespace

Tensor similarity(const Tensor& u, const Tensor& v, SimilarityKind kind, const Tensor* bilinear) {
  if (u.rank() != 1 || u.shape() != v.shape()) {
    throw ShapeError("similarity: expected two equal [D] vectors, got " + shape_string(u.shape()) + " and " +
                     shape_string(v.shape()));
  }
  if (kind == SimilarityKind::cosine) return sum(multiply(l2_normalize(u), l2_normalize(v)));
  const Tensor& w = require_bilinear(bilinear, u.shape()[0]);
  return sum(multiply(matmul(broadcast(u, 1), w), broadcast(v, 1)));
}

Tensor similarity_matrix(const Tensor& anchors, const Tensor& candidates, SimilarityKind kind, const Tensor* bilinear) {
  if (anchors.rank() != 2 || candidates.rank() != 2 || anchors.shape()[1] != candidates.shape()[1]) {
    throw ShapeError("similarity_matrix: incompatible latents " + shape_string(anchors.shape()) + " and " +
                     shape_string(candidates.shape()));
  }
  if (kind == SimilarityKind::cosine) return matmul(l2_normalize(anchors), transpose(l2_normalize(candidates)));
  const Tensor& w = require_bilinear(bilinear, anchors.shape()[1]);
  return matmul(matmul(anchors, w), transpose(candidates));
}

Tensor infonce_loss(const Tensor& anchors, const Tensor& positives, const Hyperparams& hyper, const Tensor* bilinear) {
  if (!(hyper.tau > 0.0)) throw ContractError("infonce_loss: tau must be positive");
  if (anchors.rank() != 2 || anchors.shape() != positives.shape() || anchors.shape()[0] == 0) {
    throw ShapeError("infonce_loss: anchors " + shape_string(anchors.shape()) + " and positives " +
                     shape_string(positives.shape()) + " must both be [N, D] with N >= 1");
  }
  const std::size_t n = anchors.shape()[0];
  const Tensor sims = similarity_matrix(anchors, positives.detach(), hyper.similarity, bilinear);
  const auto s = sims.data();
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (!std::isfinite(s[k])) {
      throw NumericalError("infonce_loss: non-finite similarity " + std::to_string(s[k]) + " at (" +
                           std::to_string(k / n) + "," + std::to_string(k % n) + ")");
    }
  }
  const Tensor log_probs = log_softmax(affine(sims, 1.0 / hyper.tau));
  std::vector<double> eye(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) eye[i * n + i] = 1.0;
  const Tensor diagonal = sum(multiply(log_probs, Tensor(Shape{n, n}, std::move(eye))));
  return affine(diagonal, -1.0 / static_cast<double>(n));
}

Tensor dynamics_loss(const Tensor& latents, const Tensor& actions, const Tensor& rewards, std::size_t batch,
                     const BoundMlp& dynamics, const BoundMlp& reward) {
  if (batch == 0 || latents.rank() != 2 || actions.rank() != 2 || rewards.rank() != 2) {
    throw ContractError("dynamics_loss: expected rank-2 latents, actions, rewards and a positive batch");
  }
  const std::size_t rows = latents.shape()[0];
  if (rows % batch != 0 || rows / batch < 2) {
    throw ContractError("dynamics_loss: " + std::to_string(rows) + " latent rows do not form T+1 >= 2 steps of batch " +
                        std::to_string(batch));
  }
  const std::size_t steps = rows / batch - 1;
  const std::size_t transitions = steps * batch;
  if (actions.shape()[0] != transitions || rewards.shape()[0] != transitions || rewards.shape()[1] != 1) {
    throw ContractError("dynamics_loss: " + std::to_string(transitions) + " transitions but actions " +
                        shape_string(actions.shape()) + " and rewards " + shape_string(rewards.shape()));
  }
  const Tensor current = slice(latents, 0, transitions, 0);
  const Tensor next = slice(latents, batch, rows, 0);
  const Tensor latent_error = sum(square(subtract(predict_dynamics(dynamics, current, actions), next)));
  const Tensor reward_error = sum(square(subtract(predict_reward(reward, current, actions), rewards)));
  return affine(add(latent_error, reward_error), 1.0 / static_cast<double>(transitions));
}

Tensor reconstruction_loss(const Tensor& targets, const Tensor& reconstructions) {
  if (targets.rank() != 2 || targets.shape() != reconstructions.shape() || targets.shape()[0] == 0) {
    throw ShapeError("reconstruction_loss: targets " + shape_string(targets.shape()) + " and reconstructions " +
                     shape_string(reconstructions.shape()) + " must be equal [B, P]");
  }
  const double batch = static_cast<double>(targets.shape()[0]);
  return affine(sum(square(subtract(reconstructions, targets))), 1.0 / batch);
}

Tensor policy_loss(const Tensor& start_latents, const BoundMlp& policy, const BoundMlp& dynamics,
                   const BoundMlp& reward, const Hyperparams& hyper, Rng& rng) {
  if (hyper.horizon == 0) throw ContractError("policy_loss: horizon must be at least 1");
  if (start_latents.rank() != 2 || start_latents.shape()[0] == 0) {
    throw ShapeError("policy_loss: start latents must be [B, D], got " + shape_string(start_latents.shape()));
  }
  const BoundMlp world_dynamics = frozen(dynamics);
  const BoundMlp world_reward = frozen(reward);
  Tensor z = start_latents.detach();
  Tensor discounted = Tensor::scalar(0.0);
  double discount = 1.0;
  for (std::size_t t = 1; t <= hyper.horizon; ++t) {
    discount *= hyper.gamma;
    try {
      const Tensor action = policy_act(policy, z, ActionMode::stochastic, rng).action;
      const Tensor r = predict_reward(world_reward, z, action);
      for (double v : r.data()) {
        if (!std::isfinite(v)) throw NumericalError("non-finite reward");
      }
      discounted = add(discounted, affine(sum(r), discount));
      if (t < hyper.horizon) z = predict_dynamics(world_dynamics, z, action);
    } catch (const NumericalError& e) {
      throw NumericalError("policy_loss: imagination step " + std::to_string(t) + ": " + e.what());
    }
  }
  return affine(discounted, -1.0 / static_cast<double>(start_latents.shape()[0]));
}

WeightedLoss total_loss(const LossTerms& terms, const Hyperparams& hyper) {
  auto check = [](const Tensor& t, std::string_view name) {
    if (t.size() != 1) throw ShapeError("total_loss: component " + std::string(name) + " is not a scalar");
    if (!std::isfinite(t.item())) {
      throw NumericalError("total_loss: non-finite " + std::string(name) + " component (" + std::to_string(t.item()) +
                           ")");
    }
    return t.item();
  };
  WeightedLoss out;
  out.breakdown.policy = check(terms.policy, "policy");
  out.breakdown.dynamics = check(terms.dynamics, "dynamics");
  out.breakdown.infonce = check(terms.infonce, "infonce");
  out.breakdown.reconstruction = check(terms.reconstruction, "reconstruction");
  out.weighted_dynamics = affine(terms.dynamics, hyper.lambda1);
  out.weighted_infonce = affine(terms.infonce, hyper.lambda2);
  out.weighted_reconstruction = affine(terms.reconstruction, hyper.lambda3);
  out.total = add(add(add(terms.policy, out.weighted_dynamics), out.weighted_infonce), out.weighted_reconstruction);
  out.breakdown.total = out.total.item();
  return out;
}

}  // namespace curled
