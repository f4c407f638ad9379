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

// Training objective of the contrastive world model:
//
//   total = policy + lambda1 * dynamics + lambda2 * infonce + lambda3 * reconstruction
//
// Every term is a differentiable scalar Tensor built on tensor.hpp.

#pragma once

#include <cstddef>
#include <string_view>

#include "curled/nets.hpp"
#include "curled/rng.hpp"
#include "curled/tensor.hpp"

namespace curled {

enum class SimilarityKind { cosine, bilinear };

std::string_view similarity_name(SimilarityKind kind);
SimilarityKind parse_similarity(std::string_view name);

struct Hyperparams {
  double lambda1 = 1.0;  // dynamics + reward prediction
  double lambda2 = 1.0;  // contrastive
  double lambda3 = 1.0;  // reconstruction
  double tau = 0.1;
  double gamma = 0.99;
  std::size_t horizon = 15;
  double momentum = 0.95;
  SimilarityKind similarity = SimilarityKind::cosine;

  /// Throws ContractError on tau <= 0, gamma or momentum outside [0, 1],
  /// negative weights, or a zero horizon.
  void validate() const;

  bool operator==(const Hyperparams&) const = default;
};

struct LossBreakdown {
  double policy = 0.0;
  double dynamics = 0.0;
  double infonce = 0.0;
  double reconstruction = 0.0;
  double total = 0.0;
};

/// Similarity of two [D] vectors. Bilinear needs `bilinear` ([D, D]).
Tensor similarity(const Tensor& u, const Tensor& v, SimilarityKind kind, const Tensor* bilinear = nullptr);

/// [N, D] x [M, D] -> [N, M] matrix of pairwise similarities.
Tensor similarity_matrix(const Tensor& anchors, const Tensor& candidates, SimilarityKind kind,
                         const Tensor* bilinear = nullptr);

/// Mean over anchors i of -log softmax_j(sim(z_i, z+_j) / tau)[i]. The
/// candidates are all N positives; positives are detached so no gradient
/// reaches the target encoder.
Tensor infonce_loss(const Tensor& anchors, const Tensor& positives, const Hyperparams& hyper,
                    const Tensor* bilinear = nullptr);

/// Latents are time-major [(T+1)*N, D] (row t*N + n is step t of sequence
/// n); actions [T*N, A]; rewards [T*N, 1]. Returns the mean over batch and
/// time of |g(z_t, a_t) - z_{t+1}|^2 + (r(z_t, a_t) - r_t)^2.
Tensor dynamics_loss(const Tensor& latents, const Tensor& actions, const Tensor& rewards, std::size_t batch,
                     const BoundMlp& dynamics, const BoundMlp& reward);

/// Mean over the batch of the summed squared pixel error.
Tensor reconstruction_loss(const Tensor& targets, const Tensor& reconstructions);

/// Imagined rollout of `horizon` steps from detached start latents through
/// the frozen dynamics; returns -mean_b sum_{t=1..H} gamma^t r(z_t, a_t).
/// Only the policy receives gradients.
Tensor policy_loss(const Tensor& start_latents, const BoundMlp& policy, const BoundMlp& dynamics,
                   const BoundMlp& reward, const Hyperparams& hyper, Rng& rng);

struct LossTerms {
  Tensor policy;
  Tensor dynamics;
  Tensor infonce;
  Tensor reconstruction;
};

struct WeightedLoss {
  Tensor total;
  Tensor weighted_dynamics;
  Tensor weighted_infonce;
  Tensor weighted_reconstruction;
  LossBreakdown breakdown;
};

WeightedLoss total_loss(const LossTerms& terms, const Hyperparams& hyper);

}  // namespace curled
