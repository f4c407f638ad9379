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

#include "curled/gradcheck.hpp"

#include <algorithm>

#include "curled/nets.hpp"
#include "curled/rng.hpp"

namespace curled {

namespace {

constexpr std::size_t kBatch = 3;
constexpr std::size_t kLength = 2;

Tensor random_tensor(Shape shape, Rng& rng, double lo, double hi) {
  std::vector<double> v(element_count(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v));
}

void append(std::vector<Tensor>& out, const std::vector<Tensor>& more) { out.insert(out.end(), more.begin(), more.end()); }

}  // namespace

std::vector<GradcheckResult> gradcheck_case(std::uint64_t seed, SimilarityKind similarity, double eps) {
  Rng rng(seed);
  ModelSpec spec;
  spec.observation_dim = 16;
  spec.latent_dim = 4;
  spec.action_dim = 2;
  spec.hidden = {5, 5};
  ModelParams params = init_model(spec, rng);
  // Move off the symmetric initial point so every parameter gets a generic gradient.
  for (Param* p : params.all()) {
    for (double& x : p->data) x += rng.uniform(-0.3, 0.3);
  }

  Hyperparams hyper;
  hyper.similarity = similarity;
  hyper.horizon = 3;
  hyper.lambda1 = rng.uniform(0.5, 1.5);
  hyper.lambda2 = rng.uniform(0.5, 1.5);
  hyper.lambda3 = rng.uniform(0.5, 1.5);

  const Tensor anchor_views = random_tensor({kBatch, spec.observation_dim}, rng, 0.0, 1.0);
  const Tensor positive_views = random_tensor({kBatch, spec.observation_dim}, rng, 0.0, 1.0);
  const Tensor views = random_tensor({(kLength + 1) * kBatch, spec.observation_dim}, rng, 0.0, 1.0);
  const Tensor actions = random_tensor({kLength * kBatch, spec.action_dim}, rng, -1.0, 1.0);
  const Tensor rewards = random_tensor({kLength * kBatch, 1}, rng, 0.0, 1.0);
  const std::uint64_t policy_seed = rng.next_u64();

  const BoundModel m = bind(params);
  const Tensor* bilinear = similarity == SimilarityKind::bilinear ? &m.bilinear : nullptr;

  auto infonce = [&] {
    return infonce_loss(encode(m.encoder, anchor_views), encode(m.target_encoder, positive_views), hyper, bilinear);
  };
  auto dynamics = [&] {
    return dynamics_loss(encode(m.encoder, views), actions, rewards, kBatch, m.dynamics, m.reward);
  };
  auto reconstruction = [&] { return reconstruction_loss(views, decode(m.decoder, encode(m.encoder, views))); };

  // The imagined rollout sees the latents and world model as constants, so
  // for the stop-gradient semantics to match the perturbed function they are
  // captured once here.
  const Tensor start = encode(m.encoder, views).detach();
  const BoundMlp world_dynamics = frozen(m.dynamics);
  const BoundMlp world_reward = frozen(m.reward);
  auto policy = [&] {
    Rng noise(policy_seed);
    return policy_loss(start, m.policy, world_dynamics, world_reward, hyper, noise);
  };
  auto total = [&] {
    LossTerms terms{policy(), dynamics(), infonce(), reconstruction()};
    return total_loss(terms, hyper).total;
  };

  std::vector<Tensor> enc = m.encoder.leaves();
  std::vector<Tensor> infonce_params = enc;
  if (bilinear) infonce_params.push_back(m.bilinear);
  std::vector<Tensor> dynamics_params = enc;
  append(dynamics_params, m.dynamics.leaves());
  append(dynamics_params, m.reward.leaves());
  std::vector<Tensor> recon_params = enc;
  append(recon_params, m.decoder.leaves());
  const std::vector<Tensor> policy_params = m.policy.leaves();
  const std::vector<Tensor> all_params = m.trainable_leaves();

  auto run = [&](const std::string& name, auto fn, const std::vector<Tensor>& leaves) {
    const FiniteDifferenceReport r =
        finite_difference_check([&](std::span<const Tensor>) { return fn(); }, leaves, eps);
    return GradcheckResult{name, r.max_relative_error, r.coordinates_checked};
  };
  return {
      run("infonce", infonce, infonce_params),
      run("dynamics", dynamics, dynamics_params),
      run("reconstruction", reconstruction, recon_params),
      run("policy", policy, policy_params),
      run("total", total, all_params),
  };
}

std::vector<GradcheckResult> gradcheck_suite(std::span<const std::uint64_t> seeds, double eps) {
  std::vector<GradcheckResult> worst;
  for (std::uint64_t seed : seeds) {
    for (SimilarityKind kind : {SimilarityKind::cosine, SimilarityKind::bilinear}) {
      const auto results = gradcheck_case(seed, kind, eps);
      if (worst.empty()) {
        worst = results;
        continue;
      }
      for (std::size_t i = 0; i < results.size(); ++i) {
        worst[i].max_relative_error = std::max(worst[i].max_relative_error, results[i].max_relative_error);
        worst[i].coordinates += results[i].coordinates;
      }
    }
  }
  return worst;
}

}  // namespace curled
