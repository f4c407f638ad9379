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

#include <benchmark/benchmark.h>

#include "curled/env.hpp"
#include "curled/losses.hpp"
#include "curled/trainer.hpp"

namespace curled {
namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng, bool grad = false) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.normal();
  return Tensor({rows, cols}, std::move(v), grad);
}

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(0);
  const Tensor a = random_matrix(n, 1024, rng, true);
  const Tensor b = random_matrix(1024, 128, rng, true);
  for (auto _ : state) {
    const GradientMap g = backward(sum(matmul(a, b)));
    benchmark::DoNotOptimize(g.size());
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(16)->Arg(144);

void BM_InfoNce(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random_matrix(n, 32, rng, true);
  const Tensor p = random_matrix(n, 32, rng);
  Hyperparams h;
  for (auto _ : state) benchmark::DoNotOptimize(backward(infonce_loss(a, p, h)).size());
}
BENCHMARK(BM_InfoNce)->Arg(16)->Arg(64);

void BM_EnvStep(benchmark::State& state) {
  const auto kind = state.range(0) == 0 ? EnvKind::pendulum : EnvKind::pointmass;
  EnvState s = env_reset(kind, 0).state;
  const std::vector<double> action(action_dim(kind), 0.1);
  for (auto _ : state) {
    if (s.step == kEpisodeLength) s = env_reset(kind, 0).state;
    s = env_step(s, action).state;
  }
}
BENCHMARK(BM_EnvStep)->Arg(0)->Arg(1);

void BM_TrainStep(benchmark::State& state) {
  Rng rng(2);
  ReplayBuffer buffer(4);
  for (Episode& ep : collect_experience(EnvKind::pointmass, nullptr, 200, rng, CollectMode::random)) {
    buffer.add(std::move(ep));
  }
  TrainConfig config;
  ModelParams params = init_model(config.model_spec(), rng);
  OptimizerState optimizer = OptimizerState::for_params(std::as_const(params).trainable());
  const SequenceBatch batch = buffer.sample_sequences(config.batch_size, config.sequence_length, rng);
  for (auto _ : state) {
    const StepOutcome out = train_step(batch, params, optimizer, config.hyper, config.learning_rate, rng);
    benchmark::DoNotOptimize(out.losses.total);
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace curled

BENCHMARK_MAIN();
