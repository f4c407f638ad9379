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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "curled/losses.hpp"
#include "curled/nets.hpp"

namespace curled {

/// Settings of a training run. The JSON form uses the same field names;
/// "hyper" and "model" are nested objects and absent keys keep the
/// defaults below. Unknown keys are rejected.
struct TrainConfig {
  std::string env = "pixel-pointmass";
  std::int64_t total_env_steps = 10000;
  std::int64_t warmup_steps = 1000;
  std::int64_t train_every = 4;  // env steps per gradient step
  double learning_rate = 3e-4;
  std::size_t batch_size = 16;
  std::size_t sequence_length = 8;
  Hyperparams hyper;
  std::size_t buffer_capacity = 200;  // episodes
  std::int64_t eval_interval = 2000;  // env steps
  int eval_episodes = 10;
  std::int64_t log_every = 10;        // gradient steps between telemetry rows
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";
  std::size_t latent_dim = 32;
  std::vector<std::size_t> hidden = {128, 128};

  void validate() const;
  ModelSpec model_spec() const;

  bool operator==(const TrainConfig&) const = default;
};

TrainConfig parse_config(std::string_view json_text);
TrainConfig load_config(const std::filesystem::path& path);

/// Canonical JSON. output_dir is omitted when `include_output_dir` is false
/// so that checkpoints do not depend on where a run was written.
std::string config_to_json(const TrainConfig& config, bool include_output_dir = true);

}  // namespace curled
