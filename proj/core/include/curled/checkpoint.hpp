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

#include <filesystem>
#include <string>
#include <string_view>

#include "curled/config.hpp"
#include "curled/nets.hpp"
#include "curled/optimizer.hpp"
#include "curled/rng.hpp"

namespace curled {

inline constexpr std::string_view kCheckpointFormat = "curled-wm-v1";

struct Checkpoint {
  TrainConfig config;  // output_dir is not stored
  ModelParams params;
  OptimizerState optimizer;
  Rng rng;
};

/// JSON document:
///   {"format": "curled-wm-v1", "config": {...},
///    "params": [{"name", "shape", "data"}...],   data nested by shape
///    "optimizer": {"step", "first_moment", "second_moment"},
///    "rng": "<engine state>"}
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace curled
