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

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "curled/checkpoint.hpp"

namespace curled {

/// Mean return of the checkpoint's policy on `env`. Throws ContractError
/// when `env` differs from the environment the checkpoint was trained on.
double evaluate(const Checkpoint& checkpoint, std::string_view env, int episodes, std::uint64_t seed);
double evaluate(const std::filesystem::path& checkpoint, std::string_view env, int episodes, std::uint64_t seed);

}  // namespace curled
