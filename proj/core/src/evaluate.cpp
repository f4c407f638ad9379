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

#include "curled/evaluate.hpp"

#include <string>

#include "curled/env.hpp"
#include "curled/errors.hpp"
#include "curled/trainer.hpp"

namespace curled {

double evaluate(const Checkpoint& checkpoint, std::string_view env, int episodes, std::uint64_t seed) {
  const EnvKind kind = parse_env(env);
  if (kind != parse_env(checkpoint.config.env)) {
    throw ContractError("evaluate: checkpoint was trained on " + checkpoint.config.env + ", not " +
                        std::string(env));
  }
  return evaluate_policy(checkpoint.params, kind, episodes, seed);
}

double evaluate(const std::filesystem::path& checkpoint, std::string_view env, int episodes, std::uint64_t seed) {
  return evaluate(load_checkpoint(checkpoint), env, episodes, seed);
}

}  // namespace curled
