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

// Finite-difference verification of every loss on a small random model.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "curled/losses.hpp"

namespace curled {

struct GradcheckResult {
  std::string loss;  // infonce, dynamics, reconstruction, policy, total
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

/// One random configuration: observation dim 16, latent 4, action 2,
/// hidden {5, 5}, 3 sequences of length 2, horizon 3. Each loss is checked
/// against the parameters it trains; the total against all of them.
std::vector<GradcheckResult> gradcheck_case(std::uint64_t seed, SimilarityKind similarity, double eps = 1e-5);

/// Worst error per loss over every seed and both similarity kinds.
std::vector<GradcheckResult> gradcheck_suite(std::span<const std::uint64_t> seeds, double eps = 1e-5);

}  // namespace curled
