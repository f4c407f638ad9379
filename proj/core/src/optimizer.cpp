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

#include "curled/optimizer.hpp"

#include <cmath>
#include <string>

#include "curled/errors.hpp"

namespace curled {

OptimizerState OptimizerState::for_params(std::span<const Param* const> params) {
  OptimizerState s;
  for (const Param* p : params) {
    s.first_moment.emplace_back(p->data.size(), 0.0);
    s.second_moment.emplace_back(p->data.size(), 0.0);
  }
  return s;
}

void adaptive_moment_update(std::span<Param* const> params, std::span<const std::vector<double>> grads,
                            OptimizerState& state, double learning_rate, const AdamSettings& settings) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw ShapeError("adaptive_moment_update: " + std::to_string(params.size()) + " params, " +
                     std::to_string(grads.size()) + " gradients, " + std::to_string(state.first_moment.size()) +
                     " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::size_t n = params[i]->data.size();
    if (grads[i].size() != n || state.first_moment[i].size() != n || state.second_moment[i].size() != n) {
      throw ShapeError("adaptive_moment_update: size mismatch for " + params[i]->name);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(settings.beta1, t);
  const double correction2 = 1.0 - std::pow(settings.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i]->data;
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const auto& g = grads[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = settings.beta1 * m[k] + (1.0 - settings.beta1) * g[k];
      v[k] = settings.beta2 * v[k] + (1.0 - settings.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      w[k] -= learning_rate * m_hat / (std::sqrt(v_hat) + settings.epsilon);
    }
  }
}

}  // namespace curled
