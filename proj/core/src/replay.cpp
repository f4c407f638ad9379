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

#include "curled/replay.hpp"

#include <cmath>
#include <string>

#include "curled/errors.hpp"

namespace curled {

void Episode::validate() const {
  if (actions.empty()) throw ContractError("Episode: no steps");
  if (observations.size() != actions.size() + 1) {
    throw ContractError("Episode: " + std::to_string(observations.size()) + " observations for " +
                        std::to_string(actions.size()) + " actions");
  }
  if (rewards.size() != actions.size()) {
    throw ContractError("Episode: " + std::to_string(rewards.size()) + " rewards for " +
                        std::to_string(actions.size()) + " actions");
  }
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    if (!std::isfinite(rewards[t])) throw ContractError("Episode: non-finite reward at step " + std::to_string(t));
  }
  for (const auto& a : actions) {
    if (a.size() != actions.front().size()) throw ContractError("Episode: inconsistent action dimensions");
  }
}

Tensor SequenceBatch::center_views(const CropSpec& crop) const {
  std::vector<Image> views;
  views.reserve(batch * (length + 1));
  for (std::size_t t = 0; t <= length; ++t)
    for (std::size_t n = 0; n < batch; ++n) views.push_back(center_crop(observations[n][t], crop));
  return stack_images(views);
}

Tensor SequenceBatch::action_tensor() const {
  const std::size_t dims = actions.front().front().size();
  std::vector<double> data;
  data.reserve(length * batch * dims);
  for (std::size_t t = 0; t < length; ++t)
    for (std::size_t n = 0; n < batch; ++n) data.insert(data.end(), actions[n][t].begin(), actions[n][t].end());
  return Tensor(Shape{length * batch, dims}, std::move(data));
}

Tensor SequenceBatch::reward_tensor() const {
  std::vector<double> data;
  data.reserve(length * batch);
  for (std::size_t t = 0; t < length; ++t)
    for (std::size_t n = 0; n < batch; ++n) data.push_back(rewards[n][t]);
  return Tensor(Shape{length * batch, 1}, std::move(data));
}

std::vector<Image> SequenceBatch::first_observations() const {
  std::vector<Image> out;
  out.reserve(batch);
  for (const auto& seq : observations) out.push_back(seq.front());
  return out;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ContractError("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::add(Episode episode) {
  episode.validate();
  episodes_.push_back(std::move(episode));
  while (episodes_.size() > capacity_) episodes_.pop_front();
}

SequenceBatch ReplayBuffer::sample_sequences(std::size_t batch, std::size_t length, Rng& rng) const {
  if (batch == 0 || length == 0) throw ContractError("sample_sequences: batch and length must be positive");
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < episodes_.size(); ++i) {
    if (episodes_[i].length() >= length) eligible.push_back(i);
  }
  if (eligible.empty()) {
    throw ContractError("sample_sequences: no stored episode has " + std::to_string(length) +
                        " steps; collect more experience first (increase warmup_steps)");
  }
  SequenceBatch out;
  out.batch = batch;
  out.length = length;
  for (std::size_t n = 0; n < batch; ++n) {
    const std::size_t e = eligible[rng.index(eligible.size())];
    const Episode& ep = episodes_[e];
    const std::size_t start = rng.index(ep.length() - length + 1);
    const auto s = static_cast<std::ptrdiff_t>(start);
    const auto l = static_cast<std::ptrdiff_t>(length);
    out.observations.emplace_back(ep.observations.begin() + s, ep.observations.begin() + s + l + 1);
    out.actions.emplace_back(ep.actions.begin() + s, ep.actions.begin() + s + l);
    out.rewards.emplace_back(ep.rewards.begin() + s, ep.rewards.begin() + s + l);
    out.episode_index.push_back(e);
    out.start.push_back(start);
  }
  return out;
}

}  // namespace curled
