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
#include <deque>
#include <vector>

#include "curled/augment.hpp"
#include "curled/rng.hpp"
#include "curled/tensor.hpp"

namespace curled {

/// One rollout: observations[t] precedes actions[t], which yields rewards[t]
/// and observations[t + 1].
struct Episode {
  std::vector<Image> observations;
  std::vector<std::vector<double>> actions;
  std::vector<double> rewards;
  std::uint64_t seed = 0;

  std::size_t length() const { return actions.size(); }
  /// Throws ContractError on inconsistent lengths or non-finite rewards.
  void validate() const;

  bool operator==(const Episode&) const = default;
};

/// N contiguous slices of length L; sequence n covers
/// observations[start, start + L] of one stored episode.
struct SequenceBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<std::vector<Image>> observations;         // [N][L + 1]
  std::vector<std::vector<std::vector<double>>> actions;  // [N][L][A]
  std::vector<std::vector<double>> rewards;              // [N][L]
  std::vector<std::size_t> episode_index;  // position in the buffer at sampling time
  std::vector<std::size_t> start;

  /// Center crops of every observation, time-major: row t * N + n.
  Tensor center_views(const CropSpec& crop) const;
  /// [L * N, A] time-major.
  Tensor action_tensor() const;
  /// [L * N, 1] time-major.
  Tensor reward_tensor() const;
  /// observations[n][0] for every sequence.
  std::vector<Image> first_observations() const;
};

/// Bounded FIFO of episodes; the oldest episode is evicted first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void add(Episode episode);
  std::size_t size() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return episodes_.empty(); }
  const Episode& at(std::size_t i) const { return episodes_.at(i); }

  /// N independent uniform (episode, start) draws among episodes of length
  /// >= L, with start in [0, length - L].
  SequenceBatch sample_sequences(std::size_t batch, std::size_t length, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Episode> episodes_;
};

}  // namespace curled
