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

// Deterministic pixel-observation control tasks.
//
//   pixel-pendulum   1-D torque, reward cos(angle), angle 0 is upright.
//   pixel-pointmass  2-D force on a damped point in [-1, 1]^2, reward
//                    1 - |p - goal| / sqrt(8) with goal (0.5, 0.5).
//
// Both render 40x40 grayscale frames and run fixed 200-step episodes.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "curled/augment.hpp"

namespace curled {

enum class EnvKind { pendulum, pointmass };

inline constexpr std::size_t kFrameSize = 40;
inline constexpr int kEpisodeLength = 200;
inline constexpr double kTimeStep = 0.05;

namespace pendulum {
inline constexpr double kGravity = 10.0;
inline constexpr double kLength = 1.0;
inline constexpr double kMass = 1.0;
inline constexpr double kMaxTorque = 2.0;
inline constexpr double kMaxSpeed = 8.0;
}  // namespace pendulum

namespace pointmass {
inline constexpr double kDamping = 0.9;
inline constexpr double kForceGain = 0.1;
inline constexpr std::array<double, 2> kGoal = {0.5, 0.5};
}  // namespace pointmass

std::string_view env_name(EnvKind kind);
/// Throws ContractError listing the available environments.
EnvKind parse_env(std::string_view name);
std::vector<std::string> available_envs();
std::size_t action_dim(EnvKind kind);

struct EnvState {
  EnvKind kind = EnvKind::pendulum;
  double angle = 0.0;             // pendulum, radians
  double angular_velocity = 0.0;  // pendulum, rad/s in [-8, 8]
  std::array<double, 2> position{};  // point-mass, in [-1, 1]^2
  std::array<double, 2> velocity{};
  int step = 0;
  std::uint64_t seed = 0;  // reset seed, kept for provenance

  bool operator==(const EnvState&) const = default;
};

struct ResetResult {
  EnvState state;
  Image observation;
};

struct StepResult {
  EnvState state;
  Image observation;
  double reward = 0.0;
  bool done = false;
};

ResetResult env_reset(EnvKind kind, std::uint64_t seed);
ResetResult env_reset(std::string_view name, std::uint64_t seed);

/// Semi-implicit Euler step. Actions are clamped to [-1, 1]; the reward is
/// evaluated on the resulting state. Stepping a finished episode throws.
StepResult env_step(const EnvState& state, std::span<const double> action);

Image render_state(const EnvState& state);

/// Mean undiscounted return of uniform random actions.
double random_policy_return(EnvKind kind, int episodes, std::uint64_t seed);

}  // namespace curled
