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

#include "curled/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "curled/errors.hpp"
#include "curled/rng.hpp"

namespace curled {

namespace {

constexpr double kRodLength = 16.0;     // pixels
constexpr double kRodHalfWidth = 1.0;   // pixels; yields a 2-pixel-wide rod
constexpr double kFrameCenter = 20.0;   // image-plane coordinate of the pivot

void fill_square(Image& img, std::size_t row, std::size_t col, double value) {
  for (std::size_t r = row - 1; r <= row + 1; ++r)
    for (std::size_t c = col - 1; c <= col + 1; ++c) img.pixels[r * img.width + c] = value;
}

// Pixel index of a coordinate in [-1, 1], leaving room for a 3x3 square.
std::size_t grid_index(double u) {
  const double clamped = std::clamp(u, -1.0, 1.0);
  return 1 + static_cast<std::size_t>(std::lround((clamped + 1.0) * 0.5 * static_cast<double>(kFrameSize - 3)));
}

}  // namespace

std::string_view env_name(EnvKind kind) {
  return kind == EnvKind::pendulum ? "pixel-pendulum" : "pixel-pointmass";
}

std::vector<std::string> available_envs() { return {"pixel-pendulum", "pixel-pointmass"}; }

EnvKind parse_env(std::string_view name) {
  if (name == "pixel-pendulum") return EnvKind::pendulum;
  if (name == "pixel-pointmass") return EnvKind::pointmass;
  throw ContractError("unknown environment '" + std::string(name) +
                      "'; available: pixel-pendulum, pixel-pointmass");
}

std::size_t action_dim(EnvKind kind) { return kind == EnvKind::pendulum ? 1 : 2; }

Image render_state(const EnvState& state) {
  Image img;
  img.height = kFrameSize;
  img.width = kFrameSize;
  img.pixels.assign(kFrameSize * kFrameSize, 0.0);
  if (state.kind == EnvKind::pendulum) {
    // Segment from the pivot to the tip; angle 0 points straight up.
    const double ax = kFrameCenter;
    const double ay = kFrameCenter;
    const double bx = kFrameCenter + kRodLength * std::sin(state.angle);
    const double by = kFrameCenter - kRodLength * std::cos(state.angle);
    const double dx = bx - ax;
    const double dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    for (std::size_t r = 0; r < kFrameSize; ++r) {
      for (std::size_t c = 0; c < kFrameSize; ++c) {
        const double px = static_cast<double>(c) + 0.5;
        const double py = static_cast<double>(r) + 0.5;
        const double t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
        const double ex = px - (ax + t * dx);
        const double ey = py - (ay + t * dy);
        if (ex * ex + ey * ey <= kRodHalfWidth * kRodHalfWidth) img.pixels[r * kFrameSize + c] = 1.0;
      }
    }
    return img;
  }
  // Image rows grow downward, so y is flipped.
  fill_square(img, grid_index(-pointmass::kGoal[1]), grid_index(pointmass::kGoal[0]), 0.5);
  fill_square(img, grid_index(-state.position[1]), grid_index(state.position[0]), 1.0);
  return img;
}

ResetResult env_reset(EnvKind kind, std::uint64_t seed) {
  Rng rng(seed);
  EnvState s;
  s.kind = kind;
  s.seed = seed;
  if (kind == EnvKind::pendulum) {
    s.angle = rng.uniform(-std::numbers::pi, std::numbers::pi);
    s.angular_velocity = rng.uniform(-1.0, 1.0);
  } else {
    s.position = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    s.velocity = {0.0, 0.0};
  }
  return {s, render_state(s)};
}

ResetResult env_reset(std::string_view name, std::uint64_t seed) { return env_reset(parse_env(name), seed); }

StepResult env_step(const EnvState& state, std::span<const double> action) {
  if (state.step >= kEpisodeLength) throw ContractError("env_step: episode already finished");
  if (action.size() != action_dim(state.kind)) {
    throw ShapeError("env_step: " + std::string(env_name(state.kind)) + " expects " +
                     std::to_string(action_dim(state.kind)) + " action dims, got " + std::to_string(action.size()));
  }
  StepResult out;
  EnvState s = state;
  double reward = 0.0;
  if (s.kind == EnvKind::pendulum) {
    using namespace pendulum;
    const double u = std::clamp(action[0], -1.0, 1.0);
    const double accel = -3.0 * kGravity / (2.0 * kLength) * std::sin(s.angle + std::numbers::pi) +
                         3.0 * u * kMaxTorque / (kMass * kLength * kLength);
    s.angular_velocity = std::clamp(s.angular_velocity + accel * kTimeStep, -kMaxSpeed, kMaxSpeed);
    s.angle += s.angular_velocity * kTimeStep;
    reward = std::cos(s.angle);
  } else {
    using namespace pointmass;
    double dist2 = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      const double u = std::clamp(action[i], -1.0, 1.0);
      s.velocity[i] = kDamping * s.velocity[i] + kForceGain * u;
      s.position[i] = std::clamp(s.position[i] + s.velocity[i] * kTimeStep, -1.0, 1.0);
      const double d = s.position[i] - kGoal[i];
      dist2 += d * d;
    }
    reward = 1.0 - std::sqrt(dist2) / std::sqrt(8.0);
  }
  ++s.step;
  out.observation = render_state(s);
  out.state = s;
  out.reward = reward;
  out.done = s.step >= kEpisodeLength;
  return out;
}

double random_policy_return(EnvKind kind, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw ContractError("random_policy_return: episodes must be at least 1");
  Rng rng(seed);
  const std::size_t dims = action_dim(kind);
  std::vector<double> action(dims);
  double total = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    EnvState s = env_reset(kind, rng.next_u64()).state;
    bool done = false;
    while (!done) {
      for (double& a : action) a = rng.uniform(-1.0, 1.0);
      StepResult r = env_step(s, action);
      total += r.reward;
      done = r.done;
      s = r.state;
    }
  }
  return total / static_cast<double>(episodes);
}

}  // namespace curled
