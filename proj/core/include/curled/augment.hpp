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
#include <span>
#include <vector>

#include "curled/rng.hpp"
#include "curled/tensor.hpp"

namespace curled {

/// Row-major grayscale image with values in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  double at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
  bool operator==(const Image&) const = default;
};

struct CropSpec {
  std::size_t source_height = 40;
  std::size_t source_width = 40;
  std::size_t crop_height = 32;
  std::size_t crop_width = 32;

  /// Throws ContractError unless 0 < crop <= source in both dimensions.
  void validate() const;
  std::size_t crop_size() const { return crop_height * crop_width; }
};

struct CropOffset {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const CropOffset&) const = default;
};

/// Top-left corner drawn uniformly from [0, H-h] x [0, W-w].
CropOffset draw_offset(const CropSpec& spec, Rng& rng);

/// Exact copy of the crop window at `offset`.
Image crop_at(const Image& image, const CropSpec& spec, CropOffset offset);
Image random_crop(const Image& image, const CropSpec& spec, Rng& rng);
Image center_crop(const Image& image, const CropSpec& spec);

/// Two independent random crops of each observation.
struct AugmentedBatch {
  std::vector<Image> anchors;
  std::vector<Image> positives;
  std::vector<std::size_t> source_index;
};

AugmentedBatch make_pairs(std::span<const Image> observations, const CropSpec& spec, Rng& rng);

/// Stacks equally sized images into a constant [N, h*w] tensor.
Tensor stack_images(std::span<const Image> images);

}  // namespace curled
