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

#include "curled/augment.hpp"

#include <algorithm>
#include <string>

#include "curled/errors.hpp"

namespace curled {

void CropSpec::validate() const {
  if (crop_height == 0 || crop_width == 0 || source_height == 0 || source_width == 0) {
    throw ContractError("CropSpec: all dimensions must be positive");
  }
  if (crop_height > source_height || crop_width > source_width) {
    throw ContractError("CropSpec: crop " + std::to_string(crop_height) + "x" + std::to_string(crop_width) +
                        " larger than source " + std::to_string(source_height) + "x" + std::to_string(source_width));
  }
}

namespace {

void check_source(const Image& image, const CropSpec& spec) {
  spec.validate();
  if (image.height != spec.source_height || image.width != spec.source_width ||
      image.pixels.size() != image.height * image.width) {
    throw ShapeError("crop: image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                     " does not match source " + std::to_string(spec.source_height) + "x" +
                     std::to_string(spec.source_width));
  }
}

}  // namespace

CropOffset draw_offset(const CropSpec& spec, Rng& rng) {
  spec.validate();
  CropOffset off;
  off.row = rng.index(spec.source_height - spec.crop_height + 1);
  off.col = rng.index(spec.source_width - spec.crop_width + 1);
  return off;
}

Image crop_at(const Image& image, const CropSpec& spec, CropOffset offset) {
  check_source(image, spec);
  if (offset.row + spec.crop_height > spec.source_height || offset.col + spec.crop_width > spec.source_width) {
    throw ContractError("crop_at: offset outside the valid range");
  }
  Image out;
  out.height = spec.crop_height;
  out.width = spec.crop_width;
  out.pixels.resize(out.height * out.width);
  for (std::size_t r = 0; r < out.height; ++r) {
    const auto src = image.pixels.begin() + static_cast<std::ptrdiff_t>((offset.row + r) * image.width + offset.col);
    std::copy(src, src + static_cast<std::ptrdiff_t>(out.width),
              out.pixels.begin() + static_cast<std::ptrdiff_t>(r * out.width));
  }
  return out;
}

Image random_crop(const Image& image, const CropSpec& spec, Rng& rng) {
  check_source(image, spec);
  return crop_at(image, spec, draw_offset(spec, rng));
}

Image center_crop(const Image& image, const CropSpec& spec) {
  check_source(image, spec);
  return crop_at(image, spec,
                 {(spec.source_height - spec.crop_height) / 2, (spec.source_width - spec.crop_width) / 2});
}

AugmentedBatch make_pairs(std::span<const Image> observations, const CropSpec& spec, Rng& rng) {
  if (observations.empty()) throw ContractError("make_pairs: empty observation batch");
  AugmentedBatch batch;
  batch.anchors.reserve(observations.size());
  batch.positives.reserve(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    batch.anchors.push_back(random_crop(observations[i], spec, rng));
    batch.positives.push_back(random_crop(observations[i], spec, rng));
    batch.source_index.push_back(i);
  }
  return batch;
}

Tensor stack_images(std::span<const Image> images) {
  if (images.empty()) throw ShapeError("stack_images: no images");
  const std::size_t n = images.front().pixels.size();
  std::vector<double> data;
  data.reserve(images.size() * n);
  for (const Image& img : images) {
    if (img.pixels.size() != n) throw ShapeError("stack_images: images differ in size");
    data.insert(data.end(), img.pixels.begin(), img.pixels.end());
  }
  return Tensor(Shape{images.size(), n}, std::move(data));
}

}  // namespace curled
