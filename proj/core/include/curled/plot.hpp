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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "curled/metrics.hpp"

namespace curled {

struct PlotSeries {
  std::string label;
  std::vector<MetricsRecord> rows;
};

/// Self-contained SVG line chart of `column` against env_steps, one
/// polyline per series. Rows where the column is empty are skipped.
std::string render_plot(std::span<const PlotSeries> series, std::string_view column);

/// Reads each metrics file and writes the chart to `out`.
void emit_plot(std::span<const std::filesystem::path> metrics_paths, std::string_view column,
               const std::filesystem::path& out);

std::string xml_escape(std::string_view text);

}  // namespace curled
