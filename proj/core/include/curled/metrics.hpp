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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace curled {

inline constexpr std::string_view kMetricsHeader =
    "step,env_steps,loss_total,loss_policy,loss_dynamics,loss_infonce,loss_recon,"
    "gnorm_infonce,gnorm_dynamics,gnorm_recon,eval_return";

/// One metrics CSV row; unmeasured columns are empty.
struct MetricsRecord {
  std::int64_t step = 0;
  std::int64_t env_steps = 0;
  std::optional<double> loss_total;
  std::optional<double> loss_policy;
  std::optional<double> loss_dynamics;
  std::optional<double> loss_infonce;
  std::optional<double> loss_recon;
  std::optional<double> gnorm_infonce;
  std::optional<double> gnorm_dynamics;
  std::optional<double> gnorm_recon;
  std::optional<double> eval_return;

  /// Value columns in header order, loss_total first.
  std::array<std::optional<double>, 9> values() const;
  /// Value of any header column; step and env_steps are returned as doubles.
  std::optional<double> column(std::string_view name) const;

  bool operator==(const MetricsRecord&) const = default;
};

std::vector<std::string> metrics_columns();

/// printf("%.9g"), the rendering used for every float column.
std::string format_metric(double value);

std::string format_metrics(std::span<const MetricsRecord> rows);
/// Rejects unknown headers; malformed rows report their 1-based line.
std::vector<MetricsRecord> parse_metrics(std::string_view text);

void write_metrics(const std::filesystem::path& path, std::span<const MetricsRecord> rows);
std::vector<MetricsRecord> read_metrics(const std::filesystem::path& path);

}  // namespace curled
