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

// Benchmark score tables: per-algorithm task mean and median.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace curled {

inline constexpr std::string_view kMeanRow = "Task Mean";
inline constexpr std::string_view kMedianRow = "Task Median";

/// Tasks x algorithms. Missing cells are nullopt. Summary rows named
/// "Task Mean" / "Task Median" are held apart as printed references.
struct ScoreTable {
  std::vector<std::string> algorithms;
  std::vector<std::string> tasks;
  std::vector<std::vector<std::optional<double>>> scores;  // [task][algorithm]
  std::optional<std::vector<std::optional<double>>> reference_mean;
  std::optional<std::vector<std::optional<double>>> reference_median;

  std::size_t column(std::string_view algorithm) const;
};

/// CSV with header `task,<algo1>,<algo2>,...`.
ScoreTable parse_score_table(std::string_view text);
ScoreTable read_score_table(const std::filesystem::path& path);

struct ScoreSummary {
  std::string algorithm;
  double mean = 0.0;
  double median = 0.0;
};

/// Mean and median of every column; an even count averages the two middle
/// values. Throws ContractError naming the task and algorithm of a missing
/// cell.
std::vector<ScoreSummary> aggregate_scores(const ScoreTable& table);

struct Discrepancy {
  std::string algorithm;
  std::string statistic;  // "mean" or "median"
  double recomputed = 0.0;
  double printed = 0.0;
};

struct DiscrepancyReport {
  std::vector<Discrepancy> mismatches;
  /// Algorithms whose printed mean matches the recomputed median and vice versa.
  std::vector<std::string> swapped;
};

/// Compares recomputed statistics with the table's reference rows.
/// Differences above `tolerance` count as mismatches.
DiscrepancyReport compare_with_reference(const ScoreTable& table, const std::vector<ScoreSummary>& summary,
                                         double tolerance = 0.5);

std::string format_summary(const std::vector<ScoreSummary>& summary);
std::string format_report(const DiscrepancyReport& report);

}  // namespace curled
