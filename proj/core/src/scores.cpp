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

#include "curled/scores.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "curled/errors.hpp"

namespace curled {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    out.push_back(trim(line.substr(begin, comma == std::string_view::npos ? std::string_view::npos : comma - begin)));
    if (comma == std::string_view::npos) return out;
    begin = comma + 1;
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::size_t ScoreTable::column(std::string_view algorithm) const {
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    if (algorithms[i] == algorithm) return i;
  }
  throw ContractError("score table has no algorithm '" + std::string(algorithm) + "'");
}

ScoreTable parse_score_table(std::string_view text) {
  ScoreTable table;
  std::size_t begin = 0;
  std::size_t line_no = 0;
  bool header = true;
  while (begin < text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(begin, end - begin));
    begin = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_row(line);
    if (header) {
      if (fields.size() < 2 || fields[0] != "task") {
        throw IoError("score table line 1: header must be 'task,<algorithm>,...'");
      }
      for (std::size_t i = 1; i < fields.size(); ++i) table.algorithms.emplace_back(fields[i]);
      header = false;
      continue;
    }
    if (fields.size() != table.algorithms.size() + 1) {
      throw IoError("score table line " + std::to_string(line_no) + ": expected " +
                    std::to_string(table.algorithms.size() + 1) + " fields, found " + std::to_string(fields.size()));
    }
    std::vector<std::optional<double>> row;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (fields[i].empty()) {
        row.emplace_back();
        continue;
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), v);
      if (ec != std::errc() || ptr != fields[i].data() + fields[i].size()) {
        throw IoError("score table line " + std::to_string(line_no) + ": '" + std::string(fields[i]) +
                      "' is not a number");
      }
      row.push_back(v);
    }
    if (fields[0] == kMeanRow) {
      table.reference_mean = std::move(row);
    } else if (fields[0] == kMedianRow) {
      table.reference_median = std::move(row);
    } else {
      table.tasks.emplace_back(fields[0]);
      table.scores.push_back(std::move(row));
    }
  }
  if (header) throw IoError("score table: missing header");
  return table;
}

ScoreTable read_score_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("score table: cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_score_table(text.str());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::vector<ScoreSummary> aggregate_scores(const ScoreTable& table) {
  if (table.tasks.empty()) throw ContractError("aggregate_scores: table has no tasks");
  std::vector<ScoreSummary> out;
  for (std::size_t a = 0; a < table.algorithms.size(); ++a) {
    std::vector<double> column;
    for (std::size_t t = 0; t < table.tasks.size(); ++t) {
      const auto& cell = table.scores.at(t).at(a);
      if (!cell) {
        throw ContractError("aggregate_scores: missing score for task '" + table.tasks[t] + "', algorithm '" +
                            table.algorithms[a] + "'");
      }
      column.push_back(*cell);
    }
    // Sorted summation keeps the mean independent of row order.
    std::sort(column.begin(), column.end());
    double total = 0.0;
    for (double v : column) total += v;
    const std::size_t n = column.size();
    ScoreSummary s;
    s.algorithm = table.algorithms[a];
    s.mean = total / static_cast<double>(n);
    s.median = n % 2 == 1 ? column[n / 2] : (column[n / 2 - 1] + column[n / 2]) / 2.0;
    out.push_back(s);
  }
  return out;
}

DiscrepancyReport compare_with_reference(const ScoreTable& table, const std::vector<ScoreSummary>& summary,
                                         double tolerance) {
  DiscrepancyReport report;
  auto printed = [&](const std::optional<std::vector<std::optional<double>>>& row, std::size_t a) {
    return row ? row->at(a) : std::nullopt;
  };
  for (std::size_t a = 0; a < summary.size(); ++a) {
    const auto mean_ref = printed(table.reference_mean, a);
    const auto median_ref = printed(table.reference_median, a);
    const ScoreSummary& s = summary[a];
    if (mean_ref && std::abs(*mean_ref - s.mean) > tolerance) {
      report.mismatches.push_back({s.algorithm, "mean", s.mean, *mean_ref});
    }
    if (median_ref && std::abs(*median_ref - s.median) > tolerance) {
      report.mismatches.push_back({s.algorithm, "median", s.median, *median_ref});
    }
    if (mean_ref && median_ref && std::abs(*mean_ref - s.median) <= tolerance &&
        std::abs(*median_ref - s.mean) <= tolerance &&
        (std::abs(*mean_ref - s.mean) > tolerance || std::abs(*median_ref - s.median) > tolerance)) {
      report.swapped.push_back(s.algorithm);
    }
  }
  return report;
}

std::string format_summary(const std::vector<ScoreSummary>& summary) {
  std::string out = "algorithm,mean,median\n";
  for (const auto& s : summary) out += s.algorithm + "," + fmt(s.mean) + "," + fmt(s.median) + "\n";
  return out;
}

std::string format_report(const DiscrepancyReport& report) {
  if (report.mismatches.empty()) return "summary rows agree with recomputation\n";
  std::string out;
  for (const auto& d : report.mismatches) {
    out += "mismatch: " + d.algorithm + " " + d.statistic + " recomputed " + fmt(d.recomputed) + ", printed " +
           fmt(d.printed) + "\n";
  }
  for (const auto& a : report.swapped) out += "swapped: " + a + " printed mean and median rows are transposed\n";
  return out;
}

}  // namespace curled
