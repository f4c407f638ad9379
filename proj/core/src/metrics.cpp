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

#include "curled/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "curled/errors.hpp"

namespace curled {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(begin));
      return out;
    }
    out.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
}

std::string at_line(std::size_t line) { return "metrics line " + std::to_string(line) + ": "; }

std::int64_t parse_int(std::string_view field, const std::string& column, std::size_t line) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw IoError(at_line(line) + "column " + column + " is not an integer: '" + std::string(field) + "'");
  }
  if (v < 0) throw IoError(at_line(line) + "column " + column + " is negative");
  return v;
}

std::optional<double> parse_value(std::string_view field, const std::string& column, std::size_t line) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw IoError(at_line(line) + "column " + column + " is not a number: '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::array<std::optional<double>, 9> MetricsRecord::values() const {
  return {loss_total,    loss_policy,    loss_dynamics, loss_infonce, loss_recon,
          gnorm_infonce, gnorm_dynamics, gnorm_recon,   eval_return};
}

std::optional<double> MetricsRecord::column(std::string_view name) const {
  if (name == "step") return static_cast<double>(step);
  if (name == "env_steps") return static_cast<double>(env_steps);
  const std::vector<std::string> cols = metrics_columns();
  const auto v = values();
  for (std::size_t i = 2; i < cols.size(); ++i) {
    if (cols[i] == name) return v[i - 2];
  }
  std::string listing;
  for (const auto& c : cols) listing += (listing.empty() ? "" : ", ") + c;
  throw ContractError("unknown metrics column '" + std::string(name) + "'; columns: " + listing);
}

std::vector<std::string> metrics_columns() {
  std::vector<std::string> out;
  for (auto f : split_fields(kMetricsHeader)) out.emplace_back(f);
  return out;
}

std::string format_metric(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

std::string format_metrics(std::span<const MetricsRecord> rows) {
  std::string out(kMetricsHeader);
  out += '\n';
  for (const MetricsRecord& r : rows) {
    out += std::to_string(r.step);
    out += ',';
    out += std::to_string(r.env_steps);
    for (const auto& v : r.values()) {
      out += ',';
      if (v) out += format_metric(*v);
    }
    out += '\n';
  }
  return out;
}

std::vector<MetricsRecord> parse_metrics(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t begin = 0;
  while (begin < text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(begin, end - begin);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    begin = end + 1;
  }
  if (lines.empty()) throw IoError("metrics: missing header");
  if (lines[0] != kMetricsHeader) {
    throw IoError("metrics line 1: unexpected header '" + std::string(lines[0]) + "'");
  }
  const std::vector<std::string> cols = metrics_columns();
  std::vector<MetricsRecord> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) {
      if (i + 1 == lines.size()) break;
      throw IoError(at_line(line_no) + "empty row");
    }
    const auto fields = split_fields(lines[i]);
    if (fields.size() != cols.size()) {
      throw IoError(at_line(line_no) + "expected " + std::to_string(cols.size()) + " fields, found " +
                    std::to_string(fields.size()));
    }
    MetricsRecord r;
    r.step = parse_int(fields[0], cols[0], line_no);
    r.env_steps = parse_int(fields[1], cols[1], line_no);
    std::optional<double>* slots[] = {&r.loss_total,    &r.loss_policy,    &r.loss_dynamics,
                                      &r.loss_infonce,  &r.loss_recon,     &r.gnorm_infonce,
                                      &r.gnorm_dynamics, &r.gnorm_recon,   &r.eval_return};
    for (std::size_t k = 0; k < 9; ++k) *slots[k] = parse_value(fields[k + 2], cols[k + 2], line_no);
    if (!rows.empty() && (r.step < rows.back().step || r.env_steps < rows.back().env_steps)) {
      throw IoError(at_line(line_no) + "step or env_steps decreases");
    }
    rows.push_back(r);
  }
  return rows;
}

void write_metrics(const std::filesystem::path& path, std::span<const MetricsRecord> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("metrics: cannot write " + path.string());
  out << format_metrics(rows);
  if (!out) throw IoError("metrics: write failed for " + path.string());
}

std::vector<MetricsRecord> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("metrics: cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_metrics(text.str());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace curled
