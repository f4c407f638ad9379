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

#include "curled/plot.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <limits>

#include "curled/errors.hpp"

namespace curled {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 20.0;
constexpr double kBottom = 50.0;

constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render_plot(std::span<const PlotSeries> series, std::string_view column) {
  const std::vector<std::string> cols = metrics_columns();
  if (std::find(cols.begin(), cols.end(), column) == cols.end()) {
    std::string listing;
    for (const auto& c : cols) listing += (listing.empty() ? "" : ", ") + c;
    throw ContractError("plot: unknown column '" + std::string(column) + "'; columns: " + listing);
  }

  std::vector<std::vector<std::pair<double, double>>> points(series.size());
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (const MetricsRecord& r : series[s].rows) {
      const auto y = r.column(column);
      if (!y) continue;
      const double x = static_cast<double>(r.env_steps);
      points[s].emplace_back(x, *y);
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, *y);
      ymax = std::max(ymax, *y);
    }
  }
  if (!(xmin <= xmax)) {
    xmin = 0.0;
    xmax = 1.0;
    ymin = 0.0;
    ymax = 1.0;
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * plot_h; };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) + "\" fill=\"white\"/>\n";
  svg += "<g stroke=\"black\" stroke-width=\"1\">\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" + num(kLeft + plot_w) +
         "\" y2=\"" + num(kTop + plot_h) + "\"/>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
         num(kTop + plot_h) + "\"/>\n";
  svg += "</g>\n";
  svg += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    svg += "<text x=\"" + num(px(fx)) + "\" y=\"" + num(kTop + plot_h + 15) + "\" text-anchor=\"middle\">" +
           tick(fx) + "</text>\n";
    svg += "<text x=\"" + num(kLeft - 5) + "\" y=\"" + num(py(fy) + 4) + "\" text-anchor=\"end\">" + tick(fy) +
           "</text>\n";
  }
  svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kHeight - 10) +
         "\" text-anchor=\"middle\" font-size=\"13\">env_steps</text>\n";
  svg += "<text x=\"15\" y=\"" + num(kTop + plot_h / 2) + "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 15 " +
         num(kTop + plot_h / 2) + ")\">" + xml_escape(column) + "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    svg += "<text x=\"" + num(kLeft + 10) + "\" y=\"" + num(kTop + 14 * (s + 1)) + "\" fill=\"" +
           kColors[s % kColors.size()] + "\">" + xml_escape(series[s].label) + "</text>\n";
  }
  svg += "</g>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(kColors[s % kColors.size()]) +
           "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < points[s].size(); ++i) {
      if (i) svg += ' ';
      svg += num(px(points[s][i].first)) + "," + num(py(points[s][i].second));
    }
    svg += "\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void emit_plot(std::span<const std::filesystem::path> metrics_paths, std::string_view column,
               const std::filesystem::path& out) {
  if (metrics_paths.empty()) throw ContractError("plot: no metrics files given");
  std::vector<PlotSeries> series;
  for (const auto& p : metrics_paths) series.push_back({p.string(), read_metrics(p)});
  const std::string svg = render_plot(series, column);
  std::ofstream file(out, std::ios::binary);
  if (!file) throw IoError("plot: cannot write " + out.string());
  file << svg;
  if (!file) throw IoError("plot: write failed for " + out.string());
}

}  // namespace curled
