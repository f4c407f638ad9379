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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "curled/checkpoint.hpp"
#include "curled/config.hpp"
#include "curled/errors.hpp"
#include "curled/evaluate.hpp"
#include "curled/metrics.hpp"
#include "curled/plot.hpp"
#include "curled/scores.hpp"
#include "curled/trainer.hpp"

namespace curled {
namespace {

namespace fs = std::filesystem;

const fs::path kTable = fs::path(CURLED_DATA_DIR) / "dmc_table1.csv";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("curled_evalcli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

int run_cli(const std::vector<std::string>& args, std::string* out = nullptr, std::string* err = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

const ScoreSummary& find(const std::vector<ScoreSummary>& s, std::string_view name) {
  return *std::find_if(s.begin(), s.end(), [&](const ScoreSummary& x) { return x.algorithm == name; });
}

// -- config -----------------------------------------------------------------

TEST(Config, RoundTripsThroughJson) {
  TrainConfig c;
  c.env = "pixel-pendulum";
  c.seed = 17;
  c.hyper.similarity = SimilarityKind::bilinear;
  c.hidden = {7, 9};
  EXPECT_EQ(parse_config(config_to_json(c)), c);
}

TEST(Config, PartialDocumentKeepsDefaults) {
  const TrainConfig c = parse_config(R"({"seed": 3, "hyper": {"tau": 0.2}})");
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.hyper.tau, 0.2);
  EXPECT_EQ(c.hyper.gamma, 0.99);
  EXPECT_EQ(c.batch_size, 16u);
}

TEST(Config, UnknownKeysAreRejected) {
  EXPECT_THROW(parse_config(R"({"sed": 3})"), ContractError);
  EXPECT_THROW(parse_config(R"({"hyper": {"temperature": 0.1}})"), ContractError);
  EXPECT_THROW(parse_config(R"({"model": {"layers": 2}})"), ContractError);
}

TEST(Config, InvalidValuesAreRejected) {
  EXPECT_THROW(parse_config(R"({"hyper": {"tau": 0}})"), ContractError);
  EXPECT_THROW(parse_config(R"({"env": "cartpole"})"), ContractError);
  EXPECT_THROW(parse_config("{not json"), IoError);
}

TEST(Config, ShippedConfigsLoad) {
  const fs::path configs = fs::path(CURLED_DATA_DIR).parent_path() / "configs";
  EXPECT_EQ(load_config(configs / "pointmass.json").env, "pixel-pointmass");
  EXPECT_EQ(load_config(configs / "pendulum.json").env, "pixel-pendulum");
}

// -- metrics ----------------------------------------------------------------

TEST(Metrics, HeaderOnlyRoundTrip) {
  const std::string text = format_metrics({});
  EXPECT_EQ(text, std::string(kMetricsHeader) + "\n");
  EXPECT_TRUE(parse_metrics(text).empty());
}

TEST(Metrics, OneRowRoundTripsExactly) {
  MetricsRecord r;
  r.step = 10;
  r.env_steps = 1040;
  r.loss_total = 1.25;
  r.loss_policy = -0.5;
  r.gnorm_recon = 0.0;
  const std::vector<MetricsRecord> rows{r};
  EXPECT_EQ(parse_metrics(format_metrics(rows)), rows);
}

TEST(Metrics, NineDigitsPreserveValues) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
  std::uniform_int_distribution<int> exponent(-30, 30);
  for (int i = 0; i < 10000; ++i) {
    const double v = mantissa(gen) * std::pow(10.0, exponent(gen));
    double back = 0.0;
    std::istringstream(format_metric(v)) >> back;
    ASSERT_LE(std::abs(back - v), 1e-7 * std::abs(v)) << format_metric(v);
  }
}

TEST(Metrics, MalformedInputNamesTheLine) {
  const std::string header(kMetricsHeader);
  try {
    parse_metrics(header + "\n1,2,x,,,,,,,,\n");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_metrics("step,env\n"), IoError);
  EXPECT_THROW(parse_metrics(header + "\n5,10,,,,,,,,,\n4,10,,,,,,,,,\n"), IoError);
}

TEST(Metrics, ColumnLookup) {
  MetricsRecord r;
  r.env_steps = 12;
  r.eval_return = 3.5;
  EXPECT_EQ(r.column("env_steps"), 12.0);
  EXPECT_EQ(r.column("eval_return"), 3.5);
  EXPECT_FALSE(r.column("loss_total").has_value());
  EXPECT_THROW(r.column("bogus"), ContractError);
}

// -- score aggregation ------------------------------------------------------

TEST(Scores, StoredTableRecomputesExactly) {
  const ScoreTable t = read_score_table(kTable);
  EXPECT_EQ(t.tasks.size(), 20u);
  ASSERT_EQ(t.algorithms.size(), 7u);
  const auto s = aggregate_scores(t);
  EXPECT_EQ(find(s, "Curled-Dreamer").mean, 804.95);
  EXPECT_EQ(find(s, "Curled-Dreamer").median, 863.0);
  EXPECT_EQ(find(s, "PPO").mean, 206.45);
  EXPECT_EQ(find(s, "PPO").median, 94.5);
}

TEST(Scores, PrintedSummaryRowsAreFlaggedAsSwapped) {
  const ScoreTable t = read_score_table(kTable);
  const DiscrepancyReport r = compare_with_reference(t, aggregate_scores(t));
  EXPECT_EQ(r.swapped.size(), 7u);
  EXPECT_FALSE(r.mismatches.empty());
  EXPECT_NE(format_report(r).find("Curled-Dreamer"), std::string::npos);
}

TEST(Scores, SingleTask) {
  const ScoreTable t = parse_score_table("task,A\nonly,42\n");
  const auto s = aggregate_scores(t);
  EXPECT_EQ(s[0].mean, 42.0);
  EXPECT_EQ(s[0].median, 42.0);
}

TEST(Scores, RowOrderDoesNotMatter) {
  const ScoreTable t = read_score_table(kTable);
  const auto base = aggregate_scores(t);
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 20; ++trial) {
    ScoreTable shuffled = t;
    std::vector<std::size_t> order(t.tasks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), gen);
    for (std::size_t i = 0; i < order.size(); ++i) {
      shuffled.tasks[i] = t.tasks[order[i]];
      shuffled.scores[i] = t.scores[order[i]];
    }
    const auto s = aggregate_scores(shuffled);
    for (std::size_t a = 0; a < s.size(); ++a) {
      EXPECT_EQ(s[a].mean, base[a].mean);
      EXPECT_EQ(s[a].median, base[a].median);
    }
  }
}

TEST(Scores, ScalingScalesStatistics) {
  const ScoreTable t = read_score_table(kTable);
  const auto base = aggregate_scores(t);
  for (double c : {0.5, 2.0, 4.0, 0.3, 7.0}) {
    ScoreTable scaled = t;
    for (auto& row : scaled.scores)
      for (auto& cell : row) *cell *= c;
    const auto s = aggregate_scores(scaled);
    const bool exact = c == 0.5 || c == 2.0 || c == 4.0;
    for (std::size_t a = 0; a < s.size(); ++a) {
      if (exact) {
        EXPECT_EQ(s[a].mean, c * base[a].mean);
        EXPECT_EQ(s[a].median, c * base[a].median);
      } else {
        EXPECT_NEAR(s[a].mean, c * base[a].mean, 1e-9 * c * base[a].mean);
        EXPECT_NEAR(s[a].median, c * base[a].median, 1e-9 * c * base[a].median);
      }
    }
  }
}

TEST(Scores, MissingCellNamesTaskAndAlgorithm) {
  const ScoreTable t = parse_score_table("task,A,B\none,1,2\ntwo,3,\n");
  try {
    aggregate_scores(t);
    FAIL();
  } catch (const ContractError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("two"), std::string::npos);
    EXPECT_NE(msg.find("'B'"), std::string::npos);
  }
}

TEST(Scores, SummaryCsv) {
  const std::vector<ScoreSummary> s{{"A", 1.5, 2.0}};
  EXPECT_EQ(format_summary(s), "algorithm,mean,median\nA,1.5,2\n");
}

// -- plotting ---------------------------------------------------------------

std::vector<MetricsRecord> series_rows(double offset) {
  std::vector<MetricsRecord> rows;
  for (int i = 1; i <= 4; ++i) {
    MetricsRecord r;
    r.step = i;
    r.env_steps = i * 100;
    r.loss_total = offset + i;
    rows.push_back(r);
  }
  return rows;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

TEST(Plot, ConstantSeriesIsHorizontal) {
  std::vector<MetricsRecord> rows = series_rows(0);
  for (auto& r : rows) r.loss_total = 2.0;
  const std::vector<PlotSeries> series{{"flat", rows}};
  const std::string svg = render_plot(series, "loss_total");
  const auto begin = svg.find("points=\"") + 8;
  const std::string points = svg.substr(begin, svg.find('"', begin) - begin);
  std::istringstream in(points);
  std::string pair;
  std::set<std::string> ys;
  while (in >> pair) ys.insert(pair.substr(pair.find(',') + 1));
  EXPECT_EQ(ys.size(), 1u);
}

TEST(Plot, OnePolylinePerSeriesAndBalancedTags) {
  const std::vector<PlotSeries> series{{"seed<0>", series_rows(0)}, {"seed&1", series_rows(1)}};
  const std::string svg = render_plot(series, "loss_total");
  EXPECT_EQ(count(svg, "<polyline"), 2u);
  EXPECT_EQ(count(svg, "<svg"), count(svg, "</svg>"));
  EXPECT_EQ(count(svg, "<g "), count(svg, "</g>"));
  EXPECT_EQ(count(svg, "<text"), count(svg, "</text>"));
  EXPECT_NE(svg.find("seed&lt;0&gt;"), std::string::npos);
  EXPECT_NE(svg.find("seed&amp;1"), std::string::npos);
  EXPECT_EQ(svg.find("seed<0>"), std::string::npos);
}

TEST(Plot, UnknownColumnListsColumns) {
  const std::vector<PlotSeries> series{{"a", series_rows(0)}};
  try {
    render_plot(series, "accuracy");
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("eval_return"), std::string::npos);
  }
}

// -- checkpoint and evaluation ---------------------------------------------

Checkpoint tiny_checkpoint() {
  TrainConfig c;
  c.latent_dim = 4;
  c.hidden = {8};
  Rng init(3);
  Checkpoint ck{c, init_model(c.model_spec(), init), {}, Rng(5)};
  ck.optimizer = OptimizerState::for_params(std::as_const(ck.params).trainable());
  ck.optimizer.step = 7;
  ck.optimizer.first_moment[0][0] = 0.125;
  ck.config.output_dir.clear();
  return ck;
}

TEST(Checkpoint, RoundTripIsLossless) {
  const Checkpoint ck = tiny_checkpoint();
  const std::string text = serialize_checkpoint(ck);
  const Checkpoint back = parse_checkpoint(text);
  EXPECT_EQ(back.params, ck.params);
  EXPECT_EQ(back.optimizer, ck.optimizer);
  EXPECT_EQ(back.rng, ck.rng);
  EXPECT_EQ(back.config.latent_dim, 4u);
  EXPECT_EQ(serialize_checkpoint(back), text);
}

TEST(Checkpoint, CorruptDocumentsAreIoErrors) {
  EXPECT_THROW(parse_checkpoint("{"), IoError);
  EXPECT_THROW(parse_checkpoint(R"({"format": "other"})"), IoError);
  std::string text = serialize_checkpoint(tiny_checkpoint());
  text.replace(text.find("encoder"), 7, "encodex");
  EXPECT_THROW(parse_checkpoint(text), IoError);
  EXPECT_THROW(load_checkpoint("/nonexistent/checkpoint.json"), IoError);
}

TEST(Evaluate, DeterministicAndEnvChecked) {
  const Checkpoint ck = tiny_checkpoint();
  const double a = evaluate(ck, "pixel-pointmass", 2, 11);
  EXPECT_EQ(a, evaluate(ck, "pixel-pointmass", 2, 11));
  EXPECT_THROW(evaluate(ck, "pixel-pendulum", 1, 0), ContractError);
}

// -- command line -----------------------------------------------------------

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({"frobnicate"}), cli::kExitUsage);
  EXPECT_EQ(run_cli({"eval"}), cli::kExitUsage);
  EXPECT_EQ(run_cli({"train", "--bogus"}), cli::kExitUsage);
  EXPECT_EQ(run_cli({"--help"}), cli::kExitOk);
}

TEST(Cli, TrainWithZeroStepsWritesArtifacts) {
  const fs::path dir = scratch("train0");
  TrainConfig c;
  c.total_env_steps = 0;
  c.warmup_steps = 0;
  c.latent_dim = 4;
  c.hidden = {8};
  std::ofstream(dir / "config.json") << config_to_json(c);
  const fs::path out = dir / "run";
  EXPECT_EQ(run_cli({"train", "--config", (dir / "config.json").string(), "--out", out.string()}), cli::kExitOk);
  EXPECT_TRUE(fs::exists(out / "metrics.csv"));
  EXPECT_TRUE(fs::exists(out / "checkpoint.json"));

  std::string text;
  EXPECT_EQ(run_cli({"eval", "--checkpoint", (out / "checkpoint.json").string(), "--episodes", "1"}, &text),
            cli::kExitOk);
  EXPECT_FALSE(text.empty());
  EXPECT_EQ(run_cli({"eval", "--checkpoint", (out / "checkpoint.json").string(), "--env", "pixel-pendulum"}),
            cli::kExitFailure);
  fs::remove_all(dir);
}

TEST(Cli, AggregatePrintsSummaryAndReport) {
  std::string text;
  EXPECT_EQ(run_cli({"aggregate", "--csv", kTable.string()}, &text), cli::kExitOk);
  EXPECT_NE(text.find("Curled-Dreamer,804.95,863"), std::string::npos) << text;
  EXPECT_NE(text.find("PPO,206.45,94.5"), std::string::npos);
  EXPECT_EQ(run_cli({"aggregate", "--csv", "/nonexistent.csv"}), cli::kExitFailure);
}

TEST(Cli, GradcheckSingleSeedPasses) {
  std::string text;
  EXPECT_EQ(run_cli({"gradcheck", "--seeds", "0"}, &text), cli::kExitOk);
  EXPECT_EQ(count(text, " ok"), 5u) << text;
}

TEST(Cli, PlotWritesSvg) {
  const fs::path dir = scratch("plot");
  write_metrics(dir / "a.csv", series_rows(0));
  write_metrics(dir / "b.csv", series_rows(2));
  EXPECT_EQ(run_cli({"plot", "--column", "loss_total", "--out", (dir / "p.svg").string(), (dir / "a.csv").string(),
                     (dir / "b.csv").string()}),
            cli::kExitOk);
  EXPECT_EQ(count(slurp(dir / "p.svg"), "<polyline"), 2u);
  EXPECT_EQ(run_cli({"plot", "--column", "nope", "--out", (dir / "q.svg").string(), (dir / "a.csv").string()}),
            cli::kExitFailure);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace curled
