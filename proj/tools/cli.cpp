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

#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>

#include "CLI11.hpp"
#include "curled/config.hpp"
#include "curled/errors.hpp"
#include "curled/evaluate.hpp"
#include "curled/gradcheck.hpp"
#include "curled/plot.hpp"
#include "curled/scores.hpp"
#include "curled/trainer.hpp"

namespace curled::cli {

namespace {

std::string fixed(double v, const char* format = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool audit = false;
};

struct EvalArgs {
  std::string checkpoint;
  std::string env;
  int episodes = 10;
  std::uint64_t seed = 0;
};

struct GradcheckArgs {
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  double tolerance = 1e-4;
};

struct PlotArgs {
  std::string column;
  std::string out;
  std::vector<std::string> inputs;
};

int do_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig config = a.config.empty() ? TrainConfig{} : load_config(a.config);
  if (a.seed) config.seed = *a.seed;
  if (!a.out.empty()) config.output_dir = a.out;
  TrainOptions options;
  options.audit = a.audit;
  const TrainResult r = train(config, options);
  out << "env_steps " << r.env_steps << ", train_steps " << r.train_steps;
  if (r.final_eval_return) out << ", final eval_return " << fixed(*r.final_eval_return);
  out << "\nwrote " << (std::filesystem::path(config.output_dir) / "metrics.csv").string() << " and "
      << (std::filesystem::path(config.output_dir) / "checkpoint.json").string() << "\n";
  return kExitOk;
}

int do_eval(const EvalArgs& a, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const std::string env = a.env.empty() ? ckpt.config.env : a.env;
  const double value = evaluate(ckpt, env, a.episodes, a.seed);
  out << "eval_return " << fixed(value, "%.9g") << " (" << env << ", " << a.episodes << " episodes, seed " << a.seed
      << ")\n";
  return kExitOk;
}

int do_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  const auto results = gradcheck_suite(a.seeds);
  bool ok = true;
  for (const auto& r : results) {
    const bool pass = r.max_relative_error < a.tolerance;
    ok = ok && pass;
    out << r.loss << " max_relative_error " << fixed(r.max_relative_error, "%.3e") << " over " << r.coordinates
        << " coordinates " << (pass ? "ok" : "FAIL") << "\n";
  }
  return ok ? kExitOk : kExitFailure;
}

int do_aggregate(const std::string& csv, std::ostream& out) {
  const ScoreTable table = read_score_table(csv);
  const auto summary = aggregate_scores(table);
  out << format_summary(summary);
  if (table.reference_mean || table.reference_median) out << format_report(compare_with_reference(table, summary));
  return kExitOk;
}

int do_plot(const PlotArgs& a, std::ostream& out) {
  std::vector<std::filesystem::path> paths(a.inputs.begin(), a.inputs.end());
  emit_plot(paths, a.column, a.out);
  out << "wrote " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contrastive latent world model: training, evaluation and reporting", "curled"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train from a JSON config");
  train_cmd->add_option("--config", train_args.config, "TrainConfig JSON")->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", train_args.seed, "Override the config seed");
  train_cmd->add_option("--out", train_args.out, "Override the output directory");
  train_cmd->add_flag("--audit", train_args.audit, "Assert the target encoder only changes through EMA");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint with mean-mode actions");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint.json")->required();
  eval_cmd->add_option("--episodes", eval_args.episodes, "Episodes to average")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval_args.seed, "Episode seed");
  eval_cmd->add_option("--env", eval_args.env, "Environment (defaults to the checkpoint's)");

  GradcheckArgs grad_args;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every loss");
  grad_cmd->add_option("--seeds", grad_args.seeds, "Configuration seeds");
  grad_cmd->add_option("--tolerance", grad_args.tolerance, "Maximum relative error");

  std::string score_csv;
  auto* agg_cmd = app.add_subcommand("aggregate", "Task mean and median per algorithm");
  agg_cmd->add_option("--csv", score_csv, "Score table CSV")->required();

  PlotArgs plot_args;
  auto* plot_cmd = app.add_subcommand("plot", "SVG line chart of a metrics column");
  plot_cmd->add_option("--column", plot_args.column, "Metrics column")->required();
  plot_cmd->add_option("--out", plot_args.out, "Output SVG")->required();
  plot_cmd->add_option("inputs", plot_args.inputs, "metrics.csv files")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "curled: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return do_train(train_args, out);
    if (eval_cmd->parsed()) return do_eval(eval_args, out);
    if (grad_cmd->parsed()) return do_gradcheck(grad_args, out);
    if (agg_cmd->parsed()) return do_aggregate(score_csv, out);
    if (plot_cmd->parsed()) return do_plot(plot_args, out);
  } catch (const Error& e) {
    err << "curled: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace curled::cli
