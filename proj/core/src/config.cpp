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

#include "curled/config.hpp"

#include <fstream>
#include <sstream>

#include "curled/env.hpp"
#include "curled/errors.hpp"
#include "json.hpp"

namespace curled {

using Json = nlohmann::ordered_json;

void TrainConfig::validate() const {
  parse_env(env);
  hyper.validate();
  if (total_env_steps < 0 || warmup_steps < 0) throw ContractError("TrainConfig: step counts must be non-negative");
  if (train_every <= 0) throw ContractError("TrainConfig: train_every must be positive");
  if (!(learning_rate > 0.0)) throw ContractError("TrainConfig: learning_rate must be positive");
  if (batch_size == 0 || sequence_length == 0) throw ContractError("TrainConfig: batch_size and sequence_length must be positive");
  if (sequence_length > static_cast<std::size_t>(kEpisodeLength)) {
    throw ContractError("TrainConfig: sequence_length exceeds the episode length");
  }
  if (buffer_capacity == 0) throw ContractError("TrainConfig: buffer_capacity must be positive");
  if (eval_interval <= 0 || eval_episodes <= 0) throw ContractError("TrainConfig: eval_interval and eval_episodes must be positive");
  if (log_every <= 0) throw ContractError("TrainConfig: log_every must be positive");
  if (latent_dim == 0) throw ContractError("TrainConfig: latent_dim must be positive");
  for (std::size_t h : hidden) {
    if (h == 0) throw ContractError("TrainConfig: hidden layer sizes must be positive");
  }
}

ModelSpec TrainConfig::model_spec() const {
  ModelSpec spec;
  spec.observation_dim = 32 * 32;
  spec.latent_dim = latent_dim;
  spec.action_dim = action_dim(parse_env(env));
  spec.hidden = hidden;
  return spec;
}

namespace {

std::int64_t as_int(const Json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ContractError("config: '" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

std::size_t as_count(const Json& v, const std::string& key) {
  const std::int64_t x = as_int(v, key);
  if (x < 0) throw ContractError("config: '" + key + "' must be non-negative");
  return static_cast<std::size_t>(x);
}

double as_double(const Json& v, const std::string& key) {
  if (!v.is_number()) throw ContractError("config: '" + key + "' must be a number");
  return v.get<double>();
}

std::string as_string(const Json& v, const std::string& key) {
  if (!v.is_string()) throw ContractError("config: '" + key + "' must be a string");
  return v.get<std::string>();
}

void require_object(const Json& v, const std::string& key) {
  if (!v.is_object()) throw ContractError("config: '" + key + "' must be an object");
}

void read_hyper(const Json& j, Hyperparams& h) {
  require_object(j, "hyper");
  for (const auto& [key, v] : j.items()) {
    const std::string path = "hyper." + key;
    if (key == "lambda1") h.lambda1 = as_double(v, path);
    else if (key == "lambda2") h.lambda2 = as_double(v, path);
    else if (key == "lambda3") h.lambda3 = as_double(v, path);
    else if (key == "tau") h.tau = as_double(v, path);
    else if (key == "gamma") h.gamma = as_double(v, path);
    else if (key == "horizon") h.horizon = as_count(v, path);
    else if (key == "momentum") h.momentum = as_double(v, path);
    else if (key == "similarity") h.similarity = parse_similarity(as_string(v, path));
    else throw ContractError("config: unknown key '" + path + "'");
  }
}

void read_model(const Json& j, TrainConfig& c) {
  require_object(j, "model");
  for (const auto& [key, v] : j.items()) {
    const std::string path = "model." + key;
    if (key == "latent_dim") {
      c.latent_dim = as_count(v, path);
    } else if (key == "hidden") {
      if (!v.is_array()) throw ContractError("config: 'model.hidden' must be an array");
      c.hidden.clear();
      for (const auto& h : v) c.hidden.push_back(as_count(h, path));
    } else {
      throw ContractError("config: unknown key '" + path + "'");
    }
  }
}

}  // namespace

TrainConfig parse_config(std::string_view json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw IoError(std::string("config: malformed JSON: ") + e.what());
  }
  require_object(j, "config");
  TrainConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "env") c.env = as_string(v, key);
    else if (key == "total_env_steps") c.total_env_steps = as_int(v, key);
    else if (key == "warmup_steps") c.warmup_steps = as_int(v, key);
    else if (key == "train_every") c.train_every = as_int(v, key);
    else if (key == "learning_rate") c.learning_rate = as_double(v, key);
    else if (key == "batch_size") c.batch_size = as_count(v, key);
    else if (key == "sequence_length") c.sequence_length = as_count(v, key);
    else if (key == "hyper") read_hyper(v, c.hyper);
    else if (key == "buffer_capacity") c.buffer_capacity = as_count(v, key);
    else if (key == "eval_interval") c.eval_interval = as_int(v, key);
    else if (key == "eval_episodes") c.eval_episodes = static_cast<int>(as_int(v, key));
    else if (key == "log_every") c.log_every = as_int(v, key);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(as_count(v, key));
    else if (key == "output_dir") c.output_dir = as_string(v, key);
    else if (key == "model") read_model(v, c);
    else throw ContractError("config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string config_to_json(const TrainConfig& c, bool include_output_dir) {
  Json j;
  j["env"] = c.env;
  j["total_env_steps"] = c.total_env_steps;
  j["warmup_steps"] = c.warmup_steps;
  j["train_every"] = c.train_every;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["sequence_length"] = c.sequence_length;
  j["hyper"] = {
      {"lambda1", c.hyper.lambda1},   {"lambda2", c.hyper.lambda2},   {"lambda3", c.hyper.lambda3},
      {"tau", c.hyper.tau},           {"gamma", c.hyper.gamma},       {"horizon", c.hyper.horizon},
      {"momentum", c.hyper.momentum}, {"similarity", similarity_name(c.hyper.similarity)},
  };
  j["buffer_capacity"] = c.buffer_capacity;
  j["eval_interval"] = c.eval_interval;
  j["eval_episodes"] = c.eval_episodes;
  j["log_every"] = c.log_every;
  j["seed"] = c.seed;
  if (include_output_dir) j["output_dir"] = c.output_dir;
  j["model"] = {{"latent_dim", c.latent_dim}, {"hidden", c.hidden}};
  return j.dump();
}

}  // namespace curled
