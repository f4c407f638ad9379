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

#include "curled/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "curled/errors.hpp"
#include "json.hpp"

namespace curled {

using Json = nlohmann::ordered_json;

namespace {

// Row-major values nested one array level per axis.
Json nest(std::span<const double> data, const Shape& shape, std::size_t axis, std::size_t& cursor) {
  if (axis == shape.size()) return data[cursor++];
  Json arr = Json::array();
  for (std::size_t i = 0; i < shape[axis]; ++i) arr.push_back(nest(data, shape, axis + 1, cursor));
  return arr;
}

void flatten(const Json& j, const Shape& shape, std::size_t axis, std::vector<double>& out, const std::string& name) {
  if (axis == shape.size()) {
    if (!j.is_number()) throw IoError("checkpoint: non-numeric value in " + name);
    out.push_back(j.get<double>());
    return;
  }
  if (!j.is_array() || j.size() != shape[axis]) {
    throw IoError("checkpoint: data of " + name + " does not match shape " + shape_string(shape));
  }
  for (const auto& e : j) flatten(e, shape, axis + 1, out, name);
}

const Json& member(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw IoError(std::string("checkpoint: missing '") + key + "'");
  return j.at(key);
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  Json j;
  j["format"] = kCheckpointFormat;
  j["config"] = Json::parse(config_to_json(c.config, false));
  Json params = Json::array();
  for (const Param* p : c.params.all()) {
    std::size_t cursor = 0;
    params.push_back({{"name", p->name}, {"shape", p->shape}, {"data", nest(p->data, p->shape, 0, cursor)}});
  }
  j["params"] = std::move(params);
  j["optimizer"] = {{"step", c.optimizer.step},
                    {"first_moment", c.optimizer.first_moment},
                    {"second_moment", c.optimizer.second_moment}};
  j["rng"] = c.rng.serialize();
  return j.dump() + "\n";
}

namespace {

Checkpoint parse_document(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw IoError(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  const Json& format = member(j, "format");
  if (!format.is_string() || format.get<std::string>() != kCheckpointFormat) {
    throw IoError("checkpoint: unsupported format " + format.dump());
  }
  Checkpoint c;
  c.config = parse_config(member(j, "config").dump());
  Rng scratch(0);
  c.params = init_model(c.config.model_spec(), scratch);

  const Json& params = member(j, "params");
  std::vector<Param*> slots = c.params.all();
  if (!params.is_array() || params.size() != slots.size()) {
    throw IoError("checkpoint: expected " + std::to_string(slots.size()) + " parameters");
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    Param& p = *slots[i];
    const Json& entry = params[i];
    if (member(entry, "name").get<std::string>() != p.name) {
      throw IoError("checkpoint: parameter " + std::to_string(i) + " is " + entry.at("name").dump() + ", expected " +
                    p.name);
    }
    if (member(entry, "shape").get<Shape>() != p.shape) {
      throw IoError("checkpoint: shape of " + p.name + " does not match the configured model");
    }
    std::vector<double> data;
    data.reserve(p.data.size());
    flatten(member(entry, "data"), p.shape, 0, data, p.name);
    p.data = std::move(data);
  }

  const Json& opt = member(j, "optimizer");
  c.optimizer.step = member(opt, "step").get<std::int64_t>();
  c.optimizer.first_moment = member(opt, "first_moment").get<std::vector<std::vector<double>>>();
  c.optimizer.second_moment = member(opt, "second_moment").get<std::vector<std::vector<double>>>();
  const std::vector<const Param*> trainable = std::as_const(c.params).trainable();
  if (c.optimizer.first_moment.size() != trainable.size() || c.optimizer.second_moment.size() != trainable.size()) {
    throw IoError("checkpoint: optimizer moments do not match the trainable parameters");
  }
  for (std::size_t i = 0; i < trainable.size(); ++i) {
    if (c.optimizer.first_moment[i].size() != trainable[i]->data.size() ||
        c.optimizer.second_moment[i].size() != trainable[i]->data.size()) {
      throw IoError("checkpoint: optimizer moment size mismatch for " + trainable[i]->name);
    }
  }
  c.rng = Rng::deserialize(member(j, "rng").get<std::string>());
  return c;
}

}  // namespace

Checkpoint parse_checkpoint(std::string_view text) {
  try {
    return parse_document(text);
  } catch (const Json::exception& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string text = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot write " + path.string());
  out << text;
  if (!out) throw IoError("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_checkpoint(text.str());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace curled
