// Copyright 2026 The cfnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cfnet/artifact.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cfnet/errors.h"

namespace cfnet {

namespace {

constexpr char kMagic[] = "CNET1";
constexpr std::size_t kMagicLen = 5;

static_assert(std::endian::native == std::endian::little,
              "artifact I/O assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

void put_f32(std::string& out, double v) {
  const float f = static_cast<float>(v);
  char buf[4];
  std::memcpy(buf, &f, 4);
  out.append(buf, 4);
}

Partition parse_partition(const std::string& s) {
  if (s == "h") return Partition::kEncoder;
  if (s == "f") return Partition::kPredictor;
  if (s == "g") return Partition::kGenerator;
  throw FormatError("unknown partition '" + s + "'");
}

std::vector<std::size_t> widths(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) {
    throw FormatError(std::string("artifact header lacks architecture.") + key);
  }
  return j[key].get<std::vector<std::size_t>>();
}

}  // namespace

std::string serialize_model(const CounterNet& model, const nlohmann::json& config,
                            const nlohmann::json& metrics) {
  const ModelDims& dims = model.dims();
  nlohmann::ordered_json header;
  header["format_version"] = kArtifactVersion;
  header["schema"] = model.schema().to_json();
  header["architecture"] = {{"wiring", wiring_name(dims.wiring)},
                            {"encoder", dims.encoder},
                            {"predictor", dims.predictor},
                            {"generator", dims.generator}};
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  std::size_t scalars = 0;
  for (const Layer& l : model.layers()) {
    layers.push_back({{"partition", partition_name(l.partition)},
                      {"in", l.weight.value.rows()},
                      {"out", l.weight.value.cols()}});
    scalars += l.weight.value.size() + l.bias.value.size();
  }
  header["layers"] = layers;
  header["payload_floats"] = scalars;
  header["config"] = config;
  header["metrics"] = metrics;
  const std::string text = header.dump();

  std::string out(kMagic, kMagicLen);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out.reserve(out.size() + scalars * 4);
  for (Partition p : {Partition::kEncoder, Partition::kPredictor, Partition::kGenerator}) {
    for (const Layer& l : model.layers()) {
      if (l.partition != p) continue;
      for (double v : l.weight.value.data()) put_f32(out, v);
      for (double v : l.bias.value.data()) put_f32(out, v);
    }
  }
  return out;
}

ModelArtifact deserialize_model(const std::string& bytes) {
  if (bytes.size() < kMagicLen + 4 || bytes.compare(0, kMagicLen, kMagic) != 0) {
    throw FormatError("not a model artifact (bad magic)");
  }
  std::uint32_t header_len = 0;
  std::memcpy(&header_len, bytes.data() + kMagicLen, 4);
  const std::size_t payload_at = kMagicLen + 4 + static_cast<std::size_t>(header_len);
  if (payload_at > bytes.size()) throw FormatError("artifact header is truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + kMagicLen + 4, bytes.begin() + static_cast<long>(payload_at));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("artifact header is not valid JSON: ") + e.what());
  }
  if (!header.is_object() || !header.contains("format_version") ||
      header["format_version"] != kArtifactVersion) {
    throw FormatError("unsupported artifact format version");
  }
  ModelArtifact art;
  FeatureSchema schema;
  ModelDims dims;
  try {
    schema = FeatureSchema::from_json(header.at("schema"));
    const nlohmann::json& arch = header.at("architecture");
    dims.encoder = widths(arch, "encoder");
    dims.predictor = widths(arch, "predictor");
    dims.generator = widths(arch, "generator");
    dims.wiring = parse_wiring(arch.at("wiring").get<std::string>());
    dims.validate();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed artifact header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("artifact architecture is invalid: ") + e.what());
  } catch (const SchemaError& e) {
    throw FormatError(std::string("artifact schema is invalid: ") + e.what());
  }

  std::vector<Layer> layers;
  std::size_t scalars = 0;
  try {
    for (const auto& lj : header.at("layers")) {
      Layer l;
      l.partition = parse_partition(lj.at("partition").get<std::string>());
      const auto in = lj.at("in").get<std::size_t>();
      const auto out = lj.at("out").get<std::size_t>();
      l.weight = Param(Tensor(in, out), 0);
      l.bias = Param(Tensor(1, out), 0);
      scalars += in * out + out;
      layers.push_back(std::move(l));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed layer table: ") + e.what());
  }
  if (bytes.size() - payload_at != scalars * 4) {
    throw FormatError("artifact payload holds " + std::to_string(bytes.size() - payload_at) +
                      " bytes, header declares " + std::to_string(scalars * 4));
  }
  const char* cursor = bytes.data() + payload_at;
  auto read_into = [&cursor](Tensor& t) {
    for (double& v : t.data()) {
      float f = 0.0f;
      std::memcpy(&f, cursor, 4);
      cursor += 4;
      v = static_cast<double>(f);
    }
  };
  for (Partition p : {Partition::kEncoder, Partition::kPredictor, Partition::kGenerator}) {
    for (Layer& l : layers) {
      if (l.partition != p) continue;
      read_into(l.weight.value);
      read_into(l.bias.value);
    }
  }
  try {
    art.model = CounterNet(std::move(schema), std::move(dims), std::move(layers));
  } catch (const DimensionError& e) {
    throw FormatError(std::string("artifact layers do not match its architecture: ") + e.what());
  }
  if (header.contains("config")) art.config = header["config"];
  if (header.contains("metrics")) art.metrics = header["metrics"];
  return art;
}

void save_model(const CounterNet& model, const std::string& path, const nlohmann::json& config,
                const nlohmann::json& metrics) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write model file " + path);
  const std::string bytes = serialize_model(model, config, metrics);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing model file " + path);
}

ModelArtifact load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace cfnet
