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

// Model files: "CNET1", a little-endian uint32 header length, a JSON header,
// then float32 little-endian weights in partition order h, f, g, each layer
// as W then b, row-major.

#ifndef CFNET_ARTIFACT_H_
#define CFNET_ARTIFACT_H_

#include <string>

#include "cfnet/model.h"
#include "json.hpp"

namespace cfnet {

inline constexpr int kArtifactVersion = 1;

struct ModelArtifact {
  CounterNet model;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json metrics = nlohmann::json::object();
};

std::string serialize_model(const CounterNet& model,
                            const nlohmann::json& config = nlohmann::json::object(),
                            const nlohmann::json& metrics = nlohmann::json::object());
// Throws FormatError on bad magic, version, header, or payload length.
ModelArtifact deserialize_model(const std::string& bytes);

void save_model(const CounterNet& model, const std::string& path,
                const nlohmann::json& config = nlohmann::json::object(),
                const nlohmann::json& metrics = nlohmann::json::object());
ModelArtifact load_model(const std::string& path);

}  // namespace cfnet

#endif  // CFNET_ARTIFACT_H_
