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

// JSON request handlers for /v1/schema, /v1/predict, /v1/explain and
// /v1/whatif, plus an HTTP server that routes to them.
//
// Handlers take the raw request body and return a status code with a JSON
// body. 400 means the body is not JSON; 422 means it is JSON but does not
// describe a valid instance, in which case the body is {"error", "field"}.

#ifndef CFNET_SERVICE_H_
#define CFNET_SERVICE_H_

#include <memory>
#include <string>

#include "cfnet/model.h"
#include "json.hpp"

namespace cfnet {

struct HttpResult {
  int status = 200;
  nlohmann::ordered_json body;
};

class ExplanationService {
 public:
  explicit ExplanationService(CounterNet model);

  const CounterNet& model() const { return model_; }

  HttpResult handle_schema() const;
  HttpResult handle_predict(const std::string& body) const;
  HttpResult handle_explain(const std::string& body) const;
  HttpResult handle_whatif(const std::string& body) const;

  // Validates a {feature: value} object against the schema. Throws
  // EncodeError naming the offending feature.
  RawRow parse_instance(const nlohmann::json& instance) const;
  nlohmann::ordered_json instance_json(const RawRow& row) const;
  // The explanation record for one instance.
  nlohmann::ordered_json explain(const RawRow& row, bool respect_immutable) const;

 private:
  nlohmann::ordered_json prediction_json(std::span<const double> proba) const;

  CounterNet model_;
};

// Blocking HTTP front end. Adds permissive CORS headers so a browser client
// on another origin can call the API.
class HttpServer {
 public:
  explicit HttpServer(const ExplanationService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds to host:port; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Serves until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cfnet

#endif  // CFNET_SERVICE_H_
