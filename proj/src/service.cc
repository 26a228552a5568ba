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

#include "cfnet/service.h"

#include <cmath>

#include "cfnet/dataset.h"
#include "cfnet/errors.h"
#include "cfnet/evaluation.h"
#include "httplib.h"

namespace cfnet {

namespace {

using ojson = nlohmann::ordered_json;

HttpResult unprocessable(const std::string& field, const std::string& message) {
  return {422, ojson{{"error", message}, {"field", field}}};
}

// On failure fills `error` with a 400 response.
bool parse_body(const std::string& body, nlohmann::json& out, HttpResult& error) {
  try {
    out = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    error = {400, ojson{{"error", std::string("malformed JSON: ") + e.what()}}};
    return false;
  }
  if (!out.is_object()) {
    error = {400, ojson{{"error", "request body must be a JSON object"}}};
    return false;
  }
  return true;
}

bool same_span(std::span<const double> a, std::span<const double> b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

}  // namespace

ExplanationService::ExplanationService(CounterNet model) : model_(std::move(model)) {
  if (!model_.has_generator()) throw ConfigError("the service needs a model with a generator");
}

RawRow ExplanationService::parse_instance(const nlohmann::json& instance) const {
  const FeatureSchema& schema = model_.schema();
  if (!instance.is_object()) throw EncodeError("instance", "instance must be a JSON object");
  for (const auto& [key, value] : instance.items()) {
    if (!schema.index_of(key)) throw EncodeError(key, "unknown feature '" + key + "'");
  }
  RawRow row;
  for (const Feature& f : schema.features()) {
    const auto it = instance.find(f.name);
    if (it == instance.end()) throw EncodeError(f.name, "missing feature '" + f.name + "'");
    if (f.is_categorical()) {
      if (!it->is_string()) {
        throw EncodeError(f.name, "feature '" + f.name + "' expects a category string");
      }
      const std::string v = it->get<std::string>();
      if (std::find(f.categories.begin(), f.categories.end(), v) == f.categories.end()) {
        throw EncodeError(f.name, "unseen category '" + v + "' for feature '" + f.name + "'");
      }
      row.emplace_back(v);
    } else {
      if (!it->is_number()) {
        throw EncodeError(f.name, "feature '" + f.name + "' expects a number");
      }
      const double v = it->get<double>();
      if (!std::isfinite(v)) throw EncodeError(f.name, "feature '" + f.name + "' is not finite");
      row.emplace_back(v);
    }
  }
  return row;
}

ojson ExplanationService::instance_json(const RawRow& row) const {
  ojson j = ojson::object();
  for (std::size_t f = 0; f < row.size(); ++f) {
    j[model_.schema().feature(f).name] = raw_to_json(row[f]);
  }
  return j;
}

ojson ExplanationService::prediction_json(std::span<const double> proba) const {
  const std::size_t label = argmax(proba);
  ojson probs = ojson::object();
  const auto& classes = model_.schema().label().classes;
  for (std::size_t c = 0; c < classes.size(); ++c) probs[classes[c]] = proba[c];
  return ojson{{"label", classes[label]}, {"probability", proba[label]}, {"probabilities", probs}};
}

ojson ExplanationService::explain(const RawRow& row, bool respect_immutable) const {
  const FeatureSchema& schema = model_.schema();
  const std::vector<double> enc = encode(row, schema);
  const Tensor x = Tensor::row_vector(enc);
  const Inference inf = model_.infer(x, respect_immutable);
  const Tensor hard = harden(inf.x_cf, schema);
  const Tensor cf_proba = model_.predict_proba(hard);
  const RawRow decoded = decode(hard.row(0), schema);

  RawRow cf_row;
  ojson changed = ojson::array();
  for (std::size_t f = 0; f < row.size(); ++f) {
    const ColumnSpan& s = schema.layout().span(f);
    const bool same = same_span(x.row(0).subspan(s.start, s.len), hard.row(0).subspan(s.start, s.len));
    cf_row.push_back(same ? row[f] : decoded[f]);
    if (!same) {
      changed.push_back({{"name", schema.feature(f).name},
                         {"from", raw_to_json(row[f])},
                         {"to", raw_to_json(decoded[f])}});
    }
  }
  const std::size_t label = argmax(inf.y_hat.row(0));
  const std::size_t cf_label = argmax(cf_proba.row(0));
  ojson rec;
  rec["instance"] = instance_json(row);
  rec["prediction"] = prediction_json(inf.y_hat.row(0));
  rec["counterfactual"] = instance_json(cf_row);
  rec["cf_prediction"] = prediction_json(cf_proba.row(0));
  rec["valid"] = label != cf_label;
  rec["proximity"] = proximity(x, hard);
  rec["changed_features"] = changed;
  rec["respect_immutable"] = respect_immutable;
  return rec;
}

HttpResult ExplanationService::handle_schema() const { return {200, model_.schema().to_json()}; }

HttpResult ExplanationService::handle_predict(const std::string& body) const {
  nlohmann::json req;
  HttpResult err;
  if (!parse_body(body, req, err)) return err;
  if (!req.contains("instance")) return unprocessable("instance", "missing 'instance'");
  try {
    const RawRow row = parse_instance(req["instance"]);
    const Tensor proba = model_.predict_proba(Tensor::row_vector(encode(row, model_.schema())));
    return {200, prediction_json(proba.row(0))};
  } catch (const EncodeError& e) {
    return unprocessable(e.field(), e.what());
  }
}

namespace {

bool read_respect_immutable(const nlohmann::json& req) {
  if (!req.contains("respect_immutable")) return true;
  if (!req["respect_immutable"].is_boolean()) {
    throw EncodeError("respect_immutable", "'respect_immutable' must be true or false");
  }
  return req["respect_immutable"].get<bool>();
}

}  // namespace

HttpResult ExplanationService::handle_explain(const std::string& body) const {
  nlohmann::json req;
  HttpResult err;
  if (!parse_body(body, req, err)) return err;
  if (!req.contains("instance")) return unprocessable("instance", "missing 'instance'");
  try {
    const bool respect = read_respect_immutable(req);
    return {200, explain(parse_instance(req["instance"]), respect)};
  } catch (const EncodeError& e) {
    return unprocessable(e.field(), e.what());
  }
}

HttpResult ExplanationService::handle_whatif(const std::string& body) const {
  nlohmann::json req;
  HttpResult err;
  if (!parse_body(body, req, err)) return err;
  if (!req.contains("instance")) return unprocessable("instance", "missing 'instance'");
  if (!req["instance"].is_object()) return unprocessable("instance", "instance must be an object");
  nlohmann::json merged = req["instance"];
  if (req.contains("edits")) {
    const nlohmann::json& edits = req["edits"];
    if (!edits.is_object()) return unprocessable("edits", "edits must be an object");
    for (const auto& [key, value] : edits.items()) {
      if (!model_.schema().index_of(key)) {
        return unprocessable(key, "edit to unknown feature '" + key + "'");
      }
      merged[key] = value;
    }
  }
  try {
    const bool respect = read_respect_immutable(req);
    return {200, explain(parse_instance(merged), respect)};
  } catch (const EncodeError& e) {
    return unprocessable(e.field(), e.what());
  }
}

struct HttpServer::Impl {
  const ExplanationService& service;
  httplib::Server server;
  explicit Impl(const ExplanationService& s) : service(s) {}
};

HttpServer::HttpServer(const ExplanationService& service)
    : impl_(std::make_unique<Impl>(service)) {
  httplib::Server& srv = impl_->server;
  const ExplanationService* svc = &impl_->service;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  auto reply = [](httplib::Response& res, const HttpResult& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  srv.Get("/v1/schema", [svc, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, svc->handle_schema());
  });
  srv.Post("/v1/predict", [svc, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc->handle_predict(req.body));
  });
  srv.Post("/v1/explain", [svc, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc->handle_explain(req.body));
  });
  srv.Post("/v1/whatif", [svc, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc->handle_whatif(req.body));
  });
  srv.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  srv.set_exception_handler([reply](const httplib::Request&, httplib::Response& res,
                                    std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, {500, ojson{{"error", what}}});
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind to " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error("cannot bind to " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace cfnet
