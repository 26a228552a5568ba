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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>

#include "cfnet/artifact.h"
#include "cfnet/errors.h"
#include "cfnet/training.h"
#include "httplib.h"

namespace cfnet {
namespace {

using json = nlohmann::json;

const ExplanationService& service() {
  static const ExplanationService svc = [] {
    SyntheticTable t = synthesize_table(1500, 41);
    t.declaration.feature("region").immutable = true;
    TrainTestSplit sp = split(t.table, t.declaration, 0.2, 1);
    TrainConfig c;
    c.epochs = 15;
    return ExplanationService(train(sp.train, c).model);
  }();
  return svc;
}

json instance() {
  return {{"income", 42.0}, {"debt", 30.0}, {"employment", "part_time"}, {"region", "south"}};
}

std::string request(const json& inst, const json& extra = json::object()) {
  json body = extra;
  body["instance"] = inst;
  return body.dump();
}

TEST(Service, SchemaEndpoint) {
  HttpResult r = service().handle_schema();
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["features"].size(), 4u);
  EXPECT_EQ(FeatureSchema::from_json(json::parse(r.body.dump())).to_json(),
            service().model().schema().to_json());
}

TEST(Service, PredictReturnsDeclaredClass) {
  HttpResult r = service().handle_predict(request(instance()));
  ASSERT_EQ(r.status, 200);
  const auto& classes = service().model().schema().label().classes;
  const std::string label = r.body["label"];
  EXPECT_NE(std::find(classes.begin(), classes.end(), label), classes.end());
  const double p = r.body["probability"];
  EXPECT_GE(p, 0.0);
  EXPECT_LE(p, 1.0);
}

TEST(Service, ErrorsCarryFieldNames) {
  HttpResult bad = service().handle_predict("{not json");
  EXPECT_EQ(bad.status, 400);
  EXPECT_TRUE(bad.body.contains("error"));
  EXPECT_EQ(service().handle_predict("[1,2]").status, 400);

  json unseen = instance();
  unseen["employment"] = "retired";
  HttpResult r = service().handle_predict(request(unseen));
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["field"], "employment");

  json unknown = instance();
  unknown["shoe_size"] = 9;
  EXPECT_EQ(service().handle_explain(request(unknown)).body["field"], "shoe_size");

  json missing = instance();
  missing.erase("debt");
  EXPECT_EQ(service().handle_explain(request(missing)).body["field"], "debt");

  json wrong_type = instance();
  wrong_type["income"] = "lots";
  EXPECT_EQ(service().handle_predict(request(wrong_type)).body["field"], "income");

  EXPECT_EQ(service().handle_predict("{}").body["field"], "instance");
  EXPECT_EQ(service().handle_explain(request(instance(), {{"respect_immutable", "yes"}}))
                .body["field"],
            "respect_immutable");
  EXPECT_EQ(service()
                .handle_whatif(request(instance(), {{"edits", {{"planet", "mars"}}}}))
                .body["field"],
            "planet");
}

TEST(Service, ExplanationRecordConsistent) {
  Rng rng(5);
  std::uniform_real_distribution<double> inc(20, 100), debt(0, 50);
  const std::vector<std::string> emp{"unemployed", "part_time", "full_time"};
  const std::vector<std::string> reg{"north", "south", "east", "west"};
  for (int i = 0; i < 40; ++i) {
    json inst = {{"income", inc(rng)},
                 {"debt", debt(rng)},
                 {"employment", emp[i % 3]},
                 {"region", reg[i % 4]}};
    HttpResult r = service().handle_explain(request(inst));
    ASSERT_EQ(r.status, 200);
    const auto& rec = r.body;
    EXPECT_EQ(rec["valid"], rec["prediction"]["label"] != rec["cf_prediction"]["label"]);
    EXPECT_EQ(rec["counterfactual"]["region"], inst["region"]);
    for (const auto& ch : rec["changed_features"]) {
      EXPECT_NE(ch["name"], "region");
      EXPECT_EQ(rec["instance"][ch["name"].get<std::string>()], ch["from"]);
      EXPECT_EQ(rec["counterfactual"][ch["name"].get<std::string>()], ch["to"]);
    }
    for (const auto& [name, value] : rec["instance"].items()) {
      bool listed = false;
      for (const auto& ch : rec["changed_features"]) listed = listed || ch["name"] == name;
      if (!listed) {
        EXPECT_EQ(rec["counterfactual"][name], value);
      }
    }
    EXPECT_GE(rec["proximity"].get<double>(), 0.0);
    EXPECT_EQ(service().handle_explain(request(inst)).body, rec);
  }
}

TEST(Service, UnconstrainedMayChangeImmutable) {
  HttpResult r = service().handle_explain(request(instance(), {{"respect_immutable", false}}));
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["respect_immutable"], false);
}

TEST(Service, WhatIfOverlaysEdits) {
  HttpResult plain = service().handle_whatif(request(instance()));
  EXPECT_EQ(plain.body, service().handle_explain(request(instance())).body);
  json edits = {{"debt", 5.0}, {"employment", "full_time"}};
  HttpResult edited = service().handle_whatif(request(instance(), {{"edits", edits}}));
  ASSERT_EQ(edited.status, 200);
  json merged = instance();
  merged["debt"] = 5.0;
  merged["employment"] = "full_time";
  EXPECT_EQ(edited.body["instance"].dump(),
            service().instance_json(service().parse_instance(merged)).dump());
  EXPECT_EQ(edited.body, service().handle_explain(request(merged)).body);
  EXPECT_EQ(service().handle_whatif(request(instance(), {{"edits", edits}})).body, edited.body);
}

TEST(Service, AdoptingCounterfactualFlipsLabel) {
  HttpResult r = service().handle_explain(request(instance()));
  ASSERT_EQ(r.status, 200);
  if (!r.body["valid"].get<bool>()) GTEST_SKIP() << "counterfactual not valid for this instance";
  HttpResult again = service().handle_predict(request(json::parse(r.body["counterfactual"].dump())));
  EXPECT_EQ(again.body["label"], r.body["cf_prediction"]["label"]);
}

TEST(HttpServer, ServesAllRoutesConcurrently) {
  HttpServer server(service());
  const int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread loop([&] { server.listen(); });
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(10, 0);

  auto schema = cli.Get("/v1/schema");
  ASSERT_TRUE(schema);
  EXPECT_EQ(schema->status, 200);
  EXPECT_EQ(schema->get_header_value("Access-Control-Allow-Origin"), "*");

  auto pre = cli.Options("/v1/explain");
  ASSERT_TRUE(pre);
  EXPECT_LT(pre->status, 300);

  const std::string body = request(instance());
  const std::string serial = service().handle_explain(body).body.dump();
  std::vector<std::thread> clients;
  std::vector<std::string> got(6);
  for (int i = 0; i < 6; ++i) {
    clients.emplace_back([&, i] {
      httplib::Client c("127.0.0.1", port);
      auto res = c.Post("/v1/explain", body, "application/json");
      if (res && res->status == 200) got[static_cast<std::size_t>(i)] = res->body;
    });
  }
  for (auto& t : clients) t.join();
  for (const auto& g : got) EXPECT_EQ(g, serial);

  auto p = cli.Post("/v1/predict", body, "application/json");
  ASSERT_TRUE(p);
  EXPECT_EQ(p->status, 200);
  auto w = cli.Post("/v1/whatif", request(instance(), {{"edits", {{"debt", 1.0}}}}),
                    "application/json");
  ASSERT_TRUE(w);
  EXPECT_EQ(w->status, 200);
  auto bad = cli.Post("/v1/predict", "nope", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  auto unproc = cli.Post("/v1/explain", R"({"instance": {"income": 1}})", "application/json");
  ASSERT_TRUE(unproc);
  EXPECT_EQ(unproc->status, 422);
  EXPECT_EQ(json::parse(unproc->body)["field"], "debt");

  server.stop();
  loop.join();
}

// Runs the command-line tool; returns its exit status.
int run_cli(const std::string& args) {
  const std::string cmd = std::string(CFNET_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Cli, WorkflowAndExitCodes) {
  const auto dir = std::filesystem::temp_directory_path() / "cfnet_cli_test";
  std::filesystem::create_directories(dir);
  const std::string d = dir.string();
  EXPECT_EQ(run_cli("synth --rows 400 --seed 3 --data " + d + "/s.csv --schema " + d +
                    "/s.json --immutable-region"),
            0);
  {
    std::ofstream cfg(dir / "c.cfg");
    cfg << "epochs = 2\nbatch_size = 64\n";
  }
  EXPECT_EQ(run_cli("train --data " + d + "/s.csv --schema " + d + "/s.json --config " + d +
                    "/c.cfg --out " + d + "/m.cnet --loss-csv " + d + "/l.csv"),
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "m.cnet"));
  EXPECT_EQ(run_cli("eval --model " + d + "/m.cnet --data " + d + "/s.csv --report " + d +
                    "/r.json"),
            0);
  EXPECT_EQ(run_cli("explain --model " + d + "/m.cnet --json --instance '" + instance().dump() +
                    "'"),
            0);
  EXPECT_EQ(run_cli("bench --model " + d + "/m.cnet --data " + d + "/s.csv --rows 5"), 0);

  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("train --data x.csv"), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("explain --model " + d + "/missing.cnet --instance '{}'"), 2);
  {
    std::ofstream junk(dir / "junk.cnet");
    junk << "not a model";
  }
  EXPECT_EQ(run_cli("explain --model " + d + "/junk.cnet --instance '{}'"), 2);
  json bad = instance();
  bad["region"] = "moon";
  EXPECT_EQ(run_cli("explain --model " + d + "/m.cnet --instance '" + bad.dump() + "'"), 2);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace cfnet
