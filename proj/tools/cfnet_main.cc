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

// cfnet command-line interface: train, eval, explain, serve, bench, synth.
//
// Exit codes: 0 success, 1 usage error, 2 data or format error.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cfnet/artifact.h"
#include "cfnet/baselines.h"
#include "cfnet/dataset.h"
#include "cfnet/errors.h"
#include "cfnet/evaluation.h"
#include "cfnet/service.h"
#include "cfnet/training.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

using cfnet::Dataset;
using nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw cfnet::FormatError("cannot write " + path);
  out << text;
}

Dataset load_dataset(const std::string& path, const cfnet::FeatureSchema& schema) {
  return cfnet::encode_table(cfnet::read_csv(path), schema);
}

struct TrainArgs {
  std::string data, schema, config, out, loss_csv;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;
};

int run_train(const TrainArgs& a) {
  const cfnet::TrainConfig config =
      a.config.empty() ? cfnet::TrainConfig{} : cfnet::TrainConfig::load(a.config);
  const cfnet::SchemaDeclaration decl = cfnet::SchemaDeclaration::load(a.schema);
  const cfnet::RawTable table = cfnet::read_csv(a.data);
  const cfnet::TrainTestSplit sp = cfnet::split(table, decl, a.test_fraction, a.split_seed);
  std::cerr << "training " << cfnet::mode_name(config.mode) << " on " << sp.train.size()
            << " rows, testing on " << sp.test.size() << "\n";
  cfnet::TrainResult r = cfnet::train(sp.train, config, &sp.test);
  if (!a.loss_csv.empty()) write_text(a.loss_csv, r.report.to_csv());
  cfnet::EvalOptions opts;
  opts.bench_repeats = 0;
  const cfnet::MetricsReport m = cfnet::evaluate_model(r.model, sp.test, sp.train.x, opts);
  cfnet::save_model(r.model, a.out, config.to_json(), m.to_json());
  std::cout << m.to_json().dump(2) << "\n";
  return 0;
}

struct EvalArgs {
  std::string model, data, report, train, cost_invalidity, attack_sweep;
  std::size_t vanillacf_rows = 0;
  double b = 2.0;
  bool unconstrained = false;
};

int run_eval(const EvalArgs& a) {
  const cfnet::ModelArtifact art = cfnet::load_model(a.model);
  const cfnet::CounterNet& model = art.model;
  const Dataset test = load_dataset(a.data, model.schema());
  const Dataset reference = a.train.empty() ? test : load_dataset(a.train, model.schema());
  cfnet::EvalOptions opts;
  opts.b = a.b;
  opts.respect_immutable = !a.unconstrained;
  const cfnet::MetricsReport m = cfnet::evaluate_model(model, test, reference.x, opts);
  nlohmann::ordered_json report = m.to_json();

  if (!a.cost_invalidity.empty()) {
    std::vector<cfnet::MethodResult> methods{{"CounterNet", m.validity, m.proximity}};
    if (a.vanillacf_rows > 0) {
      const std::size_t n = std::min(a.vanillacf_rows, test.size());
      std::vector<std::size_t> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
      const cfnet::Tensor x = cfnet::gather_rows(test.x, idx);
      const cfnet::Tensor cf = cfnet::vanillacf_explain_all(model, x);
      methods.push_back({"VanillaCF", cfnet::validity(model, x, cf), cfnet::proximity(x, cf)});
    }
    const auto rows = cfnet::cost_invalidity_report(methods);
    write_text(a.cost_invalidity, cfnet::cost_invalidity_csv(rows));
    report["cost_invalidity"] = cfnet::cost_invalidity_json(rows);
  }
  if (!a.attack_sweep.empty()) {
    cfnet::AttackConfig pgd;
    const auto points = cfnet::perturbation_stability(model, test.x, test.labels,
                                                      cfnet::AttackKind::kPgd,
                                                      cfnet::default_epsilon_grid(), pgd);
    write_text(a.attack_sweep, cfnet::stability_csv(points));
  }
  const std::string text = report.dump(2) + "\n";
  if (a.report.empty()) {
    std::cout << text;
  } else {
    write_text(a.report, text);
  }
  return 0;
}

struct ExplainArgs {
  std::string model, instance;
  bool json = false;
  bool unconstrained = false;
};

int run_explain(const ExplainArgs& a) {
  const cfnet::ModelArtifact art = cfnet::load_model(a.model);
  const cfnet::ExplanationService service(art.model);
  std::string text = a.instance;
  if (!text.empty() && text.front() != '{') {
    std::ifstream in(text);
    if (!in) throw cfnet::FormatError("cannot open instance file " + text);
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  json instance;
  try {
    instance = json::parse(text);
  } catch (const json::exception& e) {
    throw cfnet::FormatError(std::string("instance is not valid JSON: ") + e.what());
  }
  if (instance.is_object() && instance.contains("instance")) instance = instance["instance"];
  const nlohmann::ordered_json rec =
      service.explain(service.parse_instance(instance), !a.unconstrained);
  if (a.json) {
    std::cout << rec.dump(2) << "\n";
    return 0;
  }
  std::cout << "prediction: " << rec["prediction"]["label"].get<std::string>() << " (p="
            << rec["prediction"]["probability"].get<double>() << ")\n";
  std::cout << "counterfactual prediction: " << rec["cf_prediction"]["label"].get<std::string>()
            << (rec["valid"].get<bool>() ? "" : "  [not a valid counterfactual]") << "\n";
  for (const auto& c : rec["changed_features"]) {
    std::cout << "  change " << c["name"].get<std::string>() << ": " << c["from"].dump()
              << " -> " << c["to"].dump() << "\n";
  }
  return 0;
}

cfnet::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int run_serve(const std::string& model_path, const std::string& host, int port) {
  const cfnet::ModelArtifact art = cfnet::load_model(model_path);
  const cfnet::ExplanationService service(art.model);
  cfnet::HttpServer server(service);
  const int bound = server.bind(host, port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serving on http://" << host << ":" << bound << "\n";
  server.listen();
  g_server = nullptr;
  return 0;
}

int run_bench(const std::string& model_path, const std::string& data, std::size_t repeats,
              std::size_t rows) {
  const cfnet::ModelArtifact art = cfnet::load_model(model_path);
  const Dataset ds = load_dataset(data, art.model.schema());
  const std::size_t n = std::min(rows, ds.size());
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  const double ms = cfnet::runtime_bench(art.model, cfnet::gather_rows(ds.x, idx), repeats);
  std::cout << nlohmann::ordered_json{{"rows", n}, {"repeats", repeats}, {"mean_runtime_ms", ms}}
                   .dump(2)
            << "\n";
  return 0;
}

int run_synth(std::size_t rows, std::uint64_t seed, const std::string& data,
              const std::string& schema, bool immutable_region) {
  cfnet::SyntheticTable t = cfnet::synthesize_table(rows, seed);
  if (immutable_region) t.declaration.feature("region").immutable = true;
  cfnet::write_csv(t.table, data);
  write_text(schema, t.declaration.to_json().dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cfnet: counterfactual explanations from a jointly trained network"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train a model and save it");
  train->add_option("--data", ta.data, "CSV with header")->required();
  train->add_option("--schema", ta.schema, "schema JSON")->required();
  train->add_option("--config", ta.config, "key = value training config");
  train->add_option("--out", ta.out, "model file to write")->required();
  train->add_option("--loss-csv", ta.loss_csv, "per-epoch loss report");
  train->add_option("--test-fraction", ta.test_fraction, "held-out fraction")->capture_default_str();
  train->add_option("--split-seed", ta.split_seed, "seed of the train/test split")
      ->capture_default_str();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "evaluate a model on labelled data");
  eval->add_option("--model", ea.model)->required();
  eval->add_option("--data", ea.data)->required();
  eval->add_option("--report", ea.report, "report JSON (stdout when omitted)");
  eval->add_option("--train", ea.train, "training CSV for the manifold distance");
  eval->add_option("--cost-invalidity", ea.cost_invalidity, "cost-invalidity CSV");
  eval->add_option("--vanillacf-rows", ea.vanillacf_rows,
                   "rows searched by VanillaCF for the cost-invalidity report");
  eval->add_option("--attack-sweep", ea.attack_sweep, "PGD stability sweep CSV");
  eval->add_option("--b", ea.b, "second-order threshold")->capture_default_str();
  eval->add_flag("--unconstrained", ea.unconstrained, "do not project immutable features");

  ExplainArgs xa;
  auto* explain = app.add_subcommand("explain", "explain one instance");
  explain->add_option("--model", xa.model)->required();
  explain->add_option("--instance", xa.instance, "instance JSON or a path to one")->required();
  explain->add_flag("--json", xa.json, "print the full record as JSON");
  explain->add_flag("--unconstrained", xa.unconstrained, "do not project immutable features");

  std::string serve_model, host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "serve the HTTP API");
  serve->add_option("--model", serve_model)->required();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();

  std::string bench_model, bench_data;
  std::size_t repeats = 5, bench_rows = 200;
  auto* bench = app.add_subcommand("bench", "time single-instance inference");
  bench->add_option("--model", bench_model)->required();
  bench->add_option("--data", bench_data)->required();
  bench->add_option("--repeats", repeats)->capture_default_str();
  bench->add_option("--rows", bench_rows)->capture_default_str();

  std::size_t synth_rows = 5000;
  std::uint64_t synth_seed = 0;
  std::string synth_data, synth_schema;
  bool immutable_region = false;
  auto* synth = app.add_subcommand("synth", "write the synthetic dataset");
  synth->add_option("--rows", synth_rows)->capture_default_str();
  synth->add_option("--seed", synth_seed)->capture_default_str();
  synth->add_option("--data", synth_data)->required();
  synth->add_option("--schema", synth_schema)->required();
  synth->add_flag("--immutable-region", immutable_region, "declare region immutable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) return run_train(ta);
    if (*eval) return run_eval(ea);
    if (*explain) return run_explain(xa);
    if (*serve) return run_serve(serve_model, host, port);
    if (*bench) return run_bench(bench_model, bench_data, repeats, bench_rows);
    if (*synth) return run_synth(synth_rows, synth_seed, synth_data, synth_schema, immutable_region);
  } catch (const cfnet::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const cfnet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
