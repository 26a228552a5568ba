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

#include "cfnet/evaluation.h"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "cfnet/errors.h"

namespace cfnet {

namespace {

void require_aligned(const Tensor& x, const Tensor& x_cf, const char* what) {
  if (!x.same_shape(x_cf)) {
    throw DimensionError(std::string(what) + ": " + x.shape_string() + " vs " +
                         x_cf.shape_string());
  }
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc;
}

}  // namespace

double predictive_accuracy(const CounterNet& model, const Dataset& data) {
  if (data.size() == 0) throw ConfigError("accuracy of an empty dataset");
  const std::vector<std::size_t> pred = model.predict_labels(data.x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.labels[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

double validity(const CounterNet& model, const Tensor& x, const Tensor& x_cf) {
  require_aligned(x, x_cf, "validity");
  if (x.rows() == 0) return 0.0;
  const std::vector<std::size_t> a = model.predict_labels(x);
  const std::vector<std::size_t> b = model.predict_labels(x_cf);
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < a.size(); ++i) flipped += a[i] != b[i];
  return static_cast<double>(flipped) / static_cast<double>(a.size());
}

double proximity(const Tensor& x, const Tensor& x_cf) {
  require_aligned(x, x_cf, "proximity");
  if (x.empty()) return 0.0;
  return proximity_l1(x, x_cf) / static_cast<double>(x.cols());
}

double proximity_l1(const Tensor& x, const Tensor& x_cf) {
  require_aligned(x, x_cf, "proximity");
  if (x.rows() == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) acc += l1_distance(x.row(i), x_cf.row(i));
  return acc / static_cast<double>(x.rows());
}

double sparsity(const Tensor& x, const Tensor& x_cf, const FeatureSchema& schema) {
  require_aligned(x, x_cf, "sparsity");
  if (x.rows() == 0) return 0.0;
  const std::size_t m = schema.features().size();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const RawRow a = decode(x.row(i), schema);
    const RawRow b = decode(x_cf.row(i), schema);
    std::size_t changed = 0;
    for (std::size_t f = 0; f < m; ++f) {
      if (schema.feature(f).is_categorical()) {
        changed += std::get<std::string>(a[f]) != std::get<std::string>(b[f]);
      } else {
        changed += std::abs(std::get<double>(a[f]) - std::get<double>(b[f])) > kChangeTolerance;
      }
    }
    acc += static_cast<double>(changed) / static_cast<double>(m);
  }
  return acc / static_cast<double>(x.rows());
}

double sparsity_encoded(const Tensor& x, const Tensor& x_cf) {
  require_aligned(x, x_cf, "sparsity");
  if (x.empty()) return 0.0;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    changed += std::abs(x[i] - x_cf[i]) > kChangeTolerance;
  }
  return static_cast<double>(changed) / static_cast<double>(x.size());
}

NNIndex::NNIndex(Tensor reference) : reference_(std::move(reference)) {
  if (reference_.rows() == 0) throw ConfigError("nearest-neighbour index needs reference rows");
}

NNIndex::Hit NNIndex::nearest(std::span<const double> query) const {
  if (query.size() != reference_.cols()) throw DimensionError("query width mismatch");
  Hit best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t r = 0; r < reference_.rows(); ++r) {
    const auto row = reference_.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < row.size() && acc < best.distance; ++c) {
      acc += std::abs(row[c] - query[c]);
    }
    if (acc < best.distance) best = {r, acc};
  }
  return best;
}

double manifold_distance(const Tensor& x_cf, const NNIndex& index) {
  if (x_cf.rows() == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < x_cf.rows(); ++i) acc += index.nearest(x_cf.row(i)).distance;
  return acc / static_cast<double>(x_cf.rows());
}

Tensor second_order_cf(const Tensor& x, const Tensor& x_cf, const FeatureSchema& schema,
                       double b) {
  require_aligned(x, x_cf, "second_order");
  if (!(b >= 0.0)) throw ConfigError("second-order threshold b must be >= 0");
  Tensor out = x_cf;
  const EncodedLayout& layout = schema.layout();
  for (std::size_t f = 0; f < layout.num_features(); ++f) {
    if (layout.categorical(f)) continue;
    const Feature& feat = schema.feature(f);
    const std::size_t c = layout.span(f).start;
    const double scale = feat.max - feat.min;
    for (std::size_t r = 0; r < out.rows(); ++r) {
      if (std::abs(x(r, c) - x_cf(r, c)) * scale <= b) out(r, c) = x(r, c);
    }
  }
  return out;
}

SecondOrder second_order(const CounterNet& model, const Tensor& x, const Tensor& x_cf,
                         double b) {
  const Tensor x2 = second_order_cf(x, x_cf, model.schema(), b);
  SecondOrder s;
  s.b = b;
  s.validity = validity(model, x, x2);
  s.proximity = proximity(x, x2);
  s.proximity_l1 = proximity_l1(x, x2);
  s.sparsity = sparsity(x, harden(x2, model.schema()), model.schema());
  return s;
}

double runtime_bench(const CounterNet& model, const Tensor& x, std::size_t repeats) {
  if (repeats == 0) throw ConfigError("runtime_bench needs repeats >= 1");
  if (x.rows() == 0) throw ConfigError("runtime_bench needs at least one row");
  volatile double sink = 0.0;
  {
    const Inference warm = model.infer(Tensor::row_vector(x.row(0)));
    sink = sink + warm.y_hat[0];
  }
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  for (std::size_t rep = 0; rep < repeats; ++rep) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const Inference inf = model.infer(Tensor::row_vector(x.row(i)));
      sink = sink + inf.y_hat[0];
    }
  }
  const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  return ms / static_cast<double>(repeats * x.rows());
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["n"] = n;
  j["accuracy"] = accuracy;
  j["validity"] = validity;
  j["proximity"] = proximity;
  j["sparsity"] = sparsity;
  j["sparsity_encoded"] = sparsity_encoded;
  j["manifold_distance"] = manifold_distance;
  j["mean_runtime_ms"] = mean_runtime_ms;
  j["hardened"] = {{"validity", hard_validity},
                   {"proximity", hard_proximity},
                   {"manifold_distance", hard_manifold_distance}};
  j["second_order"] = {{"b", second_order.b},
                       {"validity", second_order.validity},
                       {"proximity", second_order.proximity},
                       {"proximity_l1", second_order.proximity_l1},
                       {"sparsity", second_order.sparsity}};
  return j;
}

MetricsReport evaluate_model(const CounterNet& model, const Dataset& test, const Tensor& train_x,
                             const EvalOptions& options) {
  if (!model.has_generator()) throw ConfigError("evaluation needs a model with a generator");
  MetricsReport r;
  r.n = test.size();
  const Inference inf = model.infer(test.x, options.respect_immutable);
  const Tensor hard = harden(inf.x_cf, model.schema());
  const NNIndex index(train_x);
  r.accuracy = predictive_accuracy(model, test);
  r.validity = validity(model, test.x, inf.x_cf);
  r.proximity = proximity(test.x, inf.x_cf);
  r.sparsity = sparsity(test.x, hard, model.schema());
  r.sparsity_encoded = sparsity_encoded(test.x, hard);
  r.manifold_distance = manifold_distance(inf.x_cf, index);
  r.hard_validity = validity(model, test.x, hard);
  r.hard_proximity = proximity(test.x, hard);
  r.hard_manifold_distance = manifold_distance(hard, index);
  r.second_order = second_order(model, test.x, inf.x_cf, options.b);
  if (options.bench_repeats > 0) {
    const std::size_t rows = std::min(options.bench_rows, test.size());
    std::vector<std::size_t> idx(rows);
    for (std::size_t i = 0; i < rows; ++i) idx[i] = i;
    r.mean_runtime_ms = runtime_bench(model, gather_rows(test.x, idx), options.bench_repeats);
  }
  return r;
}

std::vector<CostInvalidityRow> cost_invalidity_report(const std::vector<MethodResult>& results) {
  if (results.empty()) throw ConfigError("cost-invalidity report needs at least one method");
  std::vector<CostInvalidityRow> rows;
  for (const MethodResult& m : results) rows.push_back({m.method, 1.0 - m.validity, m.proximity});
  return rows;
}

std::string cost_invalidity_csv(const std::vector<CostInvalidityRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "method,invalidity,proximity\n";
  for (const auto& r : rows) os << r.method << ',' << r.invalidity << ',' << r.proximity << '\n';
  return os.str();
}

nlohmann::ordered_json cost_invalidity_json(const std::vector<CostInvalidityRow>& rows) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    j.push_back({{"method", r.method}, {"invalidity", r.invalidity}, {"proximity", r.proximity}});
  }
  return j;
}

}  // namespace cfnet
