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

// Counterfactual quality metrics, nearest-neighbour search, and runtime
// benchmarking.

#ifndef CFNET_EVALUATION_H_
#define CFNET_EVALUATION_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cfnet/dataset.h"
#include "cfnet/model.h"
#include "json.hpp"

namespace cfnet {

inline constexpr double kChangeTolerance = 1e-9;

double predictive_accuracy(const CounterNet& model, const Dataset& data);
// Fraction of rows whose predicted label on x_cf differs from the one on x.
double validity(const CounterNet& model, const Tensor& x, const Tensor& x_cf);
// (1 / (n·d)) Σ ‖x_i − x'_i‖₁
double proximity(const Tensor& x, const Tensor& x_cf);
// Σ ‖x_i − x'_i‖₁ / n
double proximity_l1(const Tensor& x, const Tensor& x_cf);
// Mean fraction of raw features whose decoded value changed. Continuous
// values count as changed when they differ by more than kChangeTolerance in
// raw units; x_cf should already be hardened.
double sparsity(const Tensor& x, const Tensor& x_cf, const FeatureSchema& schema);
// Same, counted over encoded columns.
double sparsity_encoded(const Tensor& x, const Tensor& x_cf);

// Exhaustive L1 nearest-neighbour search over a copy of the reference rows.
class NNIndex {
 public:
  struct Hit {
    std::size_t index = 0;
    double distance = 0.0;
  };

  explicit NNIndex(Tensor reference);
  Hit nearest(std::span<const double> query) const;
  std::size_t size() const { return reference_.rows(); }

 private:
  Tensor reference_;
};

// Mean L1 distance from each row of x_cf to its nearest reference row.
double manifold_distance(const Tensor& x_cf, const NNIndex& index);

struct SecondOrder {
  double b = 2.0;
  double validity = 0.0;
  double proximity = 0.0;     // normalized as in proximity()
  double proximity_l1 = 0.0;  // unnormalized
  double sparsity = 0.0;
};

// x'' keeps x's value for each continuous feature whose change in raw units
// is at most b and takes x' everywhere else.
Tensor second_order_cf(const Tensor& x, const Tensor& x_cf, const FeatureSchema& schema,
                       double b);
SecondOrder second_order(const CounterNet& model, const Tensor& x, const Tensor& x_cf,
                         double b);

// Mean wall-clock milliseconds to produce one counterfactual with a batch of
// one row, over `repeats` passes through the rows of x.
double runtime_bench(const CounterNet& model, const Tensor& x, std::size_t repeats);

struct MetricsReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  double validity = 0.0;
  double proximity = 0.0;
  double sparsity = 0.0;
  double sparsity_encoded = 0.0;
  double manifold_distance = 0.0;
  double mean_runtime_ms = 0.0;
  // Metrics of the hardened counterfactuals.
  double hard_validity = 0.0;
  double hard_proximity = 0.0;
  double hard_manifold_distance = 0.0;
  SecondOrder second_order;

  nlohmann::ordered_json to_json() const;
};

struct EvalOptions {
  double b = 2.0;
  bool respect_immutable = true;
  // 0 skips the runtime benchmark.
  std::size_t bench_repeats = 1;
  std::size_t bench_rows = 200;
};

// Runs inference on `test` and computes every metric. `train_x` backs the
// manifold distance.
MetricsReport evaluate_model(const CounterNet& model, const Dataset& test, const Tensor& train_x,
                             const EvalOptions& options = {});

struct MethodResult {
  std::string method;
  double validity = 0.0;
  double proximity = 0.0;
};

struct CostInvalidityRow {
  std::string method;
  double invalidity = 0.0;
  double proximity = 0.0;
};

std::vector<CostInvalidityRow> cost_invalidity_report(const std::vector<MethodResult>& results);
std::string cost_invalidity_csv(const std::vector<CostInvalidityRow>& rows);
nlohmann::ordered_json cost_invalidity_json(const std::vector<CostInvalidityRow>& rows);

}  // namespace cfnet

#endif  // CFNET_EVALUATION_H_
