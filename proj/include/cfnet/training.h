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

// Losses, training configuration, and the block-wise trainer.

#ifndef CFNET_TRAINING_H_
#define CFNET_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cfnet/autodiff.h"
#include "cfnet/dataset.h"
#include "cfnet/model.h"
#include "cfnet/optim.h"

namespace cfnet {

// Binary losses act on the class-1 probability column.
Var class1_probability(Var distribution);
// mean (ŷ_x - y)^2
Var loss_l1(Var y_hat, Var y);
// mean (ŷ_x - (1 - ŷ_x'))^2
Var loss_l2(Var y_hat, Var y_hat_cf);
// mean over all entries of (x - x')^2
Var loss_l3(Var x, Var x_cf);
// mean (ŷ_x' - y')^2 over batch and classes. Throws DimensionError when a
// row of `desired` is not one-hot.
Var loss_l2_multiclass(Var y_hat_cf, Var desired);

enum class TrainMode {
  kStandard,
  kBceAblation,
  kSingleBp,
  kSeparate,
  kNoPassP,
  kPosthoc,
  kBlackbox,
  kMulticlass,
  kNoFreeze,
};

std::string mode_name(TrainMode m);
TrainMode parse_mode(const std::string& s);

struct TrainConfig {
  double lambda1 = 1.0;
  double lambda2 = 0.2;
  double lambda3 = 0.1;
  double lr = 0.003;
  std::size_t batch_size = 128;
  std::size_t epochs = 1000;
  double clip = 0.5;
  double dropout = 0.3;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kStandard;
  // Multiclass target class; -1 picks (argmax ŷ_x + 1) mod k per row.
  int desired_class = -1;
  // Copy immutable columns of x into x' before the feedback pass.
  bool enforce_immutable = true;
  // Hidden widths; empty means the defaults of ModelDims::defaults.
  std::vector<std::size_t> encoder_hidden;
  std::size_t latent = 10;
  std::vector<std::size_t> predictor_hidden{10};
  std::vector<std::size_t> generator_hidden;

  // Throws ConfigError on out-of-range values.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  // `key = value` lines, '#' starts a comment. Keys match to_json().
  static TrainConfig parse(const std::string& text);
  static TrainConfig load(const std::string& path);
};

ModelDims model_dims(const TrainConfig& config, const FeatureSchema& schema,
                     bool with_generator = true);
CounterNet make_model(const TrainConfig& config, const FeatureSchema& schema,
                      bool with_generator = true);

struct EpochStats {
  std::size_t epoch = 0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double accuracy = 0.0;
  double validity = 0.0;
};

struct LossReport {
  std::vector<EpochStats> epochs;
  std::string to_csv() const;
};

// Class probabilities (n × k) of a black-box model.
using Surrogate = std::function<Tensor(const Tensor& x)>;

struct StepLosses {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
};

class Trainer {
 public:
  // `model` must outlive the trainer. Blackbox mode requires a surrogate.
  Trainer(CounterNet& model, TrainConfig config, Surrogate surrogate = {});

  // One minibatch update according to the configured mode.
  StepLosses step(const Tensor& x, const Tensor& y);

  // Pass 1: λ1·L1 on encoder and predictor.
  double predictor_pass(const Tensor& x, const Tensor& y);
  // Pass 2: λ2·L2 + λ3·L3 through the full network, applied to the generator
  // only (to all partitions in no-freeze mode). Returns {L2, L3}.
  std::pair<double, double> generator_pass(const Tensor& x, const Tensor& y);
  // Single combined update of λ1·L1 + λ2·L2 + λ3·L3 over all partitions.
  StepLosses joint_pass(const Tensor& x, const Tensor& y);

  // Runs the epoch loop. Accuracy and validity are measured on
  // `validation` when given, else on `train`.
  LossReport fit(const Dataset& train, const Dataset* validation = nullptr);

  const TrainConfig& config() const { return config_; }

 private:
  Tensor l1_targets(const Tensor& x, const Tensor& y) const;
  bool multiclass() const { return config_.mode == TrainMode::kMulticlass; }
  Var prediction_loss(Var y_hat, Var target);
  Var validity_loss(Var y_hat, Var y_hat_cf);
  EpochStats evaluate(const Dataset& data) const;
  void run_epoch(const Dataset& train, int phase, EpochStats& stats);

  CounterNet& model_;
  TrainConfig config_;
  Surrogate surrogate_;
  std::vector<bool> immutable_;
  bool project_ = false;
  Rng shuffle_rng_;
  Rng drop1_rng_;
  Rng drop2_rng_;
  std::vector<Param*> all_;
  std::vector<Param*> predictor_params_;
  std::vector<Param*> generator_params_;
  AdamState adam_predictor_;
  AdamState adam_generator_;
  AdamState adam_all_;
};

struct TrainResult {
  CounterNet model;
  LossReport report;
};

// Builds a model from the config (wiring follows the mode) and fits it.
TrainResult train(const Dataset& data, const TrainConfig& config,
                  const Dataset* validation = nullptr, Surrogate surrogate = {});

// Throws NumericError when a loss is non-finite or above the divergence
// bound.
void check_loss(double value, const char* name);
inline constexpr double kDivergenceBound = 1e6;

}  // namespace cfnet

#endif  // CFNET_TRAINING_H_
