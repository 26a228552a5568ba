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

// The accuracy-only base model, the VanillaCF gradient-search baseline, and
// FGSM/PGD attacks for perturbation stability.

#ifndef CFNET_BASELINES_H_
#define CFNET_BASELINES_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cfnet/dataset.h"
#include "cfnet/model.h"
#include "cfnet/training.h"

namespace cfnet {

// Encoder and predictor only, trained on λ1·L1.
CounterNet train_base_model(const Dataset& data, const TrainConfig& config,
                            LossReport* report = nullptr);

struct VanillaCFConfig {
  std::size_t max_steps = 1000;
  double lr = 0.01;
  double lambda = 1.0;
  bool harden = true;
  // -1 targets the class after the predicted one, i.e. the opposite class
  // for binary labels.
  int target_class = -1;
};

struct VanillaCFResult {
  Tensor x_cf;  // 1 × d
  std::size_t steps = 0;
  bool flipped = false;  // x_cf as returned (hardened if asked) hits the target
};

// Adam search over x' starting at x for the opposite of the model's
// prediction. x' is parameterized through the generator's output heads, so
// categorical spans stay on the simplex and continuous values in (0,1).
// Stops at the first iterate whose returned form reaches the target class;
// otherwise returns the lowest-loss iterate.
VanillaCFResult vanillacf_explain(const CounterNet& model, std::span<const double> x,
                                  const VanillaCFConfig& config = {});
// Row-wise over x.
Tensor vanillacf_explain_all(const CounterNet& model, const Tensor& x,
                             const VanillaCFConfig& config = {});

struct AttackConfig {
  double epsilon = 0.0;
  std::size_t steps = 10;
  double step_size = 0.0;  // <= 0 means ε/4
  bool random_start = true;
  std::uint64_t seed = 0;
};

enum class AttackKind { kFgsm, kPgd };

// Gradient of mean((softmax(f(x)) - onehot(y))^2) with respect to x.
Tensor attack_gradient(const CounterNet& model, const Tensor& x,
                       const std::vector<std::size_t>& labels);
// x + ε·sign(∇), clamped to [0,1].
Tensor fgsm(const CounterNet& model, const Tensor& x, const std::vector<std::size_t>& labels,
            double epsilon);
// Signed steps from a uniform start in the ε-ball, each followed by
// projection into the ball and [0,1].
Tensor pgd(const CounterNet& model, const Tensor& x, const std::vector<std::size_t>& labels,
           const AttackConfig& config);

struct StabilityPoint {
  double epsilon = 0.0;
  double stability = 0.0;
};

// Fraction of rows whose predicted label survives the attack, per ε. PGD
// takes steps, step size, and seed from `pgd_template`.
std::vector<StabilityPoint> perturbation_stability(const CounterNet& model, const Tensor& x,
                                                   const std::vector<std::size_t>& labels,
                                                   AttackKind kind,
                                                   const std::vector<double>& epsilons,
                                                   const AttackConfig& pgd_template = {});
std::vector<double> default_epsilon_grid();
std::string stability_csv(const std::vector<StabilityPoint>& points);

}  // namespace cfnet

#endif  // CFNET_BASELINES_H_
