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

// Empirical probes of the gradient conflict between the prediction and
// validity losses, and of predictor smoothness.

#ifndef CFNET_PROBES_H_
#define CFNET_PROBES_H_

#include <cstddef>
#include <functional>
#include <vector>

#include "cfnet/model.h"

namespace cfnet {

struct GradientSample {
  std::size_t row = 0;
  double y = 0.0;       // class-1 target
  double y_hat = 0.0;   // class-1 probability
  double dot = 0.0;     // ∇L1 · ∇L2 over encoder and predictor weights
  double closed_form = 0.0;  // 8 (ŷ - y)(2ŷ - 1) ‖∇ŷ‖²
};

struct GradientProbe {
  std::vector<GradientSample> samples;
  std::size_t skipped = 0;
  double negative_fraction = 0.0;
  double max_closed_form_error = 0.0;
};

// For each row of x whose prediction satisfies |ŷ - y| < 0.5 and 0 < ŷ < 1,
// computes per-sample gradients of L1 = (ŷ - y)^2 and of
// L2 = (ŷ_x - (1 - ŷ_x'))^2 with x' = x, in eval mode. Throws ProbeError
// when no row qualifies. Requires a binary model.
GradientProbe grad_divergence_probe(const CounterNet& model, const Tensor& x,
                                    const std::vector<std::size_t>& labels);

// max over n points x' = x + r·u, u uniform on the unit sphere and r uniform
// in (0, ε], of ‖f(x) - f(x')‖₂ / ‖x - x'‖₂.
using VectorFn = std::function<Tensor(const Tensor& x)>;
double lipschitz_proxy(const VectorFn& f, std::span<const double> x, double epsilon,
                       std::size_t n_samples, Rng& rng);
// Uses the model's class distribution as f.
double lipschitz_proxy(const CounterNet& model, std::span<const double> x, double epsilon,
                       std::size_t n_samples, Rng& rng);
// Mean of the per-row proxy over the rows of x.
double mean_lipschitz_proxy(const CounterNet& model, const Tensor& x, double epsilon,
                            std::size_t n_samples, std::uint64_t seed);

}  // namespace cfnet

#endif  // CFNET_PROBES_H_
