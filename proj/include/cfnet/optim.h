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

#ifndef CFNET_OPTIM_H_
#define CFNET_OPTIM_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cfnet/autodiff.h"

namespace cfnet {

// Global L2 norm over the gradients of `params`.
double global_grad_norm(std::span<Param* const> params);

// Rescales all gradients by threshold/norm when the global norm exceeds
// `threshold`. Returns the factor applied (1.0 when untouched).
double clip_global_norm(std::span<Param* const> params, double threshold);

void zero_grads(std::span<Param* const> params);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam moments for a fixed, ordered set of parameters.
class AdamState {
 public:
  using Hyper = AdamHyper;

  AdamState() = default;
  explicit AdamState(std::span<Param* const> params, Hyper hyper = {});

  std::uint64_t step() const { return step_; }
  const Hyper& hyper() const { return hyper_; }
  std::size_t num_params() const { return ids_.size(); }

  // One bias-corrected Adam step over `params`, which must be the same
  // parameters (ids and shapes) the state was built for.
  void update(std::span<Param* const> params, double lr);

 private:
  Hyper hyper_;
  std::vector<std::size_t> ids_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::uint64_t step_ = 0;
};

inline void adam_update(std::span<Param* const> params, AdamState& state, double lr) {
  state.update(params, lr);
}

}  // namespace cfnet

#endif  // CFNET_OPTIM_H_
