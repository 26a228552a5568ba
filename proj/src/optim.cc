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

#include "cfnet/optim.h"

#include <cmath>
#include <string>

#include "cfnet/errors.h"

namespace cfnet {

double global_grad_norm(std::span<Param* const> params) {
  double acc = 0.0;
  for (const Param* p : params) acc += squared_norm(p->grad);
  return std::sqrt(acc);
}

double clip_global_norm(std::span<Param* const> params, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("clip threshold must be positive");
  const double norm = global_grad_norm(params);
  if (!(norm > threshold)) return 1.0;
  const double scale = threshold / norm;
  for (Param* p : params) {
    for (double& g : p->grad.data()) g *= scale;
  }
  return scale;
}

void zero_grads(std::span<Param* const> params) {
  for (Param* p : params) p->zero_grad();
}

AdamState::AdamState(std::span<Param* const> params, Hyper hyper) : hyper_(hyper) {
  ids_.reserve(params.size());
  for (const Param* p : params) {
    ids_.push_back(p->id);
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void AdamState::update(std::span<Param* const> params, double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (params.size() != ids_.size()) {
    throw ConfigError("Adam state built for " + std::to_string(ids_.size()) +
                      " params, got " + std::to_string(params.size()));
  }
  ++step_;
  const double b1 = hyper_.beta1, b2 = hyper_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param& p = *params[k];
    if (p.id != ids_[k] || !p.value.same_shape(m_[k])) {
      throw ConfigError("Adam state does not match parameter " + std::to_string(p.id));
    }
    auto w = p.value.data();
    auto g = p.grad.data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + hyper_.epsilon);
    }
  }
}

}  // namespace cfnet
