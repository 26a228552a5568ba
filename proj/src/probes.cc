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

#include "cfnet/probes.h"

#include <algorithm>
#include <cmath>

#include "cfnet/errors.h"
#include "cfnet/training.h"

namespace cfnet {

namespace {

std::vector<double> flatten_grads(std::span<Param* const> params) {
  std::vector<double> out;
  for (const Param* p : params) out.insert(out.end(), p->grad.data().begin(), p->grad.data().end());
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Runs `build` on a fresh tape, backpropagates its scalar output, and returns
// the flattened gradients.
template <typename Build>
std::vector<double> gradient_of(std::span<Param* const> params, Build build) {
  zero_grads(params);
  Tape tape;
  Var loss = build(tape);
  tape.backward(loss);
  std::vector<double> g = flatten_grads(params);
  zero_grads(params);
  return g;
}

}  // namespace

GradientProbe grad_divergence_probe(const CounterNet& model_in, const Tensor& x,
                                    const std::vector<std::size_t>& labels) {
  if (model_in.schema().num_classes() != 2) throw ProbeError("probe needs a binary model");
  if (labels.size() != x.rows()) throw DimensionError("probe: one label per row required");
  CounterNet model = model_in;
  std::vector<Param*> params = model.params(Partition::kEncoder);
  for (Param* p : model.params(Partition::kPredictor)) params.push_back(p);
  Rng unused(0);
  const Tensor proba = model.predict_proba(x);

  GradientProbe probe;
  std::size_t negative = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double y_hat = proba(i, 1);
    const double y = static_cast<double>(labels[i]);
    if (!(std::abs(y_hat - y) < 0.5 && y_hat > 0.0 && y_hat < 1.0)) {
      ++probe.skipped;
      continue;
    }
    const Tensor row = Tensor::row_vector(x.row(i));
    auto class1 = [&](Tape& tape) {
      Var z = model.latent(tape, tape.constant(row), 0.0, false, unused);
      return class1_probability(model.predict(tape, z, 0.0, false, unused).second);
    };
    const std::vector<double> g1 = gradient_of(params, [&](Tape& tape) {
      return loss_l1(class1(tape), tape.constant(Tensor(1, 1, y)));
    });
    const std::vector<double> g2 = gradient_of(params, [&](Tape& tape) {
      Var p = class1(tape);
      Var p_cf = class1(tape);
      return loss_l2(p, p_cf);
    });
    const std::vector<double> gy = gradient_of(params, [&](Tape& tape) {
      return ops::sum(class1(tape));
    });
    GradientSample s;
    s.row = i;
    s.y = y;
    s.y_hat = y_hat;
    s.dot = dot(g1, g2);
    s.closed_form = 8.0 * (y_hat - y) * (2.0 * y_hat - 1.0) * dot(gy, gy);
    probe.max_closed_form_error =
        std::max(probe.max_closed_form_error, std::abs(s.dot - s.closed_form));
    negative += s.dot < 0.0;
    probe.samples.push_back(s);
  }
  if (probe.samples.empty()) throw ProbeError("no probe sample satisfies the preconditions");
  probe.negative_fraction =
      static_cast<double>(negative) / static_cast<double>(probe.samples.size());
  return probe;
}

double lipschitz_proxy(const VectorFn& f, std::span<const double> x, double epsilon,
                       std::size_t n_samples, Rng& rng) {
  if (!(epsilon > 0.0)) throw ConfigError("lipschitz_proxy needs epsilon > 0");
  if (n_samples == 0) throw ConfigError("lipschitz_proxy needs at least one sample");
  const std::size_t d = x.size();
  const Tensor x0 = Tensor::row_vector(x);
  const Tensor f0 = f(x0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double best = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    std::vector<double> u(d);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : u) {
        v = normal(rng);
        norm += v * v;
      }
      norm = std::sqrt(norm);
    } while (norm == 0.0);
    double r = 0.0;
    do {
      r = epsilon * (1.0 - unit(rng));
    } while (r == 0.0);
    Tensor xp = x0;
    for (std::size_t c = 0; c < d; ++c) xp[c] += r * u[c] / norm;
    const Tensor fp = f(xp);
    if (!fp.same_shape(f0)) throw DimensionError("lipschitz_proxy: output shape changed");
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < fp.size(); ++c) num += (fp[c] - f0[c]) * (fp[c] - f0[c]);
    for (std::size_t c = 0; c < d; ++c) den += (xp[c] - x0[c]) * (xp[c] - x0[c]);
    if (den > 0.0) best = std::max(best, std::sqrt(num) / std::sqrt(den));
  }
  return best;
}

double lipschitz_proxy(const CounterNet& model, std::span<const double> x, double epsilon,
                       std::size_t n_samples, Rng& rng) {
  return lipschitz_proxy([&model](const Tensor& v) { return model.predict_proba(v); }, x,
                         epsilon, n_samples, rng);
}

double mean_lipschitz_proxy(const CounterNet& model, const Tensor& x, double epsilon,
                            std::size_t n_samples, std::uint64_t seed) {
  if (x.rows() == 0) throw ConfigError("mean_lipschitz_proxy needs rows");
  Rng rng(seed);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    acc += lipschitz_proxy(model, x.row(i), epsilon, n_samples, rng);
  }
  return acc / static_cast<double>(x.rows());
}

}  // namespace cfnet
