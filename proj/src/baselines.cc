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

#include "cfnet/baselines.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cfnet/errors.h"
#include "cfnet/optim.h"

namespace cfnet {

namespace {

constexpr double kLogitClamp = 1e-4;

Tensor initial_logits(std::span<const double> x, const std::vector<OutputHead>& heads) {
  Tensor theta(1, x.size());
  for (const OutputHead& h : heads) {
    for (std::size_t c = h.start; c < h.start + h.len; ++c) {
      if (h.categorical) {
        theta[c] = std::log(std::max(x[c], kLogitClamp));
      } else {
        const double v = std::clamp(x[c], kLogitClamp, 1.0 - kLogitClamp);
        theta[c] = std::log(v / (1.0 - v));
      }
    }
  }
  return theta;
}

void clamp_unit(Tensor& x) {
  for (double& v : x.data()) v = std::clamp(v, 0.0, 1.0);
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

CounterNet train_base_model(const Dataset& data, const TrainConfig& config, LossReport* report) {
  CounterNet model = make_model(config, data.schema, false);
  Trainer trainer(model, config);
  LossReport r = trainer.fit(data);
  if (report != nullptr) *report = std::move(r);
  return model;
}

VanillaCFResult vanillacf_explain(const CounterNet& model, std::span<const double> x,
                                  const VanillaCFConfig& config) {
  if (config.max_steps < 1) throw ConfigError("VanillaCF needs max_steps >= 1");
  if (!(config.lr > 0)) throw ConfigError("VanillaCF lr must be > 0");
  const FeatureSchema& schema = model.schema();
  const std::size_t d = schema.encoded_width();
  const std::size_t k = schema.num_classes();
  if (x.size() != d) throw DimensionError("VanillaCF: instance width mismatch");
  const Tensor x0 = Tensor::row_vector(x);
  const std::size_t pred = argmax(model.predict_proba(x0).row(0));
  const std::size_t target = config.target_class >= 0
                                 ? static_cast<std::size_t>(config.target_class)
                                 : (pred + 1) % k;
  if (target >= k) throw ConfigError("VanillaCF target class out of range");

  VanillaCFResult out;
  out.x_cf = x0;
  if (pred == target) {
    out.flipped = true;
    return out;
  }
  const std::vector<OutputHead> heads = schema.layout().heads();
  Tensor target_row(1, k);
  target_row[target] = 1.0;
  Param theta(initial_logits(x, heads), 0);
  std::vector<Param*> params{&theta};
  AdamState adam(params);
  double best_loss = std::numeric_limits<double>::infinity();
  Tensor best = apply_output_heads(theta.value, heads);
  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    Tape tape;
    Var xc = ops::output_heads(tape.param(theta), heads);
    Var y_hat = model.classify(tape, xc);
    Var fit = k == 2 ? ops::mse(class1_probability(y_hat),
                                tape.constant(Tensor(1, 1, static_cast<double>(target))))
                     : ops::mse(y_hat, tape.constant(target_row));
    Var loss = ops::add(ops::scale_shift(fit, config.lambda), ops::mse(xc, tape.constant(x0)));
    if (loss.value()[0] < best_loss) {
      best_loss = loss.value()[0];
      best = xc.value();
    }
    tape.backward(loss);
    adam.update(params, config.lr);
    theta.zero_grad();
    out.steps = step;
    Tensor current = apply_output_heads(theta.value, heads);
    if (config.harden) current = harden(current, schema);
    if (argmax(model.predict_proba(current).row(0)) == target) {
      out.flipped = true;
      out.x_cf = std::move(current);
      return out;
    }
  }
  out.x_cf = config.harden ? harden(best, schema) : best;
  return out;
}

Tensor vanillacf_explain_all(const CounterNet& model, const Tensor& x,
                             const VanillaCFConfig& config) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const VanillaCFResult r = vanillacf_explain(model, x.row(i), config);
    std::copy(r.x_cf.data().begin(), r.x_cf.data().end(), out.row(i).begin());
  }
  return out;
}

Tensor attack_gradient(const CounterNet& model, const Tensor& x,
                       const std::vector<std::size_t>& labels) {
  if (labels.size() != x.rows()) throw DimensionError("attack: one label per row required");
  Tape tape;
  Var xv = tape.variable(x);
  Var y_hat = model.classify(tape, xv);
  Var loss = ops::mse(y_hat, tape.constant(one_hot(labels, model.schema().num_classes())));
  tape.backward(loss);
  return xv.grad();
}

Tensor fgsm(const CounterNet& model, const Tensor& x, const std::vector<std::size_t>& labels,
            double epsilon) {
  if (!(epsilon >= 0.0)) throw ConfigError("attack epsilon must be >= 0");
  if (epsilon == 0.0) return x;
  const Tensor g = attack_gradient(model, x, labels);
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += epsilon * sign(g[i]);
  clamp_unit(out);
  return out;
}

Tensor pgd(const CounterNet& model, const Tensor& x, const std::vector<std::size_t>& labels,
           const AttackConfig& config) {
  if (!(config.epsilon >= 0.0)) throw ConfigError("attack epsilon must be >= 0");
  if (config.steps < 1) throw ConfigError("PGD needs steps >= 1");
  if (config.epsilon == 0.0) return x;
  const double eps = config.epsilon;
  const double step = config.step_size > 0.0 ? config.step_size : eps / 4.0;
  Tensor cur = x;
  if (config.random_start) {
    Rng rng(config.seed);
    std::uniform_real_distribution<double> u(-eps, eps);
    for (double& v : cur.data()) v += u(rng);
    clamp_unit(cur);
  }
  for (std::size_t s = 0; s < config.steps; ++s) {
    const Tensor g = attack_gradient(model, cur, labels);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const double moved = cur[i] + step * sign(g[i]);
      cur[i] = std::clamp(std::clamp(moved, x[i] - eps, x[i] + eps), 0.0, 1.0);
    }
  }
  return cur;
}

std::vector<StabilityPoint> perturbation_stability(const CounterNet& model, const Tensor& x,
                                                   const std::vector<std::size_t>& labels,
                                                   AttackKind kind,
                                                   const std::vector<double>& epsilons,
                                                   const AttackConfig& pgd_template) {
  const std::vector<std::size_t> clean = model.predict_labels(x);
  std::vector<StabilityPoint> out;
  for (double eps : epsilons) {
    Tensor adv;
    if (kind == AttackKind::kFgsm) {
      adv = fgsm(model, x, labels, eps);
    } else {
      AttackConfig cfg = pgd_template;
      cfg.epsilon = eps;
      adv = pgd(model, x, labels, cfg);
    }
    const std::vector<std::size_t> attacked = model.predict_labels(adv);
    std::size_t same = 0;
    for (std::size_t i = 0; i < clean.size(); ++i) same += attacked[i] == clean[i];
    out.push_back({eps, clean.empty() ? 1.0
                                      : static_cast<double>(same) /
                                            static_cast<double>(clean.size())});
  }
  return out;
}

std::vector<double> default_epsilon_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 100.0);
  return grid;
}

std::string stability_csv(const std::vector<StabilityPoint>& points) {
  std::ostringstream os;
  os.precision(10);
  os << "epsilon,stability\n";
  for (const auto& p : points) os << p.epsilon << ',' << p.stability << '\n';
  return os.str();
}

}  // namespace cfnet
