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

// Central finite-difference checks shared by the unit and acceptance tests.

#ifndef CFNET_TESTS_GRADCHECK_H_
#define CFNET_TESTS_GRADCHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "cfnet/autodiff.h"
#include "cfnet/model.h"
#include "cfnet/training.h"

namespace cfnet::testing {

// Entries whose analytic and numeric values are both below this are compared
// on an absolute scale.
inline constexpr double kGradFloor = 1e-6;

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

inline double rel_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradFloor});
  return std::abs(analytic - numeric) / denom;
}

// f maps an input leaf to a 1x1 node on the given tape.
using InputGraph = std::function<Var(Tape&, Var)>;

inline GradCheck check_input_gradient(const InputGraph& f, const Tensor& x, double h = 1e-5) {
  Tape tape;
  Var in = tape.variable(x);
  Var out = f(tape, in);
  tape.backward(out);
  const Tensor analytic = in.grad();

  GradCheck result;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    Tape tp;
    const double up = f(tp, tp.constant(probe)).value()[0];
    probe[i] = saved - h;
    Tape tm;
    const double down = f(tm, tm.constant(probe)).value()[0];
    probe[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    result.max_rel_error = std::max(result.max_rel_error, rel_error(analytic[i], numeric));
    ++result.checked;
  }
  return result;
}

// f records a scalar on the tape, binding `params` through tape.param().
using ParamGraph = std::function<Var(Tape&)>;

inline GradCheck check_param_gradient(const ParamGraph& f, const std::vector<Param*>& params,
                                      double h = 1e-5) {
  for (Param* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(f(tape));
  }
  GradCheck result;
  for (Param* p : params) {
    const Tensor analytic = p->grad;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      Tape tp;
      const double up = f(tp).value()[0];
      p->value[i] = saved - h;
      Tape tm;
      const double down = f(tm).value()[0];
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      result.max_rel_error = std::max(result.max_rel_error, rel_error(analytic[i], numeric));
      ++result.checked;
    }
  }
  return result;
}

// λ1·L1 + λ2·L2 + λ3·L3 of a full training-mode pass with dropout off.
inline Var full_objective(CounterNet& model, Tape& tape, const Tensor& x, const Tensor& y,
                          const std::vector<bool>* immutable = nullptr) {
  Rng rng(0);
  Var xv = tape.constant(x);
  ForwardVars fv = model.forward(tape, xv, 0.0, true, rng, immutable);
  Var p = class1_probability(fv.y_hat);
  Var l1 = loss_l1(p, class1_probability(tape.constant(y)));
  Var l2 = loss_l2(p, class1_probability(fv.y_hat_cf));
  Var l3 = loss_l3(xv, fv.x_cf);
  return ops::add(l1, ops::add(ops::scale_shift(l2, 0.2), ops::scale_shift(l3, 0.1)));
}

}  // namespace cfnet::testing

#endif  // CFNET_TESTS_GRADCHECK_H_
