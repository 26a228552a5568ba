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

// Reverse-mode differentiation over a linear tape.
//
// Every op appends one node holding its forward value and a closure that maps
// the node's output gradient onto its parents. Backward walks the tape in
// exact reverse order of recording, so a replay with the same inputs and RNG
// state is bit-identical. A tape is single-use: backward may run once.

#ifndef CFNET_AUTODIFF_H_
#define CFNET_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "cfnet/tensor.h"

namespace cfnet {

// Trainable tensor. `grad` accumulates across backward calls until zeroed.
struct Param {
  Param() = default;
  Param(Tensor v, std::size_t ordinal)
      : value(std::move(v)), grad(value.rows(), value.cols()), id(ordinal) {}

  void zero_grad() { grad.fill(0.0); }

  Tensor value;
  Tensor grad;
  std::size_t id = 0;
};

class Tape;

// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Tensor& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class Tape {
 public:
  // Receives the gradient of the node's output and pushes it to parents.
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that never receives a gradient.
  Var constant(Tensor value);
  // Leaf whose gradient is kept on the tape (e.g. inputs under attack).
  Var variable(Tensor value);
  // Leaf bound to a Param; backward adds into param.grad.
  Var param(Param& p);

  // Appends an op result. `parents` decide whether the node needs a gradient;
  // when none does, `backward` is dropped.
  Var record(std::string_view op, Tensor value, std::span<const Var> parents,
             BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1. A no-op on
  // an empty tape; throws if called a second time.
  void backward(Var loss);

  // Adds `g` into the gradient slot of node `id` if that node wants one.
  void accumulate(std::size_t id, const Tensor& g);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Param* param = nullptr;
    bool requires_grad = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// Output-layer head: a continuous column squashed by the logistic function,
// or a categorical span normalized by its own softmax.
struct OutputHead {
  std::size_t start = 0;
  std::size_t len = 1;
  bool categorical = false;
};

// Tape-free evaluation of the heads; ops::output_heads records the same values.
Tensor apply_output_heads(const Tensor& logits, std::span<const OutputHead> heads);

namespace ops {

inline constexpr double kLeakySlope = 0.01;

Var affine(Var x, Var weight, Var bias);
Var leaky_relu(Var x, double slope = kLeakySlope);
// Inverted dropout: survivors scaled by 1/(1-rate); identity when !training.
Var dropout(Var x, double rate, bool training, Rng& rng);
Var softmax_rows(Var x);
Var sigmoid(Var x);
Var concat_cols(Var a, Var b);
Var column(Var x, std::size_t c);
// s·x + c elementwise.
Var scale_shift(Var x, double s, double c = 0.0);
Var add(Var a, Var b);
Var sum(Var x);
// Mean over all entries of (a-b)^2, as a 1x1 node.
Var mse(Var a, Var b);
// Mean binary cross-entropy of probabilities p against targets t in [0,1].
Var bce(Var p, Var t);
Var output_heads(Var logits, std::span<const OutputHead> heads);
// out = keep[c] ? source[:, c] : x[:, c].
Var copy_columns(Var x, Var source, const std::vector<bool>& keep);

}  // namespace ops
}  // namespace cfnet

#endif  // CFNET_AUTODIFF_H_
