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

#include "cfnet/autodiff.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "cfnet/errors.h"

namespace cfnet {

const Tensor& Var::value() const { return tape->value(id); }
const Tensor& Var::grad() const { return tape->grad(id); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("non-finite constant on tape");
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  if (!value.all_finite()) throw NumericError("non-finite variable on tape");
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::param(Param& p) {
  if (!p.grad.same_shape(p.value)) {
    throw DimensionError("param grad shape " + p.grad.shape_string() +
                         " differs from value " + p.value.shape_string());
  }
  Node n;
  n.value = p.value;
  n.param = &p;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> parents,
                 BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError("non-finite value produced by " + std::string(op));
  }
  Node n;
  n.value = std::move(value);
  for (const Var& p : parents) {
    if (p.tape != this) throw Error(std::string(op) + ": operand from another tape");
    n.requires_grad = n.requires_grad || nodes_[p.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Tensor& Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (!consumed_ || !n.requires_grad) {
    throw Error("gradient requested for a node without one");
  }
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (!g.same_shape(n.value)) {
    throw DimensionError("gradient " + g.shape_string() + " for node " +
                         n.value.shape_string());
  }
  if (n.grad.empty() && !n.value.empty()) {
    n.grad = g;
    return;
  }
  auto dst = n.grad.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
  if (nodes_.empty()) return;
  if (consumed_) throw Error("backward called twice on the same tape");
  if (loss.tape != this) throw Error("loss does not belong to this tape");
  const Tensor& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw DimensionError("backward needs a 1x1 loss, got " + lv.shape_string());
  }
  consumed_ = true;
  for (Node& n : nodes_) {
    if (n.requires_grad) n.grad = Tensor(n.value.rows(), n.value.cols());
  }
  if (!nodes_[loss.id].requires_grad) return;
  nodes_[loss.id].grad[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param != nullptr) {
      auto dst = n.param->grad.data();
      auto src = n.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

namespace {

void validate_heads(std::span<const OutputHead> heads, std::size_t cols) {
  std::size_t covered = 0;
  for (const OutputHead& h : heads) {
    if (h.start != covered || h.len == 0) throw DimensionError("output heads must tile columns");
    if (h.categorical && h.len < 2) throw DimensionError("categorical head needs >= 2 columns");
    covered += h.len;
  }
  if (covered != cols) {
    throw DimensionError("output heads cover " + std::to_string(covered) + " of " +
                         std::to_string(cols) + " columns");
  }
}

}  // namespace

Tensor apply_output_heads(const Tensor& logits, std::span<const OutputHead> heads) {
  validate_heads(heads, logits.cols());
  Tensor out = logits;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (const OutputHead& h : heads) {
      auto seg = row.subspan(h.start, h.len);
      if (h.categorical) {
        softmax_inplace(seg);
      } else {
        for (double& v : seg) v = sigmoid(v);
      }
    }
  }
  return out;
}

namespace ops {
namespace {

void require_same_tape(Var a, Var b, const char* op) {
  if (a.tape != b.tape) throw Error(std::string(op) + ": operands on different tapes");
}

}  // namespace

Var affine(Var x, Var weight, Var bias) {
  require_same_tape(x, weight, "affine");
  require_same_tape(x, bias, "affine");
  Tensor out = cfnet::affine(x.value(), weight.value(), bias.value());
  const std::size_t xi = x.id, wi = weight.id, bi = bias.id;
  const std::array<Var, 3> parents{x, weight, bias};
  return x.tape->record("affine", std::move(out), parents,
                        [xi, wi, bi](Tape& t, const Tensor& g) {
                          if (t.requires_grad(wi)) t.accumulate(wi, matmul_tn(t.value(xi), g));
                          if (t.requires_grad(bi)) {
                            Tensor gb(1, g.cols());
                            for (std::size_t r = 0; r < g.rows(); ++r) {
                              for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
                            }
                            t.accumulate(bi, gb);
                          }
                          if (t.requires_grad(xi)) t.accumulate(xi, matmul_nt(g, t.value(wi)));
                        });
}

Var leaky_relu(Var x, double slope) {
  const std::size_t xi = x.id;
  const std::array<Var, 1> parents{x};
  return x.tape->record("leaky_relu", cfnet::leaky_relu(x.value(), slope), parents,
                        [xi, slope](Tape& t, const Tensor& g) {
                          const Tensor& in = t.value(xi);
                          Tensor dx = g;
                          for (std::size_t i = 0; i < dx.size(); ++i) {
                            if (!(in[i] > 0.0)) dx[i] *= slope;
                          }
                          t.accumulate(xi, dx);
                        });
}

Var dropout(Var x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0,1)");
  if (!training || rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Tensor mask(x.rows(), x.cols());
  for (double& m : mask.data()) m = keep(rng) ? scale : 0.0;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const std::size_t xi = x.id;
  const std::array<Var, 1> parents{x};
  return x.tape->record("dropout", std::move(out), parents,
                        [xi, mask = std::move(mask)](Tape& t, const Tensor& g) {
                          Tensor dx = g;
                          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask[i];
                          t.accumulate(xi, dx);
                        });
}

Var softmax_rows(Var x) {
  if (x.cols() < 2) throw DimensionError("softmax_rows needs at least two columns");
  Tensor out = cfnet::softmax_rows(x.value());
  const std::size_t xi = x.id;
  const std::array<Var, 1> parents{x};
  return x.tape->record("softmax_rows", out, parents,
                        [xi, y = out](Tape& t, const Tensor& g) {
                          Tensor dx(y.rows(), y.cols());
                          for (std::size_t r = 0; r < y.rows(); ++r) {
                            double dot = 0.0;
                            for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
                            for (std::size_t c = 0; c < y.cols(); ++c) {
                              dx(r, c) = y(r, c) * (g(r, c) - dot);
                            }
                          }
                          t.accumulate(xi, dx);
                        });
}

Var sigmoid(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = cfnet::sigmoid(v);
  const std::size_t xi = x.id;
  const std::array<Var, 1> parents{x};
  return x.tape->record("sigmoid", out, parents, [xi, y = out](Tape& t, const Tensor& g) {
    Tensor dx = g;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= y[i] * (1.0 - y[i]);
    t.accumulate(xi, dx);
  });
}

Var concat_cols(Var a, Var b) {
  require_same_tape(a, b, "concat_cols");
  Tensor out = cfnet::concat_cols(a.value(), b.value());
  const std::size_t ai = a.id, bi = b.id;
  const std::size_t p = a.cols(), q = b.cols();
  const std::array<Var, 2> parents{a, b};
  return a.tape->record("concat_cols", std::move(out), parents,
                        [ai, bi, p, q](Tape& t, const Tensor& g) {
                          Tensor ga(g.rows(), p), gb(g.rows(), q);
                          for (std::size_t r = 0; r < g.rows(); ++r) {
                            for (std::size_t c = 0; c < p; ++c) ga(r, c) = g(r, c);
                            for (std::size_t c = 0; c < q; ++c) gb(r, c) = g(r, p + c);
                          }
                          t.accumulate(ai, ga);
                          t.accumulate(bi, gb);
                        });
}

Var column(Var x, std::size_t c) {
  Tensor out = cfnet::column(x.value(), c);
  const std::size_t xi = x.id;
  const std::array<Var, 1> parents{x};
  return x.tape->record("column", std::move(out), parents, [xi, c](Tape& t, const Tensor& g) {
    const Tensor& in = t.value(xi);
    Tensor dx(in.rows(), in.cols());
    for (std::size_t r = 0; r < in.rows(); ++r) dx(r, c) = g[r];
    t.accumulate(xi, dx);
  });
}

Var scale_shift(Var x, double s, double c) {
  Tensor out = x.value();
  for (double& v : out.data()) v = s * v + c;
  const std::size_t xi = x.id;
  const std::array<Var, 1> parents{x};
  return x.tape->record("scale_shift", std::move(out), parents,
                        [xi, s](Tape& t, const Tensor& g) {
                          Tensor dx = g;
                          for (double& v : dx.data()) v *= s;
                          t.accumulate(xi, dx);
                        });
}

Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  if (!a.value().same_shape(b.value())) {
    throw DimensionError("add " + a.value().shape_string() + " + " + b.value().shape_string());
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  const std::size_t ai = a.id, bi = b.id;
  const std::array<Var, 2> parents{a, b};
  return a.tape->record("add", std::move(out), parents, [ai, bi](Tape& t, const Tensor& g) {
    t.accumulate(ai, g);
    t.accumulate(bi, g);
  });
}

Var sum(Var x) {
  double acc = 0.0;
  for (double v : x.value().data()) acc += v;
  const std::size_t xi = x.id;
  const std::array<Var, 1> parents{x};
  return x.tape->record("sum", Tensor(1, 1, acc), parents, [xi](Tape& t, const Tensor& g) {
    const Tensor& in = t.value(xi);
    t.accumulate(xi, Tensor(in.rows(), in.cols(), g[0]));
  });
}

Var mse(Var a, Var b) {
  require_same_tape(a, b, "mse");
  const double value = cfnet::mse(a.value(), b.value());
  const std::size_t ai = a.id, bi = b.id;
  const std::array<Var, 2> parents{a, b};
  return a.tape->record("mse", Tensor(1, 1, value), parents,
                        [ai, bi](Tape& t, const Tensor& g) {
                          const Tensor& av = t.value(ai);
                          const Tensor& bv = t.value(bi);
                          const double k = 2.0 * g[0] / static_cast<double>(av.size());
                          Tensor da(av.rows(), av.cols());
                          for (std::size_t i = 0; i < da.size(); ++i) da[i] = k * (av[i] - bv[i]);
                          if (t.requires_grad(bi)) {
                            Tensor db = da;
                            for (double& v : db.data()) v = -v;
                            t.accumulate(bi, db);
                          }
                          t.accumulate(ai, da);
                        });
}

namespace {
constexpr double kBceClamp = 1e-7;
}  // namespace

Var bce(Var p, Var target) {
  require_same_tape(p, target, "bce");
  const Tensor& pv = p.value();
  const Tensor& tv = target.value();
  if (!pv.same_shape(tv)) {
    throw DimensionError("bce " + pv.shape_string() + " vs " + tv.shape_string());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double q = std::clamp(pv[i], kBceClamp, 1.0 - kBceClamp);
    acc -= tv[i] * std::log(q) + (1.0 - tv[i]) * std::log(1.0 - q);
  }
  const double n = static_cast<double>(std::max<std::size_t>(pv.size(), 1));
  const std::size_t pi = p.id, ti = target.id;
  const std::array<Var, 2> parents{p, target};
  return p.tape->record("bce", Tensor(1, 1, acc / n), parents,
                        [pi, ti, n](Tape& t, const Tensor& g) {
                          const Tensor& pv = t.value(pi);
                          const Tensor& tv = t.value(ti);
                          Tensor dp(pv.rows(), pv.cols()), dt(pv.rows(), pv.cols());
                          for (std::size_t i = 0; i < pv.size(); ++i) {
                            const double q = std::clamp(pv[i], kBceClamp, 1.0 - kBceClamp);
                            const bool clamped = q != pv[i];
                            dp[i] = clamped ? 0.0
                                            : g[0] / n * ((q - tv[i]) / (q * (1.0 - q)));
                            dt[i] = g[0] / n * (std::log(1.0 - q) - std::log(q));
                          }
                          t.accumulate(pi, dp);
                          t.accumulate(ti, dt);
                        });
}

Var output_heads(Var logits, std::span<const OutputHead> heads) {
  std::vector<OutputHead> spec(heads.begin(), heads.end());
  Tensor out = apply_output_heads(logits.value(), spec);
  const std::size_t xi = logits.id;
  const std::array<Var, 1> parents{logits};
  return logits.tape->record(
      "output_heads", out, parents,
      [xi, y = out, spec = std::move(spec)](Tape& t, const Tensor& g) {
        Tensor dx(y.rows(), y.cols());
        for (std::size_t r = 0; r < y.rows(); ++r) {
          for (const OutputHead& h : spec) {
            if (h.categorical) {
              double dot = 0.0;
              for (std::size_t c = h.start; c < h.start + h.len; ++c) dot += g(r, c) * y(r, c);
              for (std::size_t c = h.start; c < h.start + h.len; ++c) {
                dx(r, c) = y(r, c) * (g(r, c) - dot);
              }
            } else {
              for (std::size_t c = h.start; c < h.start + h.len; ++c) {
                dx(r, c) = g(r, c) * y(r, c) * (1.0 - y(r, c));
              }
            }
          }
        }
        t.accumulate(xi, dx);
      });
}

Var copy_columns(Var x, Var source, const std::vector<bool>& keep) {
  require_same_tape(x, source, "copy_columns");
  const Tensor& xv = x.value();
  const Tensor& sv = source.value();
  if (!xv.same_shape(sv) || keep.size() != xv.cols()) {
    throw DimensionError("copy_columns shape mismatch");
  }
  Tensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      if (keep[c]) out(r, c) = sv(r, c);
    }
  }
  const std::size_t xi = x.id, si = source.id;
  const std::array<Var, 2> parents{x, source};
  return x.tape->record("copy_columns", std::move(out), parents,
                        [xi, si, keep](Tape& t, const Tensor& g) {
                          Tensor gx = g, gs(g.rows(), g.cols());
                          for (std::size_t r = 0; r < g.rows(); ++r) {
                            for (std::size_t c = 0; c < g.cols(); ++c) {
                              if (keep[c]) {
                                gs(r, c) = g(r, c);
                                gx(r, c) = 0.0;
                              }
                            }
                          }
                          t.accumulate(xi, gx);
                          t.accumulate(si, gs);
                        });
}

}  // namespace ops
}  // namespace cfnet
