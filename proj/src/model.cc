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

#include "cfnet/model.h"

#include <algorithm>

#include "cfnet/errors.h"

namespace cfnet {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;

void append_stack(std::vector<Layer>& layers, const std::vector<std::size_t>& widths,
                  Partition part) {
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    Layer l;
    l.weight = Param(Tensor(widths[i], widths[i + 1]), 0);
    l.bias = Param(Tensor(1, widths[i + 1]), 0);
    l.partition = part;
    layers.push_back(std::move(l));
  }
}

void check_chain(const std::vector<std::size_t>& w, const char* what) {
  if (w.size() < 2) throw ConfigError(std::string(what) + " needs at least two widths");
  for (std::size_t v : w) {
    if (v == 0) throw ConfigError(std::string(what) + " has a zero width");
  }
}

}  // namespace

std::string partition_name(Partition p) {
  switch (p) {
    case Partition::kEncoder: return "h";
    case Partition::kPredictor: return "f";
    case Partition::kGenerator: return "g";
  }
  return "?";
}

std::string wiring_name(GeneratorWiring w) {
  switch (w) {
    case GeneratorWiring::kJoint: return "joint";
    case GeneratorWiring::kNoPassP: return "nopass_p";
    case GeneratorWiring::kSeparate: return "separate";
  }
  return "?";
}

GeneratorWiring parse_wiring(const std::string& s) {
  if (s == "joint") return GeneratorWiring::kJoint;
  if (s == "nopass_p") return GeneratorWiring::kNoPassP;
  if (s == "separate") return GeneratorWiring::kSeparate;
  throw ConfigError("unknown generator wiring '" + s + "'");
}

std::size_t ModelDims::representation_width() const {
  return predictor.size() >= 3 ? predictor[predictor.size() - 2] : predictor.front();
}

std::size_t ModelDims::generator_input_width() const {
  return wiring == GeneratorWiring::kJoint ? latent_width() + representation_width()
                                           : latent_width();
}

ModelDims ModelDims::defaults(std::size_t d, std::size_t classes, GeneratorWiring wiring,
                              bool with_generator) {
  const std::size_t hidden = std::max<std::size_t>(50, 2 * d);
  return from_hidden(d, classes, {hidden}, 10, {10}, {hidden}, wiring, with_generator);
}

ModelDims ModelDims::from_hidden(std::size_t d, std::size_t classes,
                                 const std::vector<std::size_t>& encoder_hidden,
                                 std::size_t latent,
                                 const std::vector<std::size_t>& predictor_hidden,
                                 const std::vector<std::size_t>& generator_hidden,
                                 GeneratorWiring wiring, bool with_generator) {
  ModelDims m;
  m.wiring = wiring;
  m.encoder.push_back(d);
  m.encoder.insert(m.encoder.end(), encoder_hidden.begin(), encoder_hidden.end());
  m.encoder.push_back(latent);
  m.predictor.push_back(latent);
  m.predictor.insert(m.predictor.end(), predictor_hidden.begin(), predictor_hidden.end());
  m.predictor.push_back(classes);
  if (with_generator) {
    m.generator.push_back(m.generator_input_width());
    m.generator.insert(m.generator.end(), generator_hidden.begin(), generator_hidden.end());
    m.generator.push_back(d);
  }
  m.validate();
  return m;
}

void ModelDims::validate() const {
  check_chain(encoder, "encoder");
  check_chain(predictor, "predictor");
  if (predictor.front() != encoder.back()) {
    throw ConfigError("predictor input must equal the latent width");
  }
  if (predictor.back() < 2) throw ConfigError("predictor needs at least two classes");
  if (!has_generator()) return;
  check_chain(generator, "generator");
  if (generator.front() != generator_input_width()) {
    throw ConfigError("generator input width " + std::to_string(generator.front()) +
                      " does not match wiring " + wiring_name(wiring) + " (" +
                      std::to_string(generator_input_width()) + ")");
  }
  if (generator.back() != encoder.front()) {
    throw ConfigError("generator output width must equal the encoded width");
  }
}

CounterNet::CounterNet(FeatureSchema schema, ModelDims dims, std::uint64_t seed)
    : schema_(std::move(schema)), dims_(std::move(dims)) {
  dims_.validate();
  append_stack(layers_, dims_.encoder, Partition::kEncoder);
  append_stack(layers_, dims_.predictor, Partition::kPredictor);
  if (dims_.has_generator()) {
    if (dims_.wiring == GeneratorWiring::kSeparate) {
      append_stack(layers_, dims_.encoder, Partition::kGenerator);
    }
    append_stack(layers_, dims_.generator, Partition::kGenerator);
  }
  Rng rng(derive_seed(seed, kInitStream));
  for (Layer& l : layers_) {
    l.weight.value = he_initialize(l.weight.value.rows(), l.weight.value.cols(), rng);
  }
  index_layers();
}

CounterNet::CounterNet(FeatureSchema schema, ModelDims dims, std::vector<Layer> layers)
    : schema_(std::move(schema)), dims_(std::move(dims)), layers_(std::move(layers)) {
  dims_.validate();
  std::vector<Layer> expected;
  append_stack(expected, dims_.encoder, Partition::kEncoder);
  append_stack(expected, dims_.predictor, Partition::kPredictor);
  if (dims_.has_generator()) {
    if (dims_.wiring == GeneratorWiring::kSeparate) {
      append_stack(expected, dims_.encoder, Partition::kGenerator);
    }
    append_stack(expected, dims_.generator, Partition::kGenerator);
  }
  if (expected.size() != layers_.size()) throw DimensionError("layer count does not match dims");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!layers_[i].weight.value.same_shape(expected[i].weight.value) ||
        !layers_[i].bias.value.same_shape(expected[i].bias.value) ||
        layers_[i].partition != expected[i].partition) {
      throw DimensionError("layer " + std::to_string(i) + " does not match dims");
    }
    layers_[i].weight.grad = Tensor(layers_[i].weight.value.rows(), layers_[i].weight.value.cols());
    layers_[i].bias.grad = Tensor(1, layers_[i].bias.value.cols());
  }
  index_layers();
}

void CounterNet::index_layers() {
  if (dims_.has_generator() && dims_.generator.back() != schema_.encoded_width()) {
    throw DimensionError("generator width does not match schema");
  }
  if (dims_.encoder.front() != schema_.encoded_width()) {
    throw DimensionError("encoder input width " + std::to_string(dims_.encoder.front()) +
                         " does not match schema width " +
                         std::to_string(schema_.encoded_width()));
  }
  if (dims_.predictor.back() != schema_.num_classes()) {
    throw DimensionError("predictor output does not match the number of classes");
  }
  std::size_t id = 0;
  for (Layer& l : layers_) {
    l.weight.id = id++;
    l.bias.id = id++;
  }
  enc_begin_ = 0;
  enc_count_ = dims_.encoder.size() - 1;
  pred_begin_ = enc_count_;
  pred_count_ = dims_.predictor.size() - 1;
  genc_begin_ = pred_begin_ + pred_count_;
  genc_count_ = dims_.has_generator() && dims_.wiring == GeneratorWiring::kSeparate
                    ? enc_count_
                    : 0;
  gen_begin_ = genc_begin_ + genc_count_;
  gen_count_ = dims_.has_generator() ? dims_.generator.size() - 1 : 0;
  heads_ = schema_.layout().heads();
}

std::vector<Param*> CounterNet::params() {
  std::vector<Param*> out;
  for (Layer& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<Param*> CounterNet::params(Partition p) {
  std::vector<Param*> out;
  for (Layer& l : layers_) {
    if (l.partition != p) continue;
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::size_t CounterNet::num_scalars() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += l.weight.value.size() + l.bias.value.size();
  return n;
}

Var CounterNet::run_stack(Tape& tape, Var x, std::size_t first, std::size_t count,
                          bool activate_last, double dropout, bool training, Rng& rng) {
  Var h = x;
  for (std::size_t i = 0; i < count; ++i) {
    Layer& l = layers_[first + i];
    h = ops::affine(h, tape.param(l.weight), tape.param(l.bias));
    if (i + 1 < count || activate_last) {
      h = ops::leaky_relu(h);
      h = ops::dropout(h, dropout, training, rng);
    }
  }
  return h;
}

Tensor CounterNet::run_stack(const Tensor& x, std::size_t first, std::size_t count,
                             bool activate_last) const {
  Tensor h = x;
  for (std::size_t i = 0; i < count; ++i) {
    const Layer& l = layers_[first + i];
    h = affine(h, l.weight.value, l.bias.value);
    if (i + 1 < count || activate_last) h = leaky_relu(h, ops::kLeakySlope);
  }
  return h;
}

Var CounterNet::latent(Tape& tape, Var x, double dropout, bool training, Rng& rng) {
  if (x.cols() != dims_.encoder.front()) {
    throw DimensionError("input width " + std::to_string(x.cols()) + ", model expects " +
                         std::to_string(dims_.encoder.front()));
  }
  return run_stack(tape, x, enc_begin_, enc_count_, true, dropout, training, rng);
}

std::pair<Var, Var> CounterNet::predict(Tape& tape, Var z, double dropout, bool training,
                                        Rng& rng) {
  Var p = run_stack(tape, z, pred_begin_, pred_count_ - 1, true, dropout, training, rng);
  Var logits = run_stack(tape, p, pred_begin_ + pred_count_ - 1, 1, false, dropout, training, rng);
  return {p, ops::softmax_rows(logits)};
}

Var CounterNet::generate(Tape& tape, Var x, Var z, Var p, double dropout, bool training,
                         Rng& rng) {
  if (!has_generator()) throw ConfigError("model has no generator");
  Var in = z;
  switch (dims_.wiring) {
    case GeneratorWiring::kJoint:
      in = ops::concat_cols(p, z);
      break;
    case GeneratorWiring::kNoPassP:
      break;
    case GeneratorWiring::kSeparate:
      in = run_stack(tape, x, genc_begin_, genc_count_, true, dropout, training, rng);
      break;
  }
  Var logits = run_stack(tape, in, gen_begin_, gen_count_, false, dropout, training, rng);
  return ops::output_heads(logits, heads_);
}

ForwardVars CounterNet::forward(Tape& tape, Var x, double dropout, bool training, Rng& rng,
                                const std::vector<bool>* immutable) {
  ForwardVars out;
  out.z = latent(tape, x, dropout, training, rng);
  std::tie(out.p, out.y_hat) = predict(tape, out.z, dropout, training, rng);
  out.x_cf = generate(tape, x, out.z, out.p, dropout, training, rng);
  if (immutable != nullptr) out.x_cf = ops::copy_columns(out.x_cf, x, *immutable);
  Var z_cf = latent(tape, out.x_cf, dropout, training, rng);
  out.y_hat_cf = predict(tape, z_cf, dropout, training, rng).second;
  return out;
}

Var CounterNet::classify(Tape& tape, Var x) const {
  if (x.cols() != dims_.encoder.front()) throw DimensionError("classify: input width mismatch");
  Var h = x;
  const std::size_t end = pred_begin_ + pred_count_;
  for (std::size_t i = enc_begin_; i < end; ++i) {
    const Layer& l = layers_[i];
    h = ops::affine(h, tape.constant(l.weight.value), tape.constant(l.bias.value));
    if (i + 1 < end) h = ops::leaky_relu(h);
  }
  return ops::softmax_rows(h);
}

Tensor CounterNet::latent(const Tensor& x) const {
  if (x.cols() != dims_.encoder.front()) {
    throw DimensionError("input width " + std::to_string(x.cols()) + ", model expects " +
                         std::to_string(dims_.encoder.front()));
  }
  return run_stack(x, enc_begin_, enc_count_, true);
}

Tensor CounterNet::predict_proba(const Tensor& x) const {
  const Tensor z = latent(x);
  return softmax_rows(run_stack(z, pred_begin_, pred_count_, false));
}

std::vector<std::size_t> CounterNet::predict_labels(const Tensor& x) const {
  return argmax_rows(predict_proba(x));
}

Inference CounterNet::infer(const Tensor& x, bool project_immutable) const {
  Inference out;
  const Tensor z = latent(x);
  const Tensor p = run_stack(z, pred_begin_, pred_count_ - 1, true);
  out.y_hat = softmax_rows(run_stack(p, pred_begin_ + pred_count_ - 1, 1, false));
  if (!has_generator()) return out;
  Tensor in;
  switch (dims_.wiring) {
    case GeneratorWiring::kJoint:
      in = concat_cols(p, z);
      break;
    case GeneratorWiring::kNoPassP:
      in = z;
      break;
    case GeneratorWiring::kSeparate:
      in = run_stack(x, genc_begin_, genc_count_, true);
      break;
  }
  out.x_cf = apply_output_heads(run_stack(in, gen_begin_, gen_count_, false), heads_);
  if (project_immutable && schema_.has_immutable()) {
    out.x_cf = project_feasible(x, out.x_cf, schema_);
  }
  return out;
}

Tensor harden(const Tensor& x_cf, const FeatureSchema& schema) {
  if (x_cf.cols() != schema.encoded_width()) throw DimensionError("harden: width mismatch");
  Tensor out = x_cf;
  const EncodedLayout& layout = schema.layout();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t f = 0; f < layout.num_features(); ++f) {
      if (!layout.categorical(f)) continue;
      const ColumnSpan& s = layout.span(f);
      auto seg = row.subspan(s.start, s.len);
      const std::size_t best = argmax(seg);
      std::fill(seg.begin(), seg.end(), 0.0);
      seg[best] = 1.0;
    }
  }
  return out;
}

Tensor project_feasible(const Tensor& x, const Tensor& x_cf, const FeatureSchema& schema) {
  if (!x.same_shape(x_cf) || x.cols() != schema.encoded_width()) {
    throw DimensionError("project_feasible: shape mismatch");
  }
  const std::vector<bool> keep = schema.immutable_columns();
  Tensor out = x_cf;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      if (keep[c]) out(r, c) = x(r, c);
    }
  }
  return out;
}

}  // namespace cfnet
