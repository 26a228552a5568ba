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

// The CounterNet network: encoder h, predictor f, and counterfactual
// generator g. The generator reads z ⊕ p and emits a point in the encoded
// feature space through per-feature output heads.

#ifndef CFNET_MODEL_H_
#define CFNET_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cfnet/autodiff.h"
#include "cfnet/schema.h"
#include "cfnet/tensor.h"

namespace cfnet {

enum class Partition { kEncoder, kPredictor, kGenerator };

std::string partition_name(Partition p);

// How the generator is wired.
//   kJoint:    g(z ⊕ p)
//   kNoPassP:  g(z)
//   kSeparate: g(z_g) where z_g comes from a private encoder stack in g
enum class GeneratorWiring { kJoint, kNoPassP, kSeparate };

std::string wiring_name(GeneratorWiring w);
GeneratorWiring parse_wiring(const std::string& s);

// Layer widths per sub-network, input first. encoder = [d, ..., k];
// predictor = [k, ..., |p|, classes]; generator = [in, ..., d]. An empty
// generator means a plain classifier (encoder + predictor only).
struct ModelDims {
  std::vector<std::size_t> encoder;
  std::vector<std::size_t> predictor;
  std::vector<std::size_t> generator;
  GeneratorWiring wiring = GeneratorWiring::kJoint;

  bool has_generator() const { return !generator.empty(); }
  std::size_t latent_width() const { return encoder.back(); }
  std::size_t representation_width() const;
  std::size_t generator_input_width() const;

  // Encoder [d, max(50,2d), 10], predictor [10, 10, classes], generator the
  // mirror of the encoder on top of the wiring's input width.
  static ModelDims defaults(std::size_t d, std::size_t classes,
                            GeneratorWiring wiring = GeneratorWiring::kJoint,
                            bool with_generator = true);
  // Builds dims from hidden widths; the input/output widths are implied.
  static ModelDims from_hidden(std::size_t d, std::size_t classes,
                               const std::vector<std::size_t>& encoder_hidden,
                               std::size_t latent,
                               const std::vector<std::size_t>& predictor_hidden,
                               const std::vector<std::size_t>& generator_hidden,
                               GeneratorWiring wiring, bool with_generator);

  // Throws ConfigError when widths do not chain.
  void validate() const;
};

struct Layer {
  Param weight;  // in × out
  Param bias;    // 1 × out
  Partition partition = Partition::kEncoder;
};

// Tape handles for one training-mode pass.
struct ForwardVars {
  Var z;          // latent
  Var p;          // predictor representation
  Var y_hat;      // class distribution of x
  Var x_cf;       // counterfactual after optional immutable projection
  Var y_hat_cf;   // class distribution of x_cf (feedback loop)
};

struct Inference {
  Tensor y_hat;  // n × classes
  Tensor x_cf;   // n × d, empty without a generator
};

class CounterNet {
 public:
  CounterNet() = default;
  // He-initialized weights drawn partition by partition (h, f, g).
  CounterNet(FeatureSchema schema, ModelDims dims, std::uint64_t seed);
  // Takes weights as given; used by the artifact loader.
  CounterNet(FeatureSchema schema, ModelDims dims, std::vector<Layer> layers);

  const FeatureSchema& schema() const { return schema_; }
  const ModelDims& dims() const { return dims_; }
  bool has_generator() const { return dims_.has_generator(); }

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Param*> params();
  std::vector<Param*> params(Partition p);
  std::size_t num_scalars() const;

  // Training-mode building blocks on a tape. Dropout masks are drawn from
  // `rng` when `training` is set.
  Var latent(Tape& tape, Var x, double dropout, bool training, Rng& rng);
  // Returns {p, ŷ}.
  std::pair<Var, Var> predict(Tape& tape, Var z, double dropout, bool training, Rng& rng);
  Var generate(Tape& tape, Var x, Var z, Var p, double dropout, bool training, Rng& rng);

  // Full pass including the feedback loop ŷ_x′ = f(h(x′)). When
  // `immutable` is non-null, those columns of x′ are overwritten by x
  // before the feedback pass.
  ForwardVars forward(Tape& tape, Var x, double dropout, bool training, Rng& rng,
                      const std::vector<bool>* immutable = nullptr);

  // Class distribution in eval mode with the weights recorded as constants,
  // so gradients reach only `x`.
  Var classify(Tape& tape, Var x) const;

  // Tape-free evaluation with dropout off.
  Tensor latent(const Tensor& x) const;
  Tensor predict_proba(const Tensor& x) const;
  std::vector<std::size_t> predict_labels(const Tensor& x) const;
  // Prediction and counterfactual; immutable columns copied from x when
  // `project_immutable` is set and the schema declares any.
  Inference infer(const Tensor& x, bool project_immutable = true) const;

 private:
  Tensor run_stack(const Tensor& x, std::size_t first, std::size_t count,
                   bool activate_last) const;
  Var run_stack(Tape& tape, Var x, std::size_t first, std::size_t count, bool activate_last,
                double dropout, bool training, Rng& rng);
  void index_layers();

  FeatureSchema schema_;
  ModelDims dims_;
  std::vector<Layer> layers_;
  std::vector<OutputHead> heads_;
  // Layer ranges within layers_.
  std::size_t enc_begin_ = 0, enc_count_ = 0;
  std::size_t pred_begin_ = 0, pred_count_ = 0;
  std::size_t genc_begin_ = 0, genc_count_ = 0;
  std::size_t gen_begin_ = 0, gen_count_ = 0;
};

// Replaces each categorical span by the one-hot of its argmax.
Tensor harden(const Tensor& x_cf, const FeatureSchema& schema);
// Overwrites immutable columns of x_cf with x.
Tensor project_feasible(const Tensor& x, const Tensor& x_cf, const FeatureSchema& schema);

}  // namespace cfnet

#endif  // CFNET_MODEL_H_
