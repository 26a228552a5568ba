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

// Small fixtures shared by the unit tests.

#ifndef CFNET_TESTS_TEST_UTIL_H_
#define CFNET_TESTS_TEST_UTIL_H_

#include <vector>

#include "cfnet/model.h"
#include "cfnet/schema.h"
#include "cfnet/tensor.h"

namespace cfnet::testing {

// amount (continuous), color {a,b,c}, size {s,l}: encoded width 6.
inline FeatureSchema small_schema(bool immutable_color = false, std::size_t classes = 2) {
  Feature amount{"amount", FeatureKind::kContinuous, 0.0, 100.0, {}, false};
  Feature color{"color", FeatureKind::kCategorical, 0, 1, {"a", "b", "c"}, immutable_color};
  Feature size{"size", FeatureKind::kCategorical, 0, 1, {"s", "l"}, false};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < classes; ++i) names.push_back("c" + std::to_string(i));
  return FeatureSchema({amount, color, size}, LabelSpec{"label", names});
}

inline ModelDims small_dims(const FeatureSchema& s,
                            GeneratorWiring wiring = GeneratorWiring::kJoint) {
  return ModelDims::from_hidden(s.encoded_width(), s.num_classes(), {8}, 4, {5}, {7}, wiring,
                                true);
}

// Random rows with valid one-hot spans.
inline Tensor random_encoded(const FeatureSchema& s, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor x(n, s.encoded_width());
  const auto& layout = s.layout();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t f = 0; f < layout.num_features(); ++f) {
      const ColumnSpan sp = layout.span(f);
      if (layout.categorical(f)) {
        std::uniform_int_distribution<std::size_t> pick(0, sp.len - 1);
        x(r, sp.start + pick(rng)) = 1.0;
      } else {
        x(r, sp.start) = u(rng);
      }
    }
  }
  return x;
}

inline Tensor random_onehot(std::size_t n, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  Tensor y(n, k);
  for (std::size_t r = 0; r < n; ++r) y(r, pick(rng)) = 1.0;
  return y;
}

inline std::vector<Tensor> snapshot(const std::vector<Param*>& params) {
  std::vector<Tensor> out;
  for (const Param* p : params) out.push_back(p->value);
  return out;
}

}  // namespace cfnet::testing

#endif  // CFNET_TESTS_TEST_UTIL_H_
