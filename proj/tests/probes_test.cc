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

#include <cmath>

#include <gtest/gtest.h>

#include "cfnet/errors.h"
#include "cfnet/training.h"
#include "test_util.h"

namespace cfnet {
namespace {

using testing::random_encoded;
using testing::small_dims;
using testing::small_schema;

TEST(GradProbe, AllQualifyingDotProductsNegative) {
  Dataset d = synthesize(600, 31);
  TrainConfig c;
  c.epochs = 3;
  CounterNet m = train(d, c).model;
  GradientProbe p = grad_divergence_probe(m, d.x, d.labels);
  ASSERT_GT(p.samples.size(), 100u);
  EXPECT_EQ(p.negative_fraction, 1.0);
  EXPECT_LT(p.max_closed_form_error, 1e-8);
  EXPECT_EQ(p.samples.size() + p.skipped, d.size());
  for (const auto& s : p.samples) {
    EXPECT_LT(std::abs(s.y_hat - s.y), 0.5);
    EXPECT_LT(s.dot, 0.0);
  }
}

TEST(GradProbe, ClosedFormSignExample) {
  // y = 1, ŷ = 0.7: 8 (ŷ - y)(2ŷ - 1) = 8 (-0.3)(0.4) < 0 for any nonzero ∇ŷ.
  EXPECT_LT(8.0 * (0.7 - 1.0) * (2.0 * 0.7 - 1.0), 0.0);
  FeatureSchema s = small_schema();
  CounterNet m(s, small_dims(s), 2);
  const Tensor x = random_encoded(s, 50, 3);
  const auto pred = m.predict_labels(x);
  GradientProbe p = grad_divergence_probe(m, x, pred);
  for (const auto& smp : p.samples) {
    EXPECT_NEAR(smp.dot, smp.closed_form, 1e-8 * std::max(1.0, std::abs(smp.closed_form)));
  }
}

TEST(GradProbe, ExcludesRowsViolatingPreconditions) {
  FeatureSchema s = small_schema();
  CounterNet m(s, small_dims(s), 4);
  const Tensor x = random_encoded(s, 30, 5);
  auto wrong = m.predict_labels(x);
  for (auto& l : wrong) l = 1 - l;
  EXPECT_THROW(grad_divergence_probe(m, x, wrong), ProbeError);
}

TEST(Lipschitz, ConstantMapIsZero) {
  Rng rng(1);
  VectorFn f = [](const Tensor& v) { return Tensor(v.rows(), 2, 0.25); };
  std::vector<double> x{0.1, 0.2, 0.3};
  EXPECT_EQ(lipschitz_proxy(f, x, 0.05, 100, rng), 0.0);
}

TEST(Lipschitz, LinearMapRecoversWeightNorm) {
  Rng rng(2);
  const std::vector<double> w{3.0, -4.0, 1.0};
  VectorFn f = [&](const Tensor& v) {
    Tensor out(v.rows(), 1);
    for (std::size_t r = 0; r < v.rows(); ++r) {
      for (std::size_t c = 0; c < 3; ++c) out[r] += w[c] * v(r, c);
    }
    return out;
  };
  std::vector<double> x{0.5, 0.5, 0.5};
  const double k = lipschitz_proxy(f, x, 0.1, 500, rng);
  const double norm = std::sqrt(26.0);
  EXPECT_LE(k, norm + 1e-9);
  EXPECT_GE(k, 0.95 * norm);
}

TEST(Lipschitz, ModelProxyDeterministic) {
  FeatureSchema s = small_schema();
  CounterNet m(s, small_dims(s), 6);
  const Tensor x = random_encoded(s, 10, 7);
  EXPECT_EQ(mean_lipschitz_proxy(m, x, 0.05, 20, 3), mean_lipschitz_proxy(m, x, 0.05, 20, 3));
  EXPECT_GT(mean_lipschitz_proxy(m, x, 0.05, 20, 3), 0.0);
}

}  // namespace
}  // namespace cfnet
