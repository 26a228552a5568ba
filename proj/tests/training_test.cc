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

#include "cfnet/training.h"

#include <cmath>

#include <gtest/gtest.h>

#include "cfnet/baselines.h"
#include "cfnet/errors.h"
#include "cfnet/evaluation.h"
#include "test_util.h"

namespace cfnet {
namespace {

using testing::random_encoded;
using testing::random_onehot;
using testing::small_dims;
using testing::small_schema;
using testing::snapshot;

double eval(Var v) { return v.value()[0]; }

TEST(Losses, PredictionLoss) {
  Tape t;
  Var y = t.constant(Tensor::from_rows({{1}, {0}, {1}}));
  EXPECT_EQ(eval(loss_l1(y, y)), 0.0);
  EXPECT_DOUBLE_EQ(eval(loss_l1(t.constant(Tensor(1, 1, 0.5)), t.constant(Tensor(1, 1, 1.0)))),
                   0.25);
  Var yh = t.constant(Tensor::from_rows({{0.9}, {0.2}, {0.6}}));
  // (0.01 + 0.04 + 0.16) / 3
  EXPECT_NEAR(eval(loss_l1(yh, y)), 0.07, 1e-15);
}

TEST(Losses, ValidityLoss) {
  Tape t;
  auto c = [&](double v) { return t.constant(Tensor(1, 1, v)); };
  EXPECT_EQ(eval(loss_l2(c(1.0), c(0.0))), 0.0);
  EXPECT_EQ(eval(loss_l2(c(0.5), c(0.5))), 0.0);
  EXPECT_EQ(eval(loss_l2(c(1.0), c(1.0))), 1.0);
  EXPECT_NEAR(eval(loss_l2(c(0.3), c(0.6))), 0.01, 1e-15);
}

TEST(Losses, ProximityLoss) {
  Tape t;
  Var x = t.constant(Tensor::from_rows({{0, 0, 0, 0}}));
  EXPECT_EQ(eval(loss_l3(x, x)), 0.0);
  EXPECT_DOUBLE_EQ(eval(loss_l3(x, t.constant(Tensor::from_rows({{0, 1, 0, 0}})))), 0.25);
  Var a = t.constant(Tensor::from_rows({{0, 1, 2}, {3, 4, 5}}));
  Var b = t.constant(Tensor::from_rows({{1, 1, 0}, {3, 1, 5}}));
  // (1 + 0 + 4 + 0 + 9 + 0) / 6
  EXPECT_NEAR(eval(loss_l3(a, b)), 14.0 / 6.0, 1e-15);
}

TEST(Losses, MulticlassValidityLoss) {
  Tape t;
  Var y = t.constant(Tensor::from_rows({{0, 0, 0, 1}}));
  EXPECT_EQ(eval(loss_l2_multiclass(y, y)), 0.0);
  Var uniform = t.constant(Tensor(1, 4, 0.25));
  EXPECT_DOUBLE_EQ(eval(loss_l2_multiclass(uniform, y)), 0.1875);
  EXPECT_THROW(loss_l2_multiclass(uniform, t.constant(Tensor(1, 4, 0.25))), DimensionError);
  Var worst = t.constant(Tensor::from_rows({{1, 0, 0, 0}}));
  EXPECT_LE(eval(loss_l2_multiclass(worst, y)), 1.0);
}

TEST(Config, DefaultsAndValidation) {
  TrainConfig c;
  EXPECT_EQ(c.lambda1, 1.0);
  EXPECT_EQ(c.lambda2, 0.2);
  EXPECT_EQ(c.lambda3, 0.1);
  EXPECT_EQ(c.batch_size, 128u);
  EXPECT_EQ(c.clip, 0.5);
  EXPECT_EQ(c.dropout, 0.3);
  EXPECT_NO_THROW(c.validate());
  c.lambda2 = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.lr = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, ParseKeyValue) {
  TrainConfig c = TrainConfig::parse(
      "# adult\nlr = 0.003\nepochs = 7  # short\nmode = posthoc\nencoder_hidden = 50\n"
      "predictor_hidden = 10, 6\nenforce_immutable = false\n");
  EXPECT_EQ(c.lr, 0.003);
  EXPECT_EQ(c.epochs, 7u);
  EXPECT_EQ(c.mode, TrainMode::kPosthoc);
  EXPECT_EQ(c.encoder_hidden, (std::vector<std::size_t>{50}));
  EXPECT_EQ(c.predictor_hidden, (std::vector<std::size_t>{10, 6}));
  EXPECT_FALSE(c.enforce_immutable);
  EXPECT_THROW(TrainConfig::parse("bogus = 1\n"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("lr 0.1\n"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("mode = sideways\n"), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  TrainConfig c;
  c.mode = TrainMode::kMulticlass;
  c.desired_class = 2;
  c.generator_hidden = {30, 20};
  TrainConfig back = TrainConfig::from_json(nlohmann::json::parse(c.to_json().dump()));
  EXPECT_EQ(back.to_json(), c.to_json());
  for (auto m : {TrainMode::kStandard, TrainMode::kBceAblation, TrainMode::kSingleBp,
                 TrainMode::kSeparate, TrainMode::kNoPassP, TrainMode::kPosthoc,
                 TrainMode::kBlackbox, TrainMode::kMulticlass, TrainMode::kNoFreeze}) {
    EXPECT_EQ(parse_mode(mode_name(m)), m);
  }
}

TrainConfig quick_config() {
  TrainConfig c;
  c.batch_size = 16;
  c.epochs = 2;
  c.seed = 3;
  return c;
}

TEST(Trainer, FreezeContract) {
  FeatureSchema s = small_schema();
  CounterNet m(s, small_dims(s), 1);
  Trainer tr(m, quick_config());
  const Tensor x = random_encoded(s, 16, 1);
  const Tensor y = random_onehot(16, 2, 2);
  for (int round = 0; round < 3; ++round) {
    const auto g0 = snapshot(m.params(Partition::kGenerator));
    tr.predictor_pass(x, y);
    EXPECT_EQ(snapshot(m.params(Partition::kGenerator)), g0);
    const auto h1 = snapshot(m.params(Partition::kEncoder));
    const auto f1 = snapshot(m.params(Partition::kPredictor));
    tr.generator_pass(x, y);
    EXPECT_EQ(snapshot(m.params(Partition::kEncoder)), h1);
    EXPECT_EQ(snapshot(m.params(Partition::kPredictor)), f1);
    EXPECT_NE(snapshot(m.params(Partition::kGenerator)), g0);
  }
}

TEST(Trainer, ZeroValidityAndProximityWeightsSkipPassTwo) {
  FeatureSchema s = small_schema();
  CounterNet m(s, small_dims(s), 2);
  TrainConfig c = quick_config();
  c.lambda2 = 0.0;
  c.lambda3 = 0.0;
  Trainer tr(m, c);
  const auto g0 = snapshot(m.params(Partition::kGenerator));
  tr.step(random_encoded(s, 16, 3), random_onehot(16, 2, 4));
  EXPECT_EQ(snapshot(m.params(Partition::kGenerator)), g0);
}

TEST(Trainer, NoFreezeMovesEveryPartition) {
  FeatureSchema s = small_schema();
  CounterNet m(s, small_dims(s), 3);
  TrainConfig c = quick_config();
  c.mode = TrainMode::kNoFreeze;
  Trainer tr(m, c);
  const Tensor x = random_encoded(s, 16, 5);
  const Tensor y = random_onehot(16, 2, 6);
  tr.predictor_pass(x, y);
  const auto h1 = snapshot(m.params(Partition::kEncoder));
  tr.generator_pass(x, y);
  EXPECT_NE(snapshot(m.params(Partition::kEncoder)), h1);
}

TEST(Trainer, SingleBpUpdatesAllAtOnce) {
  FeatureSchema s = small_schema();
  CounterNet m(s, small_dims(s), 4);
  TrainConfig c = quick_config();
  c.mode = TrainMode::kSingleBp;
  Trainer tr(m, c);
  const auto all0 = snapshot(m.params());
  StepLosses l = tr.step(random_encoded(s, 16, 7), random_onehot(16, 2, 8));
  const auto all1 = snapshot(m.params());
  for (std::size_t i = 0; i < all0.size(); ++i) EXPECT_NE(all0[i], all1[i]);
  EXPECT_GE(l.l1, 0.0);
  EXPECT_GE(l.l2, 0.0);
  EXPECT_GE(l.l3, 0.0);
}

TEST(Trainer, SeedDeterministic) {
  Dataset d = synthesize(300, 5);
  TrainConfig c = quick_config();
  TrainResult a = train(d, c);
  TrainResult b = train(d, c);
  for (std::size_t i = 0; i < a.model.layers().size(); ++i) {
    EXPECT_EQ(a.model.layers()[i].weight.value, b.model.layers()[i].weight.value);
    EXPECT_EQ(a.model.layers()[i].bias.value, b.model.layers()[i].bias.value);
  }
  EXPECT_EQ(a.report.to_csv(), b.report.to_csv());
  c.seed = 4;
  TrainResult other = train(d, c);
  EXPECT_NE(a.model.layers()[0].weight.value, other.model.layers()[0].weight.value);
}

TEST(Trainer, ReportShapeAndFiniteLosses) {
  Dataset d = synthesize(300, 6);
  TrainConfig c = quick_config();
  c.epochs = 3;
  TrainResult r = train(d, c);
  ASSERT_EQ(r.report.epochs.size(), 3u);
  for (const auto& e : r.report.epochs) {
    for (double v : {e.l1, e.l2, e.l3}) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
    }
    EXPECT_GE(e.accuracy, 0.0);
    EXPECT_LE(e.accuracy, 1.0);
  }
  const std::string csv = r.report.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,l1,l2,l3,acc,validity");
}

TEST(Trainer, PosthocKeepsPredictorOfBaseModel) {
  Dataset d = synthesize(300, 7);
  TrainConfig c = quick_config();
  CounterNet base = train_base_model(d, c);
  c.mode = TrainMode::kPosthoc;
  TrainResult post = train(d, c);
  const std::size_t n = base.layers().size();
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(post.model.layers()[i].weight.value, base.layers()[i].weight.value);
    EXPECT_EQ(post.model.layers()[i].bias.value, base.layers()[i].bias.value);
  }
  EXPECT_EQ(post.report.epochs.size(), 2 * c.epochs);
}

TEST(Trainer, StandardModeKeepsPredictorOfBaseModel) {
  Dataset d = synthesize(300, 8);
  TrainConfig c = quick_config();
  CounterNet base = train_base_model(d, c);
  TrainResult joint = train(d, c);
  for (std::size_t i = 0; i < base.layers().size(); ++i) {
    EXPECT_EQ(joint.model.layers()[i].weight.value, base.layers()[i].weight.value);
  }
}

TEST(Trainer, BlackboxFollowsSurrogate) {
  Dataset d = synthesize(600, 9);
  TrainConfig c = quick_config();
  c.epochs = 10;
  CounterNet teacher = train_base_model(d, c);
  c.mode = TrainMode::kBlackbox;
  Surrogate s = [&](const Tensor& x) { return teacher.predict_proba(x); };
  TrainResult r = train(d, c, nullptr, s);
  const auto a = teacher.predict_labels(d.x);
  const auto b = r.model.predict_labels(d.x);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) agree += a[i] == b[i] ? 1 : 0;
  EXPECT_GE(static_cast<double>(agree) / static_cast<double>(a.size()), 0.9);
  CounterNet m = make_model(c, d.schema);
  EXPECT_THROW(Trainer(m, c), ConfigError);
}

TEST(Trainer, MulticlassTrains) {
  FeatureSchema s = small_schema(false, 3);
  Dataset d;
  d.schema = s;
  d.x = random_encoded(s, 200, 10);
  for (std::size_t r = 0; r < 200; ++r) {
    const std::size_t cls = d.x(r, 0) < 0.33 ? 0 : (d.x(r, 0) < 0.66 ? 1 : 2);
    d.labels.push_back(cls);
  }
  d.y = one_hot(d.labels, 3);
  TrainConfig c = quick_config();
  c.mode = TrainMode::kMulticlass;
  c.desired_class = 2;
  TrainResult r = train(d, c);
  for (const auto& e : r.report.epochs) EXPECT_TRUE(std::isfinite(e.l2));
  c.mode = TrainMode::kStandard;
  CounterNet m = make_model(c, s);
  EXPECT_THROW(Trainer(m, c), ConfigError);
}

TEST(Trainer, ImmutableProjectionDuringTraining) {
  FeatureSchema s = small_schema(true);
  CounterNet m(s, small_dims(s), 5);
  const Tensor x = random_encoded(s, 8, 11);
  Rng rng(0);
  Tape tape;
  const std::vector<bool> imm = s.immutable_columns();
  ForwardVars fv = m.forward(tape, tape.constant(x), 0.3, true, rng, &imm);
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 1; c < 4; ++c) EXPECT_EQ(fv.x_cf.value()(r, c), x(r, c));
  }
}

TEST(Divergence, GuardRejectsLargeOrNonFinite) {
  EXPECT_NO_THROW(check_loss(1.0, "l1"));
  EXPECT_THROW(check_loss(2e6, "l1"), NumericError);
  EXPECT_THROW(check_loss(std::nan(""), "l2"), NumericError);
  EXPECT_THROW(check_loss(INFINITY, "l3"), NumericError);
}

}  // namespace
}  // namespace cfnet
