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

#include "cfnet/dataset.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "cfnet/errors.h"
#include "cfnet/schema.h"

namespace cfnet {
namespace {

FeatureSchema abc_schema() {
  Feature num{"amount", FeatureKind::kContinuous, 10.0, 20.0, {}, false};
  Feature cat{"color", FeatureKind::kCategorical, 0, 1, {"a", "b", "c"}, false};
  return FeatureSchema({num, cat}, LabelSpec{"label", {"no", "yes"}});
}

TEST(Schema, RejectsBrokenDeclarations) {
  Feature flat{"x", FeatureKind::kContinuous, 1.0, 1.0, {}, false};
  EXPECT_THROW(FeatureSchema({flat}, LabelSpec{"y", {"a", "b"}}), SchemaError);
  Feature lonely{"c", FeatureKind::kCategorical, 0, 1, {"only"}, false};
  EXPECT_THROW(FeatureSchema({lonely}, LabelSpec{"y", {"a", "b"}}), SchemaError);
  Feature ok{"x", FeatureKind::kContinuous, 0.0, 1.0, {}, false};
  EXPECT_THROW(FeatureSchema({ok, ok}, LabelSpec{"y", {"a", "b"}}), SchemaError);
  EXPECT_THROW(FeatureSchema({ok}, LabelSpec{"y", {"a"}}), SchemaError);
}

TEST(Schema, LayoutSpansTile) {
  FeatureSchema s = abc_schema();
  ASSERT_EQ(s.encoded_width(), 4u);
  EXPECT_EQ(s.layout().span(0).start, 0u);
  EXPECT_EQ(s.layout().span(1).start, 1u);
  EXPECT_EQ(s.layout().span(1).len, 3u);
  const auto heads = s.layout().heads();
  ASSERT_EQ(heads.size(), 2u);
  EXPECT_FALSE(heads[0].categorical);
  EXPECT_TRUE(heads[1].categorical);
}

TEST(Schema, JsonRoundTrip) {
  FeatureSchema s = abc_schema();
  FeatureSchema back = FeatureSchema::from_json(nlohmann::json::parse(s.to_json().dump()));
  EXPECT_EQ(back.to_json(), s.to_json());
}

TEST(Schema, ImmutableColumns) {
  Feature num{"amount", FeatureKind::kContinuous, 0.0, 1.0, {}, false};
  Feature cat{"color", FeatureKind::kCategorical, 0, 1, {"a", "b"}, true};
  FeatureSchema s({num, cat}, LabelSpec{"label", {"no", "yes"}});
  EXPECT_EQ(s.immutable_columns(), (std::vector<bool>{false, true, true}));
  EXPECT_TRUE(s.has_immutable());
  EXPECT_FALSE(abc_schema().has_immutable());
}

TEST(FitSchema, MinMaxAndCategoryOrder) {
  RawTable t = parse_csv("v,c,y\n1,a,n\n5,b,p\n3,a,n\n");
  SchemaDeclaration d;
  d.features = {{"v", FeatureKind::kContinuous, false, {}, {}, {}},
                {"c", FeatureKind::kCategorical, false, {}, {}, {}}};
  d.label_name = "y";
  FeatureSchema s = fit_schema(t, d);
  EXPECT_DOUBLE_EQ(s.feature(0).min, 1.0);
  EXPECT_DOUBLE_EQ(s.feature(0).max, 5.0);
  EXPECT_EQ(s.feature(1).categories, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(s.label().classes, (std::vector<std::string>{"n", "p"}));
}

TEST(FitSchema, ConstantColumnRejected) {
  RawTable t = parse_csv("v,y\n2,n\n2,p\n");
  SchemaDeclaration d;
  d.features = {{"v", FeatureKind::kContinuous, false, {}, {}, {}}};
  d.label_name = "y";
  EXPECT_THROW(fit_schema(t, d), SchemaError);
}

TEST(FitSchema, AdultWidth) {
  const std::filesystem::path dir = std::filesystem::path(CFNET_SOURCE_DIR) / "data" / "adult";
  if (!std::filesystem::exists(dir / "adult.csv")) GTEST_SKIP() << "Adult data not prepared";
  SchemaDeclaration d = SchemaDeclaration::load((dir / "adult_schema.json").string());
  RawTable t = read_csv((dir / "adult.csv").string());
  std::size_t cont = 0;
  for (const auto& f : d.features) cont += f.kind == FeatureKind::kContinuous ? 1 : 0;
  EXPECT_EQ(cont, 2u);
  EXPECT_EQ(d.features.size() - cont, 6u);
  EXPECT_EQ(fit_schema(t, d).encoded_width(), 29u);
}

TEST(Encode, SpecExamples) {
  FeatureSchema s = abc_schema();
  EXPECT_EQ(encode({10.0, std::string("b")}, s), (std::vector<double>{0, 0, 1, 0}));
  EXPECT_EQ(encode({20.0, std::string("a")}, s)[0], 1.0);
  EXPECT_DOUBLE_EQ(encode({12.5, std::string("c")}, s)[0], 0.25);
  EXPECT_DOUBLE_EQ(encode({99.0, std::string("c")}, s)[0], 1.0);
  EXPECT_DOUBLE_EQ(encode({-5.0, std::string("c")}, s)[0], 0.0);
}

TEST(Encode, UnseenCategoryNamesFeature) {
  FeatureSchema s = abc_schema();
  try {
    encode({10.0, std::string("z")}, s);
    FAIL() << "expected EncodeError";
  } catch (const EncodeError& e) {
    EXPECT_EQ(e.field(), "color");
  }
}

TEST(Decode, SpecExamples) {
  FeatureSchema s = abc_schema();
  std::vector<double> v{0.5, 0.4, 0.6, 0.0};
  RawRow r = decode(v, s);
  EXPECT_DOUBLE_EQ(std::get<double>(r[0]), 15.0);
  EXPECT_EQ(std::get<std::string>(r[1]), "b");
  std::vector<double> tie{-3.0, 0.5, 0.5, 0.5};
  EXPECT_EQ(std::get<std::string>(decode(tie, s)[1]), "a");
}

TEST(Decode, RoundTripsEncode) {
  FeatureSchema s = abc_schema();
  Rng rng(5);
  std::uniform_real_distribution<double> u(10.0, 20.0);
  const std::vector<std::string> cats{"a", "b", "c"};
  for (int i = 0; i < 200; ++i) {
    RawRow row{u(rng), cats[static_cast<std::size_t>(i) % 3]};
    RawRow back = decode(encode(row, s), s);
    EXPECT_NEAR(std::get<double>(back[0]), std::get<double>(row[0]), 1e-9);
    EXPECT_EQ(std::get<std::string>(back[1]), std::get<std::string>(row[1]));
  }
}

TEST(Csv, QuotedFieldsAndErrors) {
  RawTable t = parse_csv("a,b\n\"x,y\",2\n");
  EXPECT_EQ(t.rows[0][0], "x,y");
  EXPECT_THROW(parse_csv("a,b\n1\n"), FormatError);
  EXPECT_THROW(parse_csv("a,b\n1,\n"), FormatError);
  EXPECT_THROW(parse_csv(""), FormatError);
  EXPECT_EQ(to_csv(parse_csv(to_csv(t))), to_csv(t));
}

TEST(Split, SizesMembershipDeterminism) {
  auto [train, test] = split_indices(10, 0.2, 7);
  EXPECT_EQ(train.size(), 8u);
  EXPECT_EQ(test.size(), 2u);
  std::set<std::size_t> all(train.begin(), train.end());
  for (auto i : test) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), 10u);
  auto again = split_indices(10, 0.2, 7);
  EXPECT_EQ(again.first, train);
  EXPECT_EQ(again.second, test);
  EXPECT_THROW(split_indices(10, 0.0, 1), ConfigError);
  EXPECT_THROW(split_indices(3, 0.1, 1), ConfigError);
}

TEST(Split, SchemaFittedOnTrainOnly) {
  SyntheticTable st = synthesize_table(200, 3);
  st.declaration.feature("income").min.reset();
  st.declaration.feature("income").max.reset();
  TrainTestSplit sp = split(st.table, st.declaration, 0.25, 9);
  double lo = 1e300, hi = -1e300;
  const std::size_t col = sp.train_rows.column_index("income");
  for (const auto& r : sp.train_rows.rows) {
    lo = std::min(lo, std::stod(r[col]));
    hi = std::max(hi, std::stod(r[col]));
  }
  EXPECT_DOUBLE_EQ(sp.train.schema.feature(0).min, lo);
  EXPECT_DOUBLE_EQ(sp.train.schema.feature(0).max, hi);
  EXPECT_EQ(sp.test.schema.to_json(), sp.train.schema.to_json());
  EXPECT_EQ(sp.train.size() + sp.test.size(), 200u);
}

void expect_dataset_invariants(const Dataset& d) {
  const auto& layout = d.schema.layout();
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (std::size_t f = 0; f < layout.num_features(); ++f) {
      const ColumnSpan s = layout.span(f);
      if (layout.categorical(f)) {
        double total = 0.0;
        for (std::size_t c = s.start; c < s.start + s.len; ++c) {
          EXPECT_TRUE(d.x(r, c) == 0.0 || d.x(r, c) == 1.0);
          total += d.x(r, c);
        }
        EXPECT_EQ(total, 1.0);
      } else {
        EXPECT_GE(d.x(r, s.start), 0.0);
        EXPECT_LE(d.x(r, s.start), 1.0);
      }
    }
    double ysum = 0.0;
    for (double v : d.y.row(r)) ysum += v;
    EXPECT_EQ(ysum, 1.0);
    EXPECT_EQ(d.y(r, d.labels[r]), 1.0);
  }
}

TEST(Synthetic, InvariantsBalanceDeterminism) {
  Dataset d = synthesize(1000, 4);
  expect_dataset_invariants(d);
  EXPECT_EQ(d.schema.features().size(), 4u);
  std::size_t pos = 0;
  for (auto l : d.labels) pos += l;
  const double frac = static_cast<double>(pos) / 1000.0;
  EXPECT_GE(frac, 0.4);
  EXPECT_LE(frac, 0.6);
  Dataset e = synthesize(1000, 4);
  EXPECT_EQ(d.x, e.x);
  EXPECT_EQ(d.labels, e.labels);
  EXPECT_NE(synthesize(1000, 5).x, d.x);
  EXPECT_THROW(synthesize(99, 1), ConfigError);
}

// Plain batch gradient-descent logistic regression.
TEST(Synthetic, LinearProbeSeparates) {
  Dataset d = synthesize(2000, 8);
  const std::size_t dim = d.x.cols();
  std::vector<double> w(dim + 1, 0.0);
  for (int it = 0; it < 3000; ++it) {
    std::vector<double> g(dim + 1, 0.0);
    for (std::size_t r = 0; r < d.size(); ++r) {
      double s = w[dim];
      for (std::size_t c = 0; c < dim; ++c) s += w[c] * d.x(r, c);
      const double err = 1.0 / (1.0 + std::exp(-s)) - static_cast<double>(d.labels[r]);
      for (std::size_t c = 0; c < dim; ++c) g[c] += err * d.x(r, c);
      g[dim] += err;
    }
    for (std::size_t c = 0; c <= dim; ++c) w[c] -= 2.0 * g[c] / static_cast<double>(d.size());
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < d.size(); ++r) {
    double s = w[dim];
    for (std::size_t c = 0; c < dim; ++c) s += w[c] * d.x(r, c);
    correct += (s > 0.0) == (d.labels[r] == 1) ? 1 : 0;
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(d.size()), 0.9);
}

}  // namespace
}  // namespace cfnet
