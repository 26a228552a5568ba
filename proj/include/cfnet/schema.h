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

// Feature schemas and the encoded column layout they induce.
//
// Continuous features occupy one column, min-max scaled into [0,1].
// Categorical features occupy one column per category (one-hot), in the
// order the categories were first seen in the training data.

#ifndef CFNET_SCHEMA_H_
#define CFNET_SCHEMA_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cfnet/autodiff.h"
#include "json.hpp"

namespace cfnet {

enum class FeatureKind { kContinuous, kCategorical };

struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  double min = 0.0;
  double max = 1.0;
  std::vector<std::string> categories;
  bool immutable = false;

  bool is_categorical() const { return kind == FeatureKind::kCategorical; }
};

struct LabelSpec {
  std::string name;
  std::vector<std::string> classes;
};

struct ColumnSpan {
  std::size_t start = 0;
  std::size_t len = 0;
};

// Per-feature column spans; contiguous and covering [0, width).
class EncodedLayout {
 public:
  EncodedLayout() = default;
  explicit EncodedLayout(std::vector<ColumnSpan> spans, std::vector<bool> categorical);

  std::size_t width() const { return width_; }
  std::size_t num_features() const { return spans_.size(); }
  const ColumnSpan& span(std::size_t feature) const { return spans_.at(feature); }
  bool categorical(std::size_t feature) const { return categorical_.at(feature); }
  const std::vector<ColumnSpan>& spans() const { return spans_; }

  // Generator output heads: one sigmoid per continuous column, one softmax
  // per categorical span.
  std::vector<OutputHead> heads() const;
  // True for every encoded column belonging to a continuous feature.
  std::vector<bool> continuous_columns() const;

 private:
  std::vector<ColumnSpan> spans_;
  std::vector<bool> categorical_;
  std::size_t width_ = 0;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  // Throws SchemaError if any invariant is violated.
  FeatureSchema(std::vector<Feature> features, LabelSpec label);

  const std::vector<Feature>& features() const { return features_; }
  const Feature& feature(std::size_t i) const { return features_.at(i); }
  const LabelSpec& label() const { return label_; }
  const EncodedLayout& layout() const { return layout_; }
  std::size_t encoded_width() const { return layout_.width(); }
  std::size_t num_classes() const { return label_.classes.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::size_t class_index(std::string_view cls) const;

  // Encoded columns that belong to immutable features.
  std::vector<bool> immutable_columns() const;
  bool has_immutable() const;

  nlohmann::ordered_json to_json() const;
  static FeatureSchema from_json(const nlohmann::json& j);

 private:
  std::vector<Feature> features_;
  LabelSpec label_;
  EncodedLayout layout_;
};

// Schema JSON in which min/max/categories/classes may be left out; they are
// then fitted from training rows.
struct FeatureDeclaration {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  bool immutable = false;
  std::optional<double> min;
  std::optional<double> max;
  std::optional<std::vector<std::string>> categories;
};

struct SchemaDeclaration {
  std::vector<FeatureDeclaration> features;
  std::string label_name;
  std::optional<std::vector<std::string>> label_classes;

  static SchemaDeclaration from_json(const nlohmann::json& j);
  static SchemaDeclaration load(const std::string& path);
  nlohmann::ordered_json to_json() const;
  FeatureDeclaration& feature(std::string_view name);
};

// A raw feature value at the API boundary.
using RawValue = std::variant<double, std::string>;
// Raw values in schema feature order.
using RawRow = std::vector<RawValue>;

std::string raw_to_string(const RawValue& v);
nlohmann::json raw_to_json(const RawValue& v);

}  // namespace cfnet

#endif  // CFNET_SCHEMA_H_
