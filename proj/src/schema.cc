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

#include "cfnet/schema.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cfnet/errors.h"

namespace cfnet {

using nlohmann::json;

EncodedLayout::EncodedLayout(std::vector<ColumnSpan> spans, std::vector<bool> categorical)
    : spans_(std::move(spans)), categorical_(std::move(categorical)) {
  if (spans_.size() != categorical_.size()) throw SchemaError("layout size mismatch");
  for (const ColumnSpan& s : spans_) {
    if (s.start != width_ || s.len == 0) throw SchemaError("layout spans must be contiguous");
    width_ += s.len;
  }
}

std::vector<OutputHead> EncodedLayout::heads() const {
  std::vector<OutputHead> out;
  for (std::size_t f = 0; f < spans_.size(); ++f) {
    if (categorical_[f]) {
      out.push_back({spans_[f].start, spans_[f].len, true});
    } else {
      for (std::size_t c = 0; c < spans_[f].len; ++c) {
        out.push_back({spans_[f].start + c, 1, false});
      }
    }
  }
  return out;
}

std::vector<bool> EncodedLayout::continuous_columns() const {
  std::vector<bool> out(width_, false);
  for (std::size_t f = 0; f < spans_.size(); ++f) {
    if (categorical_[f]) continue;
    for (std::size_t c = 0; c < spans_[f].len; ++c) out[spans_[f].start + c] = true;
  }
  return out;
}

FeatureSchema::FeatureSchema(std::vector<Feature> features, LabelSpec label)
    : features_(std::move(features)), label_(std::move(label)) {
  if (features_.empty()) throw SchemaError("schema has no features");
  std::set<std::string> names;
  std::vector<ColumnSpan> spans;
  std::vector<bool> categorical;
  std::size_t offset = 0;
  for (const Feature& f : features_) {
    if (f.name.empty()) throw SchemaError("feature with empty name");
    if (!names.insert(f.name).second) throw SchemaError("duplicate feature name: " + f.name);
    std::size_t len = 1;
    if (f.is_categorical()) {
      if (f.categories.size() < 2) {
        throw SchemaError("categorical feature '" + f.name + "' needs at least 2 categories");
      }
      std::set<std::string> cats(f.categories.begin(), f.categories.end());
      if (cats.size() != f.categories.size()) {
        throw SchemaError("duplicate category in feature '" + f.name + "'");
      }
      len = f.categories.size();
    } else if (!(std::isfinite(f.min) && std::isfinite(f.max) && f.min < f.max)) {
      throw SchemaError("continuous feature '" + f.name + "' needs min < max");
    }
    spans.push_back({offset, len});
    categorical.push_back(f.is_categorical());
    offset += len;
  }
  if (label_.name.empty()) throw SchemaError("label has no name");
  if (names.count(label_.name) != 0) throw SchemaError("label name collides with a feature");
  if (label_.classes.size() < 2) throw SchemaError("label needs at least 2 classes");
  layout_ = EncodedLayout(std::move(spans), std::move(categorical));
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t FeatureSchema::class_index(std::string_view cls) const {
  for (std::size_t i = 0; i < label_.classes.size(); ++i) {
    if (label_.classes[i] == cls) return i;
  }
  throw EncodeError(label_.name, "unknown class '" + std::string(cls) + "' for label '" +
                                     label_.name + "'");
}

std::vector<bool> FeatureSchema::immutable_columns() const {
  std::vector<bool> out(encoded_width(), false);
  for (std::size_t f = 0; f < features_.size(); ++f) {
    if (!features_[f].immutable) continue;
    const ColumnSpan& s = layout_.span(f);
    for (std::size_t c = 0; c < s.len; ++c) out[s.start + c] = true;
  }
  return out;
}

bool FeatureSchema::has_immutable() const {
  return std::any_of(features_.begin(), features_.end(),
                     [](const Feature& f) { return f.immutable; });
}

nlohmann::ordered_json FeatureSchema::to_json() const {
  nlohmann::ordered_json j;
  j["features"] = nlohmann::ordered_json::array();
  for (const Feature& f : features_) {
    nlohmann::ordered_json fj;
    fj["name"] = f.name;
    fj["kind"] = f.is_categorical() ? "categorical" : "continuous";
    if (f.is_categorical()) {
      fj["categories"] = f.categories;
    } else {
      fj["min"] = f.min;
      fj["max"] = f.max;
    }
    fj["immutable"] = f.immutable;
    j["features"].push_back(std::move(fj));
  }
  j["label"] = {{"name", label_.name}, {"classes", label_.classes}};
  return j;
}

namespace {

FeatureKind parse_kind(const json& fj) {
  const std::string kind = fj.at("kind").get<std::string>();
  if (kind == "continuous") return FeatureKind::kContinuous;
  if (kind == "categorical") return FeatureKind::kCategorical;
  throw SchemaError("unknown feature kind '" + kind + "'");
}

std::vector<std::string> string_list(const json& j) {
  std::vector<std::string> out;
  for (const json& v : j) {
    if (v.is_string()) {
      out.push_back(v.get<std::string>());
    } else if (v.is_number_integer()) {
      out.push_back(std::to_string(v.get<long long>()));
    } else {
      throw SchemaError("category and class names must be strings");
    }
  }
  return out;
}

}  // namespace

FeatureSchema FeatureSchema::from_json(const json& j) {
  try {
    SchemaDeclaration decl = SchemaDeclaration::from_json(j);
    std::vector<Feature> features;
    for (const FeatureDeclaration& d : decl.features) {
      Feature f;
      f.name = d.name;
      f.kind = d.kind;
      f.immutable = d.immutable;
      if (d.kind == FeatureKind::kCategorical) {
        if (!d.categories) throw SchemaError("feature '" + d.name + "' lacks categories");
        f.categories = *d.categories;
      } else {
        if (!d.min || !d.max) throw SchemaError("feature '" + d.name + "' lacks min/max");
        f.min = *d.min;
        f.max = *d.max;
      }
      features.push_back(std::move(f));
    }
    if (!decl.label_classes) throw SchemaError("label lacks classes");
    return FeatureSchema(std::move(features), LabelSpec{decl.label_name, *decl.label_classes});
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed schema JSON: ") + e.what());
  }
}

SchemaDeclaration SchemaDeclaration::from_json(const json& j) {
  try {
    SchemaDeclaration decl;
    for (const json& fj : j.at("features")) {
      FeatureDeclaration d;
      d.name = fj.at("name").get<std::string>();
      d.kind = parse_kind(fj);
      d.immutable = fj.value("immutable", false);
      if (fj.contains("min")) d.min = fj.at("min").get<double>();
      if (fj.contains("max")) d.max = fj.at("max").get<double>();
      if (fj.contains("categories")) d.categories = string_list(fj.at("categories"));
      decl.features.push_back(std::move(d));
    }
    const json& lj = j.at("label");
    decl.label_name = lj.at("name").get<std::string>();
    if (lj.contains("classes")) decl.label_classes = string_list(lj.at("classes"));
    return decl;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed schema JSON: ") + e.what());
  }
}

SchemaDeclaration SchemaDeclaration::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open schema file " + path);
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw FormatError("schema file " + path + " is not valid JSON: " + e.what());
  }
}

nlohmann::ordered_json SchemaDeclaration::to_json() const {
  nlohmann::ordered_json j;
  j["features"] = nlohmann::ordered_json::array();
  for (const FeatureDeclaration& d : features) {
    nlohmann::ordered_json fj;
    fj["name"] = d.name;
    fj["kind"] = d.kind == FeatureKind::kCategorical ? "categorical" : "continuous";
    if (d.min) fj["min"] = *d.min;
    if (d.max) fj["max"] = *d.max;
    if (d.categories) fj["categories"] = *d.categories;
    fj["immutable"] = d.immutable;
    j["features"].push_back(std::move(fj));
  }
  j["label"] = {{"name", label_name}};
  if (label_classes) j["label"]["classes"] = *label_classes;
  return j;
}

FeatureDeclaration& SchemaDeclaration::feature(std::string_view name) {
  for (FeatureDeclaration& f : features) {
    if (f.name == name) return f;
  }
  throw SchemaError("no declared feature named '" + std::string(name) + "'");
}

std::string raw_to_string(const RawValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  std::ostringstream os;
  os.precision(17);
  os << std::get<double>(v);
  return os.str();
}

json raw_to_json(const RawValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return std::get<double>(v);
}

}  // namespace cfnet
