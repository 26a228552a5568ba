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
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cfnet/errors.h"

namespace cfnet {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& field) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && *begin == ' ') ++begin;
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    throw EncodeError(field, "feature '" + field + "' expects a number, got '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw FormatError("unterminated quote on CSV line " + std::to_string(line_no));
  out.push_back(std::move(cur));
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::size_t RawTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw FormatError("CSV has no column named '" + name + "'");
}

RawTable RawTable::subset(const std::vector<std::size_t>& row_indices) const {
  RawTable out;
  out.header = header;
  out.rows.reserve(row_indices.size());
  for (std::size_t i : row_indices) out.rows.push_back(rows.at(i));
  return out;
}

RawTable parse_csv(const std::string& text) {
  RawTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_line(line, line_no);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw FormatError("CSV line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, header has " +
                        std::to_string(table.header.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (fields[c].empty()) {
        throw FormatError("missing value in column '" + table.header[c] + "' on CSV line " +
                          std::to_string(line_no));
      }
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw FormatError("CSV has no header row");
  return table;
}

RawTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open CSV file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::string to_csv(const RawTable& table) {
  std::ostringstream os;
  auto emit = [&os](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os << ',';
      os << csv_escape(fields[i]);
    }
    os << '\n';
  };
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
  return os.str();
}

void write_csv(const RawTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write CSV file " + path);
  out << to_csv(table);
}

FeatureSchema fit_schema(const RawTable& rows, const SchemaDeclaration& decl) {
  if (rows.rows.size() < 2) throw SchemaError("fit_schema needs at least 2 rows");
  std::vector<Feature> features;
  for (const FeatureDeclaration& d : decl.features) {
    const std::size_t col = rows.column_index(d.name);
    Feature f;
    f.name = d.name;
    f.kind = d.kind;
    f.immutable = d.immutable;
    if (d.kind == FeatureKind::kCategorical) {
      if (d.categories) {
        f.categories = *d.categories;
      } else {
        for (const auto& r : rows.rows) {
          if (std::find(f.categories.begin(), f.categories.end(), r[col]) ==
              f.categories.end()) {
            f.categories.push_back(r[col]);
          }
        }
      }
      if (f.categories.empty()) throw SchemaError("feature '" + d.name + "' has no categories");
    } else {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (const auto& r : rows.rows) {
        const double v = parse_double(r[col], d.name);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      f.min = d.min.value_or(lo);
      f.max = d.max.value_or(hi);
      if (!(f.min < f.max)) {
        throw SchemaError("continuous feature '" + d.name + "' is constant on training rows");
      }
    }
    features.push_back(std::move(f));
  }
  LabelSpec label;
  label.name = decl.label_name;
  if (decl.label_classes) {
    label.classes = *decl.label_classes;
  } else {
    const std::size_t col = rows.column_index(decl.label_name);
    for (const auto& r : rows.rows) {
      if (std::find(label.classes.begin(), label.classes.end(), r[col]) ==
          label.classes.end()) {
        label.classes.push_back(r[col]);
      }
    }
  }
  return FeatureSchema(std::move(features), std::move(label));
}

std::vector<double> encode(const RawRow& row, const FeatureSchema& schema) {
  const auto& features = schema.features();
  if (row.size() != features.size()) {
    throw DimensionError("raw row has " + std::to_string(row.size()) + " values, schema has " +
                         std::to_string(features.size()) + " features");
  }
  std::vector<double> out(schema.encoded_width(), 0.0);
  for (std::size_t f = 0; f < features.size(); ++f) {
    const Feature& feat = features[f];
    const ColumnSpan& span = schema.layout().span(f);
    if (feat.is_categorical()) {
      const std::string value = raw_to_string(row[f]);
      const auto it = std::find(feat.categories.begin(), feat.categories.end(), value);
      if (it == feat.categories.end()) {
        throw EncodeError(feat.name,
                          "unseen category '" + value + "' for feature '" + feat.name + "'");
      }
      out[span.start + static_cast<std::size_t>(it - feat.categories.begin())] = 1.0;
    } else {
      double v = 0.0;
      if (const auto* d = std::get_if<double>(&row[f])) {
        v = *d;
        if (!std::isfinite(v)) throw EncodeError(feat.name, "non-finite value for " + feat.name);
      } else {
        v = parse_double(std::get<std::string>(row[f]), feat.name);
      }
      out[span.start] = std::clamp((v - feat.min) / (feat.max - feat.min), 0.0, 1.0);
    }
  }
  return out;
}

RawRow decode(std::span<const double> encoded, const FeatureSchema& schema) {
  if (encoded.size() != schema.encoded_width()) {
    throw DimensionError("decode expects width " + std::to_string(schema.encoded_width()));
  }
  RawRow out;
  out.reserve(schema.features().size());
  for (std::size_t f = 0; f < schema.features().size(); ++f) {
    const Feature& feat = schema.feature(f);
    const ColumnSpan& span = schema.layout().span(f);
    if (feat.is_categorical()) {
      out.emplace_back(feat.categories[argmax(encoded.subspan(span.start, span.len))]);
    } else {
      out.emplace_back(feat.min + encoded[span.start] * (feat.max - feat.min));
    }
  }
  return out;
}

RawRow raw_row_from_table(const RawTable& table, std::size_t row, const FeatureSchema& schema) {
  RawRow out;
  for (const Feature& f : schema.features()) {
    const std::string& cell = table.rows.at(row).at(table.column_index(f.name));
    if (f.is_categorical()) {
      out.emplace_back(cell);
    } else {
      out.emplace_back(parse_double(cell, f.name));
    }
  }
  return out;
}

Tensor one_hot(const std::vector<std::size_t>& labels, std::size_t num_classes) {
  Tensor y(labels.size(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) throw DimensionError("label index out of range");
    y(i, labels[i]) = 1.0;
  }
  return y;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.x = gather_rows(x, rows);
  out.y = gather_rows(y, rows);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) out.labels.push_back(labels.at(r));
  out.schema = schema;
  return out;
}

Dataset encode_table(const RawTable& table, const FeatureSchema& schema) {
  const std::size_t n = table.rows.size();
  const std::size_t d = schema.encoded_width();
  std::vector<std::size_t> cols;
  for (const Feature& f : schema.features()) cols.push_back(table.column_index(f.name));
  const std::size_t label_col = table.column_index(schema.label().name);
  Dataset ds;
  ds.schema = schema;
  ds.x = Tensor(n, d);
  ds.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = table.rows[i];
    RawRow raw;
    raw.reserve(cols.size());
    for (std::size_t f = 0; f < cols.size(); ++f) {
      if (schema.feature(f).is_categorical()) {
        raw.emplace_back(r[cols[f]]);
      } else {
        raw.emplace_back(parse_double(r[cols[f]], schema.feature(f).name));
      }
    }
    const std::vector<double> enc = encode(raw, schema);
    std::copy(enc.begin(), enc.end(), ds.x.row(i).begin());
    ds.labels.push_back(schema.class_index(r[label_col]));
  }
  ds.y = one_hot(ds.labels, schema.num_classes());
  return ds;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0,1)");
  }
  const auto n_test =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  if (n_test == 0 || n_test >= n) throw ConfigError("split leaves one side empty");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<long>(n_test));
  std::vector<std::size_t> train(idx.begin() + static_cast<long>(n_test), idx.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(test)};
}

TrainTestSplit split(const RawTable& table, const SchemaDeclaration& decl, double test_fraction,
                     std::uint64_t seed) {
  auto [train_idx, test_idx] = split_indices(table.rows.size(), test_fraction, seed);
  TrainTestSplit out;
  out.train_rows = table.subset(train_idx);
  out.test_rows = table.subset(test_idx);
  const FeatureSchema schema = fit_schema(out.train_rows, decl);
  out.train = encode_table(out.train_rows, schema);
  out.test = encode_table(out.test_rows, schema);
  return out;
}

SyntheticTable synthesize_table(std::size_t n, std::uint64_t seed) {
  if (n < 100) throw ConfigError("synthesize needs n >= 100");
  static const std::vector<std::string> kEmployment = {"unemployed", "part_time", "full_time"};
  static const std::vector<std::string> kRegion = {"north", "south", "east", "west"};
  static const double kEmploymentEffect[] = {-0.6, -0.1, 0.3};
  static const double kRegionEffect[] = {0.15, -0.15, 0.05, -0.05};
  constexpr double kIncomeMin = 20.0, kIncomeMax = 100.0;
  constexpr double kDebtMin = 0.0, kDebtMax = 50.0;
  constexpr double kLabelNoise = 0.05;

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::discrete_distribution<std::size_t> employment({0.2, 0.3, 0.5});
  std::uniform_int_distribution<std::size_t> region(0, kRegion.size() - 1);
  std::bernoulli_distribution flip(kLabelNoise);

  struct Draw {
    double income, debt;
    std::size_t emp, reg;
    double score;
  };
  std::vector<Draw> draws(n);
  for (Draw& d : draws) {
    const double u1 = unit(rng), u2 = unit(rng);
    d.emp = employment(rng);
    d.reg = region(rng);
    d.income = kIncomeMin + u1 * (kIncomeMax - kIncomeMin);
    d.debt = kDebtMin + u2 * (kDebtMax - kDebtMin);
    d.score = 1.6 * u1 - 1.2 * u2 + kEmploymentEffect[d.emp] + kRegionEffect[d.reg];
  }
  std::vector<double> scores;
  for (const Draw& d : draws) scores.push_back(d.score);
  std::nth_element(scores.begin(), scores.begin() + static_cast<long>(n / 2), scores.end());
  const double threshold = scores[n / 2];

  SyntheticTable out;
  out.table.header = {"income", "debt", "employment", "region", "approved"};
  for (const Draw& d : draws) {
    bool positive = d.score > threshold;
    if (flip(rng)) positive = !positive;
    out.table.rows.push_back({format_double(d.income), format_double(d.debt),
                              kEmployment[d.emp], kRegion[d.reg], positive ? "yes" : "no"});
  }
  SchemaDeclaration& decl = out.declaration;
  decl.features.push_back({"income", FeatureKind::kContinuous, false, kIncomeMin, kIncomeMax, {}});
  decl.features.push_back({"debt", FeatureKind::kContinuous, false, kDebtMin, kDebtMax, {}});
  decl.features.push_back({"employment", FeatureKind::kCategorical, false, {}, {}, kEmployment});
  decl.features.push_back({"region", FeatureKind::kCategorical, false, {}, {}, kRegion});
  decl.label_name = "approved";
  decl.label_classes = std::vector<std::string>{"no", "yes"};
  return out;
}

Dataset synthesize(std::size_t n, std::uint64_t seed) {
  SyntheticTable t = synthesize_table(n, seed);
  return encode_table(t.table, fit_schema(t.table, t.declaration));
}

}  // namespace cfnet
