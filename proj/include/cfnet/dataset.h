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

#ifndef CFNET_DATASET_H_
#define CFNET_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cfnet/schema.h"
#include "cfnet/tensor.h"

namespace cfnet {

// A CSV table held as strings. Column 0..n-1 follow the header.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(const std::string& name) const;
  RawTable subset(const std::vector<std::size_t>& row_indices) const;
};

// Header row required; comma-delimited; double quotes escape commas. Empty
// fields are rejected.
RawTable parse_csv(const std::string& text);
RawTable read_csv(const std::string& path);
std::string to_csv(const RawTable& table);
void write_csv(const RawTable& table, const std::string& path);

// Fills min/max and category lists that the declaration leaves open, using
// only the given rows. Categories keep order of first appearance.
FeatureSchema fit_schema(const RawTable& rows, const SchemaDeclaration& decl);

// Continuous values are scaled by (v-min)/(max-min) and clamped to [0,1].
// Throws EncodeError naming the feature on unseen categories.
std::vector<double> encode(const RawRow& row, const FeatureSchema& schema);
// Total on R^d: continuous values are de-normalized, categorical spans
// decoded by argmax (ties to the lowest index).
RawRow decode(std::span<const double> encoded, const FeatureSchema& schema);

// Reads feature values from a table row by header name.
RawRow raw_row_from_table(const RawTable& table, std::size_t row, const FeatureSchema& schema);

struct Dataset {
  Tensor x;                         // n x d, encoded
  Tensor y;                         // n x k, one-hot labels
  std::vector<std::size_t> labels;  // class indices
  FeatureSchema schema;

  std::size_t size() const { return x.rows(); }
  Dataset subset(std::span<const std::size_t> rows) const;
};

Dataset encode_table(const RawTable& table, const FeatureSchema& schema);
Tensor one_hot(const std::vector<std::size_t>& labels, std::size_t num_classes);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
  RawTable train_rows;
  RawTable test_rows;
};

// Seeded shuffle of row indices, the first round(n*test_fraction) go to test.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double test_fraction, std::uint64_t seed);

// Splits raw rows, fits the schema on the training side only, and encodes
// both sides with it.
TrainTestSplit split(const RawTable& table, const SchemaDeclaration& decl,
                     double test_fraction, std::uint64_t seed);

// Desk-scale stand-in dataset: two continuous features (income, debt), two
// categorical (employment, region). Labels come from a linear score in the
// encoded features thresholded at its median, then 5% of labels are flipped.
struct SyntheticTable {
  RawTable table;
  SchemaDeclaration declaration;
};
SyntheticTable synthesize_table(std::size_t n, std::uint64_t seed);
Dataset synthesize(std::size_t n, std::uint64_t seed);

}  // namespace cfnet

#endif  // CFNET_DATASET_H_
