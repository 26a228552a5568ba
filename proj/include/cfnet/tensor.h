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

// Dense row-major 2-D tensor of doubles and the forward kernels shared by the
// autodiff tape and the tape-free inference path.

#ifndef CFNET_TENSOR_H_
#define CFNET_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cfnet {

using Rng = std::mt19937_64;

// Derives an independent stream seed from a base seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor row_vector(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  void fill(double v);
  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a[n×k]·b[k×m]
Tensor matmul(const Tensor& a, const Tensor& b);
// aᵀ[k×n]·b[n×m] for a[n×k]
Tensor matmul_tn(const Tensor& a, const Tensor& b);
// a[n×k]·bᵀ for b[m×k]
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// x·W + b with b broadcast over rows.
Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor softmax_rows(const Tensor& x);
void softmax_inplace(std::span<double> values);
double sigmoid(double v);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
Tensor column(const Tensor& x, std::size_t c);

double mse(const Tensor& a, const Tensor& b);
double squared_norm(const Tensor& x);

// Index of the row maximum; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);
std::vector<std::size_t> argmax_rows(const Tensor& x);

// Zero-mean normal with variance 2/fan_in, fan_in = rows.
Tensor he_initialize(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace cfnet

#endif  // CFNET_TENSOR_H_
