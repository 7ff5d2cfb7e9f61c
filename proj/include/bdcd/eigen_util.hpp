// Copyright 2026 The bdcd Authors
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

#ifndef BDCD_EIGEN_UTIL_HPP_
#define BDCD_EIGEN_UTIL_HPP_

// Internal: row-major Eigen views over tensor storage. Not part of the
// public surface; included only from library sources.

#include <Eigen/Core>

#include "bdcd/tensor.hpp"

namespace bdcd {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;

template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
MatrixMap<T> as_matrix(T* data, std::int64_t rows, std::int64_t cols) {
  return MatrixMap<T>(data, rows, cols);
}

template <typename T>
ConstMatrixMap<T> as_matrix(const T* data, std::int64_t rows, std::int64_t cols) {
  return ConstMatrixMap<T>(data, rows, cols);
}

template <typename T>
MatrixMap<T> as_matrix(BasicTensor<T>& t, std::int64_t rows, std::int64_t cols) {
  return MatrixMap<T>(t.raw(), rows, cols);
}

template <typename T>
ConstMatrixMap<T> as_matrix(const BasicTensor<T>& t, std::int64_t rows,
                            std::int64_t cols) {
  return ConstMatrixMap<T>(t.raw(), rows, cols);
}

}  // namespace bdcd

#endif  // BDCD_EIGEN_UTIL_HPP_
