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

#ifndef BDCD_OPTIM_HPP_
#define BDCD_OPTIM_HPP_

#include <cstdint>

#include "bdcd/tensor.hpp"

namespace bdcd {

/// Probabilities are clamped to at least this before taking the log.
inline constexpr double kProbabilityFloor = 1e-12;

/// Mean over rows of -ln(p_true). Rows of onehot must contain exactly one 1.
template <typename T>
T categorical_cross_entropy(const BasicTensor<T>& probs, const BasicTensor<T>& onehot);

/// Gradient of mean cross-entropy w.r.t. the logits feeding a softmax:
/// (probs - onehot) / N.
template <typename T>
BasicTensor<T> softmax_ce_grad(const BasicTensor<T>& probs, const BasicTensor<T>& onehot);

/// Moment estimates for one parameter tensor.
template <typename T>
struct AdamState {
  BasicTensor<T> m;
  BasicTensor<T> v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(const Shape& shape) : m(shape), v(shape) {}
};

/// One bias-corrected Adam update, in place on params and state.
template <typename T>
void adam_step(BasicTensor<T>& params, const BasicTensor<T>& grads, AdamState<T>& state,
               double learning_rate);

}  // namespace bdcd

#endif  // BDCD_OPTIM_HPP_
