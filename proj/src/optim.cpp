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

#include "bdcd/optim.hpp"

#include <algorithm>
#include <cmath>

namespace bdcd {

namespace {

template <typename T>
void check_prob_pair(const BasicTensor<T>& probs, const BasicTensor<T>& onehot) {
  if (probs.rank() != 2 || probs.shape() != onehot.shape()) {
    throw InvalidShapeError("cross-entropy shape mismatch: probs " +
                            shape_to_string(probs.shape()) + ", onehot " +
                            shape_to_string(onehot.shape()));
  }
  const std::int64_t n = onehot.dim(0), k = onehot.dim(1);
  for (std::int64_t i = 0; i < n; ++i) {
    int hot = 0;
    for (std::int64_t j = 0; j < k; ++j) {
      const T v = onehot.at(i, j);
      if (v == T{1}) {
        ++hot;
      } else if (v != T{0}) {
        hot = -1;
        break;
      }
    }
    if (hot != 1) {
      throw InvalidParameterError("onehot row " + std::to_string(i) +
                                  " must contain exactly one 1");
    }
  }
}

}  // namespace

template <typename T>
T categorical_cross_entropy(const BasicTensor<T>& probs, const BasicTensor<T>& onehot) {
  check_prob_pair(probs, onehot);
  const std::int64_t n = probs.dim(0), k = probs.dim(1);
  double total = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < k; ++j) {
      if (onehot.at(i, j) == T{1}) {
        const double p = std::max<double>(probs.at(i, j), kProbabilityFloor);
        total -= std::log(p);
      }
    }
  }
  return static_cast<T>(total / static_cast<double>(n));
}

template <typename T>
BasicTensor<T> softmax_ce_grad(const BasicTensor<T>& probs, const BasicTensor<T>& onehot) {
  check_prob_pair(probs, onehot);
  const T inv_n = T{1} / static_cast<T>(probs.dim(0));
  BasicTensor<T> grad(probs.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] = (probs[i] - onehot[i]) * inv_n;
  }
  return grad;
}

template <typename T>
void adam_step(BasicTensor<T>& params, const BasicTensor<T>& grads, AdamState<T>& state,
               double learning_rate) {
  if (!(learning_rate > 0.0)) {
    throw InvalidParameterError("learning rate must be positive");
  }
  if (params.shape() != grads.shape() || state.m.shape() != params.shape() ||
      state.v.shape() != params.shape()) {
    throw InvalidShapeError("adam_step shape mismatch: params " +
                            shape_to_string(params.shape()) + ", grads " +
                            shape_to_string(grads.shape()));
  }
  state.t += 1;
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  const T one_minus_b1 = static_cast<T>(1.0 - state.beta1);
  const T one_minus_b2 = static_cast<T>(1.0 - state.beta2);
  const T bias1 = static_cast<T>(1.0 - std::pow(state.beta1, static_cast<double>(state.t)));
  const T bias2 = static_cast<T>(1.0 - std::pow(state.beta2, static_cast<double>(state.t)));
  const T lr = static_cast<T>(learning_rate);
  const T eps = static_cast<T>(state.epsilon);

  T* p = params.raw();
  T* m = state.m.raw();
  T* v = state.v.raw();
  const T* g = grads.raw();
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = b1 * m[i] + one_minus_b1 * g[i];
    v[i] = b2 * v[i] + one_minus_b2 * g[i] * g[i];
    const T m_hat = m[i] / bias1;
    const T v_hat = v[i] / bias2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

template float categorical_cross_entropy<float>(const Tensor&, const Tensor&);
template double categorical_cross_entropy<double>(const TensorD&, const TensorD&);
template Tensor softmax_ce_grad<float>(const Tensor&, const Tensor&);
template TensorD softmax_ce_grad<double>(const TensorD&, const TensorD&);
template void adam_step<float>(Tensor&, const Tensor&, AdamState<float>&, double);
template void adam_step<double>(TensorD&, const TensorD&, AdamState<double>&, double);

}  // namespace bdcd
