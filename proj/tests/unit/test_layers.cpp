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

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bdcd/layers.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace bdcd;
using namespace bdcd::testing;

TEST_CASE("conv2d forward fixtures") {
  SUBCASE("1x1 identity kernel") {
    Rng rng(1);
    const Tensor x = uniform<float>({2, 5, 5, 1}, -1.0f, 1.0f, rng);
    const auto p = LayerParams<float>::conv2d(Tensor({1, 1, 1, 1}, {1.0f}), zeros<float>({1}));
    CHECK(conv2d_forward(x, p).output == x);
  }
  SUBCASE("2x2 ones kernel over 3x3 ones, valid") {
    const auto p = LayerParams<float>::conv2d(constant<float>({2, 2, 1, 1}, 1.0f),
                                              zeros<float>({1}), 1, Padding::kValid);
    const auto out = conv2d_forward(constant<float>({1, 3, 3, 1}, 1.0f), p).output;
    CHECK(out == constant<float>({1, 2, 2, 1}, 4.0f));
  }
  SUBCASE("zero weights leave the bias") {
    const auto p = LayerParams<float>::conv2d(zeros<float>({3, 3, 2, 3}),
                                              Tensor({3}, {0.5f, -1.0f, 2.0f}));
    Rng rng(2);
    const auto out = conv2d_forward(uniform<float>({1, 4, 4, 2}, -1.0f, 1.0f, rng), p).output;
    CHECK(out.shape() == Shape{1, 4, 4, 3});
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i] == Tensor({3}, {0.5f, -1.0f, 2.0f})[i % 3]);
    }
  }
  SUBCASE("same padding keeps spatial size; valid shrinks it") {
    Rng rng(3);
    const auto x = uniform<float>({1, 7, 6, 2}, -1.0f, 1.0f, rng);
    auto same = LayerParams<float>::conv2d(zeros<float>({3, 3, 2, 4}), zeros<float>({4}));
    auto valid = LayerParams<float>::conv2d(zeros<float>({3, 3, 2, 4}), zeros<float>({4}), 1,
                                            Padding::kValid);
    CHECK(conv2d_forward(x, same).output.shape() == Shape{1, 7, 6, 4});
    CHECK(conv2d_forward(x, valid).output.shape() == Shape{1, 5, 4, 4});
  }
  SUBCASE("channel mismatch") {
    const auto p = LayerParams<float>::conv2d(zeros<float>({3, 3, 2, 4}), zeros<float>({4}));
    CHECK_THROWS_AS(conv2d_forward(zeros<float>({1, 4, 4, 3}), p), InvalidShapeError);
  }
}

TEST_CASE("conv2d forward matches the naive loop reference") {
  Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng.below(2));
    const std::int64_t h = 3 + static_cast<std::int64_t>(rng.below(7));
    const std::int64_t w = 3 + static_cast<std::int64_t>(rng.below(7));
    const std::int64_t cin = 1 + static_cast<std::int64_t>(rng.below(4));
    const std::int64_t cout = 1 + static_cast<std::int64_t>(rng.below(5));
    const std::int64_t k = 1 + static_cast<std::int64_t>(rng.below(3));
    const std::int64_t stride = 1 + static_cast<std::int64_t>(rng.below(2));
    const bool same = rng.bernoulli(0.5);
    const TensorD x = random_tensor({n, h, w, cin}, rng);
    const auto p = random_conv(k, k, cin, cout, rng, stride,
                               same ? Padding::kSame : Padding::kValid);
    std::int64_t oh = 0, ow = 0;
    const auto ref = naive_conv2d({x.data().begin(), x.data().end()}, n, h, w, cin,
                                  {p.weights->data().begin(), p.weights->data().end()}, k, k,
                                  cout, {p.bias->data().begin(), p.bias->data().end()},
                                  stride, same, oh, ow);
    const TensorD out = conv2d_forward(x, p).output;
    REQUIRE(out.shape() == Shape{n, oh, ow, cout});
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(std::abs(out[i] - ref[i]) <= 1e-5);
  }
}

TEST_CASE("maxpool forward") {
  SUBCASE("constant input") {
    const auto out = maxpool_forward(constant<float>({1, 4, 6, 2}, 5.0f)).output;
    CHECK(out == constant<float>({1, 2, 3, 2}, 5.0f));
  }
  SUBCASE("single window") {
    CHECK(maxpool_forward(Tensor({1, 2, 2, 1}, {1, 2, 3, 4})).output[0] == 4.0f);
  }
  SUBCASE("odd spatial dims") {
    CHECK_THROWS_AS(maxpool_forward(zeros<float>({1, 3, 4, 1})), InvalidShapeError);
  }
  SUBCASE("ties route to the first position in row-major order") {
    auto r = maxpool_forward(Tensor({1, 2, 2, 1}, {7, 7, 7, 7}));
    const auto g = layer_backward(LayerParams<float>::maxpool(), std::move(r.cache),
                                  Tensor({1, 1, 1, 1}, {1.0f}));
    CHECK(g.input_grad == Tensor({1, 2, 2, 1}, {1, 0, 0, 0}));
  }
  SUBCASE("random 8x8 against a per-window double loop") {
    Rng rng(8);
    const Tensor x = uniform<float>({2, 8, 8, 3}, -1.0f, 1.0f, rng);
    const Tensor out = maxpool_forward(x).output;
    for (std::int64_t b = 0; b < 2; ++b) {
      for (std::int64_t oy = 0; oy < 4; ++oy) {
        for (std::int64_t ox = 0; ox < 4; ++ox) {
          for (std::int64_t c = 0; c < 3; ++c) {
            float best = -INFINITY;
            for (std::int64_t dy = 0; dy < 2; ++dy) {
              for (std::int64_t dx = 0; dx < 2; ++dx) {
                best = std::max(best, x[static_cast<std::size_t>(
                                          ((b * 8 + 2 * oy + dy) * 8 + 2 * ox + dx) * 3 + c)]);
              }
            }
            CHECK(out[static_cast<std::size_t>(((b * 4 + oy) * 4 + ox) * 3 + c)] == best);
          }
        }
      }
    }
  }
}

TEST_CASE("maxpool backward conserves gradient mass") {
  Rng rng(77);
  const TensorD x = random_tensor({2, 6, 4, 3}, rng);
  auto r = maxpool_forward(x);
  const TensorD up = random_tensor(r.output.shape(), rng);
  const auto g = layer_backward(LayerParams<double>::maxpool(), std::move(r.cache), up);
  double in_sum = 0.0, up_sum = 0.0;
  for (double v : g.input_grad.data()) in_sum += v;
  for (double v : up.data()) up_sum += v;
  CHECK(in_sum == doctest::Approx(up_sum).epsilon(1e-12));
}

TEST_CASE("dropout") {
  Rng rng(4);
  const Tensor x = uniform<float>({4, 16}, -1.0f, 1.0f, rng);
  SUBCASE("eval mode is the identity") {
    CHECK(dropout_forward(x, 0.5, Mode::kEval, rng).output == x);
    CHECK(dropout_forward(x, 0.9, Mode::kEval, rng).output == x);
  }
  SUBCASE("rate zero is the identity in training") {
    CHECK(dropout_forward(x, 0.0, Mode::kTrain, rng).output == x);
  }
  SUBCASE("rate must be below one") {
    CHECK_THROWS_AS(dropout_forward(x, 1.0, Mode::kTrain, rng), InvalidParameterError);
    CHECK_THROWS_AS(LayerParams<float>::dropout(-0.1), InvalidParameterError);
  }
  SUBCASE("inverted scaling keeps the expectation") {
    const Tensor ones = constant<float>({10}, 1.0f);
    std::vector<double> sum(10, 0.0);
    Rng drng(10);
    for (int pass = 0; pass < 10000; ++pass) {
      const auto out = dropout_forward(ones, 0.5, Mode::kTrain, drng).output;
      for (std::size_t i = 0; i < 10; ++i) {
        CHECK((out[i] == 0.0f || out[i] == 2.0f));
        sum[i] += out[i];
      }
    }
    for (double s : sum) CHECK(std::abs(s / 10000.0 - 1.0) <= 0.05);
  }
}

TEST_CASE("dense forward fixtures") {
  SUBCASE("identity weights") {
    Rng rng(6);
    const Tensor x = uniform<float>({3, 2}, -1.0f, 1.0f, rng);
    const auto p = LayerParams<float>::dense(Tensor({2, 2}, {1, 0, 0, 1}), zeros<float>({2}));
    CHECK(dense_forward(x, p).output == x);
  }
  SUBCASE("hand-computed product") {
    const auto p = LayerParams<float>::dense(Tensor({2, 2}, {5, 6, 7, 8}), zeros<float>({2}));
    CHECK(dense_forward(Tensor({2, 2}, {1, 2, 3, 4}), p).output ==
          Tensor({2, 2}, {19, 22, 43, 50}));
  }
  SUBCASE("zero input gives the bias") {
    const auto p = LayerParams<float>::dense(constant<float>({3, 2}, 0.3f), Tensor({2}, {1, -1}));
    CHECK(dense_forward(zeros<float>({2, 3}), p).output == Tensor({2, 2}, {1, -1, 1, -1}));
  }
  SUBCASE("shape mismatch") {
    const auto p = LayerParams<float>::dense(zeros<float>({3, 2}), zeros<float>({2}));
    CHECK_THROWS_AS(dense_forward(zeros<float>({2, 4}), p), InvalidShapeError);
  }
}

TEST_CASE("softmax") {
  SUBCASE("uniform logits") {
    const Tensor p = softmax(constant<float>({2, 10}, 3.0f));
    for (float v : p.data()) CHECK(v == doctest::Approx(0.1f).epsilon(1e-6));
  }
  SUBCASE("closed form") {
    const TensorD p = softmax(TensorD({1, 2}, {0.0, std::log(3.0)}));
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-12));
  }
  SUBCASE("shift invariance, row sums and positivity") {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
      const Tensor x = uniform<float>({4, 10}, -20.0f, 20.0f, rng);
      Tensor shifted = x;
      const float c = static_cast<float>(rng.uniform(-50.0, 50.0));
      for (float& v : shifted.data()) v += c;
      const Tensor a = softmax(x), b = softmax(shifted);
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::abs(a[i] - b[i]) <= 1e-6f);
        CHECK(a[i] > 0.0f);
      }
      for (std::int64_t r = 0; r < 4; ++r) {
        double s = 0.0;
        for (std::int64_t j = 0; j < 10; ++j) s += a.at(r, j);
        CHECK(std::abs(s - 1.0) <= 1e-6);
      }
    }
  }
  SUBCASE("extreme logits stay finite") {
    const Tensor p = softmax(Tensor({1, 3}, {1000.0f, -1000.0f, 0.0f}));
    CHECK(all_finite(p));
    CHECK(p[0] == 1.0f);
  }
}

TEST_CASE("relu backward zeroes the gradient at and below zero") {
  auto r = relu_forward(Tensor({3}, {-1, 0, 2}));
  const auto g = layer_backward(LayerParams<float>::relu(), std::move(r.cache),
                                constant<float>({3}, 1.0f));
  CHECK(g.input_grad == Tensor({3}, {0, 0, 1}));
}

TEST_CASE("backward rejects mismatched caches and upstream shapes") {
  auto r = relu_forward(Tensor({3}, {-1, 0, 2}));
  CHECK_THROWS_AS(layer_backward(LayerParams<float>::relu(), ForwardCache<float>(r.cache),
                                 zeros<float>({4})),
                  InvalidShapeError);
  CHECK_THROWS(layer_backward(LayerParams<float>::flatten(), std::move(r.cache),
                              zeros<float>({3})));
}

TEST_CASE("gradients match central finite differences in double precision") {
  Rng rng(31337);
  SUBCASE("conv2d, 1x6x6x2 input, 3x3 kernel") {
    const auto p = random_conv(3, 3, 2, 3, rng);
    CHECK(check_layer(p, random_tensor({1, 6, 6, 2}, rng), Mode::kTrain, 1).worst() < 1e-5);
  }
  SUBCASE("conv2d, strided valid") {
    const auto p = random_conv(3, 2, 2, 2, rng, 2, Padding::kValid);
    CHECK(check_layer(p, random_tensor({2, 7, 6, 2}, rng), Mode::kTrain, 1).worst() < 1e-5);
  }
  SUBCASE("dense") {
    const auto p = LayerParams<double>::dense(random_tensor({5, 4}, rng), random_tensor({4}, rng));
    CHECK(check_layer(p, random_tensor({3, 5}, rng), Mode::kTrain, 1).worst() < 1e-5);
  }
  SUBCASE("relu") {
    CHECK(check_layer(LayerParams<double>::relu(), random_signed_away_from_zero({3, 7}, rng),
                      Mode::kTrain, 1)
              .worst() < 1e-5);
  }
  SUBCASE("maxpool") {
    CHECK(check_layer(LayerParams<double>::maxpool(), spaced_values({2, 4, 6, 2}, rng),
                      Mode::kTrain, 1)
              .worst() < 1e-5);
  }
  SUBCASE("dropout with a fixed mask") {
    CHECK(check_layer(LayerParams<double>::dropout(0.5), random_tensor({4, 9}, rng),
                      Mode::kTrain, 99)
              .worst() < 1e-5);
  }
  SUBCASE("flatten") {
    CHECK(check_layer(LayerParams<double>::flatten(), random_tensor({2, 3, 2, 2}, rng),
                      Mode::kTrain, 1)
              .worst() < 1e-5);
  }
  SUBCASE("softmax") {
    CHECK(check_layer(LayerParams<double>::softmax(), random_tensor({3, 6}, rng), Mode::kTrain, 1)
              .worst() < 1e-5);
  }
}

TEST_CASE("layer names round trip") {
  for (auto kind : {LayerKind::kConv2d, LayerKind::kMaxPool, LayerKind::kDropout,
                    LayerKind::kDense, LayerKind::kRelu, LayerKind::kFlatten,
                    LayerKind::kSoftmax}) {
    CHECK(layer_kind_from_name(layer_kind_name(kind)) == kind);
  }
  CHECK_THROWS_AS(layer_kind_from_name("lstm"), FormatError);
  CHECK(padding_from_name("valid") == Padding::kValid);
}
