/*
 * Copyright 2026 The robust-ce Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "rce/model.hpp"

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "gtest/gtest.h"

namespace rce {
namespace {

using testing::toy_binary_net;
using testing::toy_logistic;
using testing::toy_three_class_net;

constexpr double kInfNorm = std::numeric_limits<double>::infinity();

TEST(ForwardTest, LogisticLogit) {
  const FeatureVector x{0.7, 0.5};
  EXPECT_NEAR(toy_logistic().forward(x)[0], -0.2, 1e-15);
}

TEST(ForwardTest, ReluNetworkLogits) {
  EXPECT_DOUBLE_EQ(toy_binary_net().forward(FeatureVector{1, 2})[0], -1.0);
  EXPECT_NEAR(toy_binary_net().forward(FeatureVector{2.1, 2})[0], 0.1, 1e-15);
}

TEST(ForwardTest, DimensionMismatchRejected) {
  EXPECT_THROW(toy_logistic().forward(FeatureVector{1.0}), std::invalid_argument);
}

TEST(ClassifyTest, BinaryBoundaryIsInclusive) {
  const Model m = toy_logistic();
  EXPECT_EQ(classify_binary(m, FeatureVector{0.7, 0.5}), 0);
  EXPECT_EQ(classify_binary(m, FeatureVector{0.7, 0.7}), 1);
  EXPECT_EQ(classify_binary(m, FeatureVector{0.1, 0.9}), 1);
  EXPECT_THROW(classify_binary(toy_three_class_net(), FeatureVector{0, 0}), std::invalid_argument);
}

TEST(ClassifyTest, MultiClassArgmax) {
  const Model m = toy_three_class_net();
  const auto l1 = m.forward(FeatureVector{2, 2});
  EXPECT_EQ(l1, (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(classify_multi(m, FeatureVector{2, 2}), 1);
  const auto l2 = m.forward(FeatureVector{3, 1});
  EXPECT_EQ(l2, (std::vector<double>{2, 0.5, -2}));
  EXPECT_EQ(classify_multi(m, FeatureVector{3, 1}), 0);
}

TEST(ClassifyTest, TiesGoToLowestIndex) {
  EXPECT_EQ(argmax_logit(std::vector<double>{3, 3, 3}), 0);
  EXPECT_EQ(argmax_logit(std::vector<double>{1, 3, 3}), 1);
  // All-zero hidden output makes every logit equal.
  EXPECT_EQ(classify_multi(toy_three_class_net(), FeatureVector{0, 0}), 0);
}

TEST(ClassifyTest, AgreesWithBruteForce) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Model bin = testing::random_network(rng, 3, {4}, 1);
    const Model multi = testing::random_network(rng, 3, {4}, 4);
    const FeatureVector x = testing::random_point(rng, 3);
    EXPECT_EQ(classify_binary(bin, x) == 1, bin.forward(x)[0] >= 0.0);
    const auto z = multi.forward(x);
    std::size_t best = 0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      bool wins = true;
      for (std::size_t o = 0; o < z.size(); ++o) wins = wins && z[c] >= z[o];
      if (wins) {
        best = c;
        break;
      }
    }
    EXPECT_EQ(classify_multi(multi, x), static_cast<Label>(best));
  }
}

TEST(PDistanceTest, Examples) {
  EXPECT_EQ(p_distance(std::vector<double>{-1, 1}, std::vector<double>{0.8, 1}, kInfNorm), 1.8);
  EXPECT_EQ(p_distance(std::vector<double>{1, 2}, std::vector<double>{0, 4}, 1), 3.0);
  const std::vector<double> v{0.3, -2.0, 5.0};
  for (double p : {1.0, 2.0, kInfNorm}) EXPECT_EQ(p_distance(v, v, p), 0.0);
  EXPECT_THROW(p_distance(std::vector<double>{1}, std::vector<double>{1, 2}, 2), std::invalid_argument);
}

TEST(PDistanceTest, MetricProperties) {
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> a(6), b(6), c(6);
    for (std::size_t k = 0; k < 6; ++k) {
      a[k] = rng.uniform(-3, 3);
      b[k] = rng.uniform(-3, 3);
      c[k] = rng.uniform(-3, 3);
    }
    for (double p : {1.0, 2.0, kInfNorm}) {
      EXPECT_EQ(p_distance(a, b, p), p_distance(b, a, p));
      EXPECT_LE(p_distance(a, c, p), p_distance(a, b, p) + p_distance(b, c, p) + 1e-12);
    }
  }
}

TEST(FlattenTest, ColumnMajorOrder) {
  EXPECT_EQ(flatten(toy_binary_net(true)), (ParameterVector{1, 0, 0, 1, 0, 0, 1, -1, 0}));
  EXPECT_EQ(flatten(toy_binary_net(false)), (ParameterVector{1, 0, 0, 1, 1, -1}));
  const Model m = Model::network({Layer::from_rows({{1, 2, 3}, {4, 5, 6}}, {7, 8}),
                                  Layer::from_rows({{9, 10}})});
  EXPECT_EQ(flatten(m), (ParameterVector{1, 4, 2, 5, 3, 6, 7, 8, 9, 10}));
}

TEST(FlattenTest, RoundTripIsBitExact) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Model m = testing::random_network(rng, 4, {5, 3}, 2, i % 2 == 0);
    ParameterVector theta = flatten(m);
    for (double& t : theta) t = rng.normal();
    EXPECT_EQ(flatten(unflatten(m, theta)), theta);
  }
}

TEST(FlattenTest, WrongLengthRejected) {
  EXPECT_THROW(unflatten(toy_binary_net(), ParameterVector{1, 2, 3}), std::invalid_argument);
}

TEST(ModelTest, RejectsBrokenArchitectures) {
  EXPECT_THROW(Model::network({Layer::from_rows({{1, 0}}), Layer::from_rows({{1, 1}})}),
               std::invalid_argument);
  EXPECT_THROW(Model::network({}), std::invalid_argument);
  EXPECT_THROW(Model::logistic({1.0, std::nan("")}), std::invalid_argument);
}

TEST(ModelTest, ParameterCount) {
  EXPECT_EQ(Model::logistic({1, 2, 3}).parameter_count(), 4u);
  EXPECT_EQ(Model::logistic({1, 2, 3}, std::nullopt).parameter_count(), 3u);
}

}  // namespace
}  // namespace rce
