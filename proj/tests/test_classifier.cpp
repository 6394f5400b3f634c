/*
 * Copyright 2026 The PPOD Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "ppod/classifier.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles/iris_reference.hpp"
#include "test_support.hpp"

namespace ppod {
namespace {

GaussianNBModel HandModel() {
  // class A = {-1, +1}, class B = {3, 5}
  return FitGaussianNB(Matrix(4, 1, std::vector<double>{-1, 1, 3, 5}),
                       std::vector<std::string>{"A", "A", "B", "B"});
}

TEST(FitTest, HandComputedStatistics) {
  const auto model = HandModel();
  ASSERT_EQ(model.classes.size(), 2u);
  const auto& a = model.classes.at("A");
  const auto& b = model.classes.at("B");
  EXPECT_EQ(a.prior, 0.5);
  EXPECT_EQ(b.prior, 0.5);
  EXPECT_EQ(a.mean[0], 0.0);
  EXPECT_EQ(b.mean[0], 4.0);
  // Population variance 1 plus smoothing 1e-9 * var(all) = 1e-9 * 5.
  EXPECT_NEAR(a.variance[0], 1.0, 1e-8);
  EXPECT_NEAR(b.variance[0], 1.0, 1e-8);
  EXPECT_DOUBLE_EQ(model.variance_smoothing, 5e-9);
}

TEST(FitTest, SingleClass) {
  const auto model = FitGaussianNB(Matrix(3, 2, std::vector<double>{1, 2, 3, 4, 5, 7}),
                                   std::vector<std::string>{"only", "only", "only"});
  EXPECT_EQ(model.classes.at("only").prior, 1.0);
  EXPECT_EQ(PredictGaussianNB(model, std::vector<double>{100, -100}).predicted_label, "only");
}

TEST(FitTest, ConstantColumnFallsBackToSmoothing) {
  const auto model = FitGaussianNB(Matrix(4, 2, std::vector<double>{2, 0, 2, 1, 2, 5, 2, 6}),
                                   std::vector<std::string>{"x", "x", "y", "y"});
  for (const auto& [label, stats] : model.classes) {
    EXPECT_EQ(stats.variance[0], model.variance_smoothing) << label;
    EXPECT_GT(stats.variance[0], 0.0);
  }
  const auto r = PredictGaussianNB(model, std::vector<double>{2, 5.5});
  EXPECT_EQ(r.predicted_label, "y");
  for (const auto& [label, score] : r.class_log_scores) EXPECT_TRUE(std::isfinite(score));
}

TEST(FitTest, AllConstantDataStillHasPositiveVariance) {
  const auto model = FitGaussianNB(Matrix(2, 1, std::vector<double>{3, 3}),
                                   std::vector<std::string>{"a", "b"});
  EXPECT_EQ(model.variance_smoothing, 1e-18);
  EXPECT_GT(model.classes.at("a").variance[0], 0.0);
}

TEST(FitTest, RejectsBadInput) {
  EXPECT_THROW(FitGaussianNB(Matrix(0, 2), std::vector<std::string>{}), InvalidArgument);
  EXPECT_THROW(FitGaussianNB(Matrix(2, 1, 1.0), std::vector<std::string>{"a"}), InvalidArgument);
  EXPECT_THROW(FitGaussianNB(Matrix(2, 1, std::vector<double>{1, 2}),
                             std::vector<std::string>{"a", "b"}, -1.0),
               InvalidArgument);
}

TEST(FitTest, PriorsSumToOne) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> label(0, 4);
  std::normal_distribution<double> v;
  Matrix x(97, 3);
  std::vector<std::string> y;
  for (std::size_t i = 0; i < 97; ++i) {
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = v(gen);
    y.push_back("k" + std::to_string(label(gen)));
  }
  const auto model = FitGaussianNB(x, y);
  double sum = 0;
  for (const auto& [l, s] : model.classes) sum += s.prior;
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(FitTest, PermutationInvariant) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> v(3.0, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t r = 40, m = 5;
    Matrix x(r, m);
    std::vector<std::string> y(r);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < m; ++j) x(i, j) = v(gen);
      y[i] = "c" + std::to_string(i % 3);
    }
    std::vector<std::size_t> perm(r);
    for (std::size_t i = 0; i < r; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), gen);
    Matrix px(r, m);
    std::vector<std::string> py(r);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < m; ++j) px(i, j) = x(perm[i], j);
      py[i] = y[perm[i]];
    }
    // Sorted accumulation makes this exact, which is stronger than 1e-12.
    EXPECT_EQ(FitGaussianNB(x, y), FitGaussianNB(px, py));
  }
}

TEST(PredictTest, HandExample) {
  const auto model = HandModel();
  // log N(1; 0, 1) = -0.5 log(2 pi) - 0.5 ; log N(1; 4, 1) = -0.5 log(2 pi) - 4.5
  const auto at1 = PredictGaussianNB(model, std::vector<double>{1.0}, 7);
  EXPECT_EQ(at1.predicted_label, "A");
  EXPECT_EQ(at1.request_id, 7u);
  const double base = std::log(0.5) - 0.5 * std::log(2 * std::numbers::pi);
  EXPECT_NEAR(at1.class_log_scores.at("A"), base - 0.5, 1e-7);
  EXPECT_NEAR(at1.class_log_scores.at("B"), base - 4.5, 1e-7);

  const auto at35 = PredictGaussianNB(model, std::vector<double>{3.5});
  EXPECT_EQ(at35.predicted_label, "B");
  EXPECT_NEAR(at35.class_log_scores.at("A"), base - 6.125, 1e-7);
  EXPECT_NEAR(at35.class_log_scores.at("B"), base - 0.125, 1e-7);
}

TEST(PredictTest, TieGoesToSmallerLabel) {
  const auto model = HandModel();
  const auto mid = PredictGaussianNB(model, std::vector<double>{2.0});
  EXPECT_EQ(mid.class_log_scores.at("A"), mid.class_log_scores.at("B"));
  EXPECT_EQ(mid.predicted_label, "A");

  const auto reversed = FitGaussianNB(Matrix(4, 1, std::vector<double>{-1, 1, 3, 5}),
                                      std::vector<std::string>{"zeta", "zeta", "alpha", "alpha"});
  EXPECT_EQ(PredictGaussianNB(reversed, std::vector<double>{2.0}).predicted_label, "alpha");
}

TEST(PredictTest, DimensionMismatch) {
  EXPECT_THROW(PredictGaussianNB(HandModel(), std::vector<double>{1, 2}), InvalidArgument);
}

// Predicted label is the argmax of the scores, and stays so if every score
// moves by the same constant.
TEST(PredictTest, ArgmaxInvariantUnderCommonShift) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> v;
  Matrix x(60, 4);
  std::vector<std::string> y;
  for (std::size_t i = 0; i < 60; ++i) {
    for (std::size_t j = 0; j < 4; ++j) x(i, j) = v(gen) + static_cast<double>(i % 3);
    y.push_back("c" + std::to_string(i % 3));
  }
  const auto model = FitGaussianNB(x, y);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> q = {v(gen), v(gen), v(gen), v(gen)};
    const auto r = PredictGaussianNB(model, q);
    for (double shift : {-1e3, 0.0, 17.5}) {
      std::string best;
      double best_score = -INFINITY;
      for (const auto& [label, score] : r.class_log_scores) {
        if (best.empty() || score + shift > best_score) {
          best = label;
          best_score = score + shift;
        }
      }
      EXPECT_EQ(best, r.predicted_label);
    }
    EXPECT_EQ(PredictGaussianNB(model, q), r);
  }
}

TEST(AccuracyTest, Examples) {
  using V = std::vector<std::string>;
  EXPECT_EQ(Accuracy(V{"a", "b"}, V{"a", "b"}), 1.0);
  EXPECT_EQ(Accuracy(V{"a", "b"}, V{"b", "a"}), 0.0);
  EXPECT_EQ(Accuracy(V{"a", "b", "c", "d"}, V{"a", "b", "c", "x"}), 0.75);
  EXPECT_THROW(Accuracy(V{"a"}, V{"a", "b"}), InvalidArgument);
  EXPECT_THROW(Accuracy(V{}, V{}), InvalidArgument);
}


TEST(IrisBaselineTest, MatchesReferenceImplementation) {
  const auto iris = testing::LoadIris();
  const auto scenario = PrepareScenario(iris, 3, 2, kInfiniteEpsilon, 0.7, 42);
  const auto results = testing::DirectPipeline(scenario.config, scenario.queries);

  std::vector<std::string> predicted;
  for (const auto& r : results) predicted.push_back(r.predicted_label);
  const auto reference = testing::SklearnIrisPredictions();

  EXPECT_EQ(predicted, reference);
  const double acc = Accuracy(predicted, scenario.truth);
  EXPECT_DOUBLE_EQ(acc, testing::kSklearnIrisAccuracy);
  EXPECT_GE(acc, 0.90);
}

}  // namespace
}  // namespace ppod
