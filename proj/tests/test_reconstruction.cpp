// Copyright 2026 The attnscene Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "attnscene.hpp"

using namespace attnscene;

namespace {

NeuralRecording random_recording(int c, int t, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  NeuralRecording z;
  z.data.resize(c, t);
  for (Eigen::Index i = 0; i < z.data.size(); ++i) z.data.data()[i] = normal(rng);
  return z;
}

double ridge_objective(const std::vector<ReconstructionExample>& data, const std::vector<int>& lags,
                       const Mat& w, double lambda) {
  double obj = lambda * w.squaredNorm();
  for (const auto& ex : data) obj += (lagged_design(ex.z, lags) * w - ex.features).squaredNorm();
  return obj;
}

}  // namespace

TEST(LaggedDesign, ColumnLayout) {
  NeuralRecording z;
  z.data.resize(2, 4);
  z.data << 1, 2, 3, 4, 5, 6, 7, 8;
  const std::vector<int> lags = {0, 2};
  const Mat x = lagged_design(z, lags);
  Mat expect(4, 4);
  expect << 1, 5, 3, 7,  //
      2, 6, 4, 8,        //
      3, 7, 0, 0,        //
      4, 8, 0, 0;
  EXPECT_TRUE(x == expect);
}

TEST(Ridge, RecoversPlantedSolution) {
  const std::vector<int> lags = {0, 1, 3};
  Rng rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat w0(4 * 3, 2);
  for (Eigen::Index i = 0; i < w0.size(); ++i) w0.data()[i] = normal(rng);
  std::vector<ReconstructionExample> data;
  for (int i = 0; i < 3; ++i) {
    const auto z = random_recording(4, 60, static_cast<std::uint64_t>(i));
    data.push_back({z, lagged_design(z, lags) * w0});
  }
  const auto dec = fit_reconstruction(data, lags, 1e-8);
  EXPECT_LT((dec.weights - w0).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Ridge, ObjectiveNoWorseThanPlanted) {
  const std::vector<int> lags = {0, 2};
  Mat w0 = Mat::Random(3 * 2, 1);
  std::vector<ReconstructionExample> data;
  Rng rng(8);
  std::normal_distribution<double> normal(0.0, 0.3);
  for (int i = 0; i < 4; ++i) {
    const auto z = random_recording(3, 50, 10 + static_cast<std::uint64_t>(i));
    Mat y = lagged_design(z, lags) * w0;
    for (Eigen::Index k = 0; k < y.size(); ++k) y.data()[k] += normal(rng);
    data.push_back({z, y});
  }
  for (double lambda : {0.1, 10.0, 1e3}) {
    const auto dec = fit_reconstruction(data, lags, lambda);
    EXPECT_LE(ridge_objective(data, lags, dec.weights, lambda),
              ridge_objective(data, lags, w0, lambda) + 1e-9);
  }
  const auto huge = fit_reconstruction(data, lags, 1e14);
  EXPECT_LT(huge.weights.cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_THROW(fit_reconstruction(data, lags, 0.0), InvalidArgument);
}

TEST(LagRange, Default) {
  const auto l = lag_range(250.0, 100.0);
  ASSERT_EQ(l.size(), 26u);
  EXPECT_EQ(l.front(), 0);
  EXPECT_EQ(l.back(), 25);
}

namespace {

struct Candidates {
  NeuralRecording z;
  Mat a, b;
};

/// Noiseless encoding of candidate A only: z(c, t) = w_c * a(t - lag_c).
Candidates noiseless_scene(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int t = 300, c = 6;
  Candidates out;
  out.a.resize(t, 1);
  out.b.resize(t, 1);
  for (int i = 0; i < t; ++i) {
    out.a(i, 0) = u(rng);
    out.b(i, 0) = u(rng);
  }
  out.z.data = Mat::Zero(c, t);
  for (int ch = 0; ch < c; ++ch) {
    const int lag = ch % 3;
    for (int i = lag; i < t; ++i) out.z.data(ch, i) = (ch + 1) * out.a(i - lag, 0);
  }
  return out;
}

}  // namespace

TEST(SelectByReconstruction, NoiselessPicksEncodedCandidate) {
  std::vector<ReconstructionExample> train;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto c = noiseless_scene(s);
    train.push_back({c.z, c.a});
  }
  const auto dec = fit_reconstruction(train, lag_range(50.0, 100.0), 1e-3);
  const auto test = noiseless_scene(99);
  const auto sel = select_by_reconstruction(dec, test.z, test.a, test.b);
  EXPECT_EQ(sel.choice, 0);
  EXPECT_GT(sel.corr_a, 0.99);
  const auto swapped = select_by_reconstruction(dec, test.z, test.b, test.a);
  EXPECT_EQ(swapped.choice, 1);
  EXPECT_DOUBLE_EQ(swapped.corr_a, sel.corr_b);

  // Correlations equal an independent Pearson computation.
  const Mat rec = dec.reconstruct(test.z);
  const Eigen::ArrayXd r = rec.col(0).array() - rec.col(0).mean();
  const Eigen::ArrayXd a = test.a.col(0).array() - test.a.col(0).mean();
  const double expect = (r * a).sum() / std::sqrt((r * r).sum() * (a * a).sum());
  EXPECT_NEAR(sel.corr_a, expect, 1e-12);
}

TEST(SelectByReconstruction, ConstantCandidateCorrelatesZero) {
  const auto c = noiseless_scene(1);
  std::vector<ReconstructionExample> train = {{c.z, c.a}};
  const auto dec = fit_reconstruction(train, {0}, 1.0);
  const Mat flat = Mat::Constant(c.a.rows(), 1, 0.5);
  const auto sel = select_by_reconstruction(dec, c.z, flat, flat);
  EXPECT_EQ(sel.corr_a, 0.0);
  EXPECT_EQ(sel.choice, 0);
}

TEST(SelectByReconstruction, MelMeanOverBands) {
  Mat x(5, 2), y(5, 2);
  x << 1, 5, 2, 4, 3, 3, 4, 2, 5, 1;
  y << 1, 1, 2, 2, 3, 3, 4, 4, 5, 5;
  EXPECT_NEAR(mean_column_correlation(x, y), 0.0, 1e-12);
}
