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

#include <filesystem>

#include "attnscene.hpp"
#include "oracles.hpp"

using namespace attnscene;

namespace {

Mat random_input(int c, int t, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat z(c, t);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
  return z;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST(BiLstm, ProbabilitiesSumToOne) {
  const DecoderShape shape{32, 64, 128, 8};
  const auto m = AttentionDecoderModel::init(shape, 3);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Vec p = bilstm_forward(m, random_input(32, 50, s));
    EXPECT_NEAR(p.sum(), 1.0, 1e-9);
    EXPECT_GT(p.minCoeff(), 0.0);
    EXPECT_LT(p.maxCoeff(), 1.0);
  }
}

TEST(BiLstm, ChannelMismatch) {
  const auto m = AttentionDecoderModel::init({4, 3, 5, 2}, 1);
  EXPECT_THROW(bilstm_forward(m, random_input(5, 10, 1)), InvalidArgument);
}

TEST(BiLstm, ParameterCount) {
  const DecoderShape s{32, 64, 128, 8};
  const auto m = AttentionDecoderModel::init(s, 1);
  const std::size_t lstm = 4 * 64 * 32 + 4 * 64 * 64 + 4 * 64;
  EXPECT_EQ(m.parameter_count(), 2u * 32 + 2 * lstm + 128 * 128 + 128 + 8 * 128 + 8);
}

TEST(BiLstm, TimeReversalSymmetryWithTiedDirections) {
  const DecoderShape shape{3, 4, 5, 3};
  auto m = AttentionDecoderModel::init(shape, 5);
  // Reversal swaps the two pooled halves, so tie the FC columns too.
  m.bwd = m.fwd;
  m.fc1_w.rightCols(shape.hidden) = m.fc1_w.leftCols(shape.hidden);
  const Mat z = random_input(3, 9, 2);
  const Mat zr = z.rowwise().reverse();
  const Vec p = bilstm_forward(m, z), q = bilstm_forward(m, zr);
  EXPECT_LT((p - q).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LstmCell, AnalyticSingleStep) {
  const int s = 3;
  LstmWeights lw{Mat::Zero(4 * s, 2), Mat::Zero(4 * s, s), Vec::Zero(4 * s)};
  const double b = 0.7;
  lw.b.segment(2 * s, s).setConstant(b);
  const auto [h, c] = lstm_cell_step(lw, Vec::Ones(2), Vec::Zero(s), Vec::Zero(s));
  const double expect_c = sigmoid(0.0) * std::tanh(b);
  const double expect_h = sigmoid(0.0) * std::tanh(expect_c);
  for (int j = 0; j < s; ++j) {
    EXPECT_NEAR(c(j), expect_c, 1e-15);
    EXPECT_NEAR(h(j), expect_h, 1e-15);
  }
}

TEST(BiLstm, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto g = oracle::bilstm_gradient_check(seed);
    EXPECT_LT(g.max_rel_error, 1e-4) << "seed " << seed;
    // LayerNorm 6, two LSTMs 2 * 128, FC 45 + 18.
    EXPECT_EQ(g.n_params, 325u);
  }
}

TEST(Train, LossDecreasesAndIsDeterministic) {
  std::vector<LabeledRecording> data;
  for (int i = 0; i < 12; ++i) {
    NeuralRecording z;
    z.data = random_input(4, 20, static_cast<std::uint64_t>(i));
    const int label = i % 3;
    z.data.row(label).array() += 1.5;
    data.push_back({z, label});
  }
  TrainOptions opt;
  opt.epochs = 15;
  opt.lr = 1e-2;
  opt.seed = 7;
  opt.hidden = 6;
  opt.fc_hidden = 8;
  const auto a = train_predictor(data, 3, 4, opt);
  const auto b = train_predictor(data, 3, 4, opt);
  EXPECT_LT(a.report.final_loss, a.report.initial_loss);
  EXPECT_EQ(a.report.epoch_loss.size(), 15u);
  EXPECT_EQ(a.report.epoch_loss, b.report.epoch_loss);
  EXPECT_TRUE(a.model.fc2_w == b.model.fc2_w);
  EXPECT_TRUE(a.model.all_finite());
}

TEST(Train, MemorizesSingleExample) {
  NeuralRecording z;
  z.data = random_input(32, 40, 11);
  const std::vector<LabeledRecording> data = {{z, 5}};
  TrainOptions opt;
  opt.seed = 3;
  const auto tp = train_predictor(data, 8, 32, opt);  // 30 epochs, lr 1e-4
  const Vec p = bilstm_forward(tp.model, z.data);
  EXPECT_EQ(argmax(p), 5u);
}

TEST(Train, Errors) {
  TrainOptions opt;
  EXPECT_THROW(train_predictor({}, 3, 4, opt), InvalidArgument);
  NeuralRecording z;
  z.data = random_input(4, 5, 1);
  const std::vector<LabeledRecording> bad = {{z, 3}};
  EXPECT_THROW(train_predictor(bad, 3, 4, opt), InvalidArgument);
}

TEST(Checkpoint, RoundTripBitExact) {
  const auto m = AttentionDecoderModel::init({6, 5, 7, 4}, 21);
  const auto path = std::filesystem::temp_directory_path() / "attnscene_test.ckpt";
  save_checkpoint(path, m);
  const auto back = load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.shape, m.shape);
  EXPECT_EQ(back.seed, 21u);
  std::vector<double> x, y;
  m.visit([&](const char*, const double* p, Eigen::Index n) { x.insert(x.end(), p, p + n); });
  back.visit([&](const char*, const double* p, Eigen::Index n) { y.insert(y.end(), p, p + n); });
  EXPECT_EQ(x, y);
}

TEST(PredictIntention, ArgmaxAndCentroid) {
  const auto m = AttentionDecoderModel::init({4, 3, 5, 3}, 2);
  Mat c(3, 8);
  c.setRandom();
  const ClusterModel clusters(c, 0, "t");
  NeuralRecording z;
  z.data = random_input(4, 12, 3);
  const auto a = predict_intention(m, clusters, z);
  const auto b = predict_intention(m, clusters, z);
  EXPECT_EQ(a.label, b.label);
  EXPECT_EQ(static_cast<std::size_t>(a.label), argmax(a.probabilities));
  EXPECT_TRUE(a.centroid.values == c.row(a.label).transpose());
  const ClusterModel wrong_k(Mat::Random(4, 8), 0, "t");
  EXPECT_THROW(predict_intention(m, wrong_k, z), InvalidArgument);
}

TEST(WindowAt, OffsetPolicies) {
  NeuralRecording z;
  z.data = Mat::Random(2, 800);
  EXPECT_TRUE(window_at(z, 1.0, WindowOffset::Start).data == z.data.leftCols(100));
  EXPECT_TRUE(window_at(z, 1.0, WindowOffset::Center).data == z.data.middleCols(350, 100));
  EXPECT_TRUE(window_at(z, 1.0, WindowOffset::End).data == z.data.rightCols(100));
  EXPECT_TRUE(centered_window(z, 8.0).data == z.data);
  EXPECT_THROW(window_at(z, 9.0, WindowOffset::Center), InvalidArgument);
}

TEST(WindowSweep, FullWindowMatchesDirectSelection) {
  const auto m = AttentionDecoderModel::init({4, 3, 5, 3}, 2);
  const ClusterModel clusters(Mat::Random(3, 8), 0, "t");
  std::vector<SelectionTrial> trials;
  std::size_t direct = 0;
  for (int i = 0; i < 10; ++i) {
    SelectionTrial t;
    t.z.data = random_input(4, 200, static_cast<std::uint64_t>(i));
    t.stream_embeddings = {SpeakerEmbedding{Vec::Random(8)}, SpeakerEmbedding{Vec::Random(8)}};
    t.attended_stream = i % 2;
    t.true_label = i % 3;
    direct += evaluate_selection(m, clusters, t, t.z).selection_correct;
    trials.push_back(t);
  }
  const std::vector<AttentionDecoderModel> models = {m};
  const std::vector<double> w = {2.0};
  const auto rows = window_sweep(models, clusters, trials, w);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].n_trials, 10u);
  EXPECT_DOUBLE_EQ(rows[0].accuracy_pct, 10.0 * static_cast<double>(direct));
  std::ostringstream os;
  write_sweep_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, 29), "window_s,accuracy_pct,n_trial");
}
