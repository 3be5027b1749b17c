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

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "attnscene/bilstm.hpp"
#include "attnscene/neural_sim.hpp"
#include "attnscene/separation.hpp"
#include "attnscene/speaker_space.hpp"

namespace attnscene {

// ---------------------------------------------------------------------------
// Speaker predictor training

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(const DecoderShape& shape, AdamOptions opt)
      : opt_(opt), m_(AttentionDecoderModel::zeros(shape)), v_(AttentionDecoderModel::zeros(shape)) {}

  void step(AttentionDecoderModel& model, const AttentionDecoderModel& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    const auto p = spans(model), g = spans(const_cast<AttentionDecoderModel&>(grad)),
               m = spans(m_), v = spans(v_);
    for (std::size_t k = 0; k < p.size(); ++k) {
      for (std::size_t i = 0; i < p[k].size(); ++i) {
        const double gi = g[k][i];
        m[k][i] = opt_.beta1 * m[k][i] + (1.0 - opt_.beta1) * gi;
        v[k][i] = opt_.beta2 * v[k][i] + (1.0 - opt_.beta2) * gi * gi;
        p[k][i] -= opt_.lr * (m[k][i] / c1) / (std::sqrt(v[k][i] / c2) + opt_.eps);
      }
    }
  }

 private:
  static std::vector<std::span<double>> spans(AttentionDecoderModel& x) {
    std::vector<std::span<double>> out;
    x.visit([&out](const char*, double* p, Eigen::Index n) {
      out.emplace_back(p, static_cast<std::size_t>(n));
    });
    return out;
  }

  AdamOptions opt_;
  AttentionDecoderModel m_, v_;
  long t_ = 0;
};

struct LabeledRecording {
  NeuralRecording z;
  int label = 0;
};

struct TrainOptions {
  int epochs = 30;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  int hidden = 64;
  int fc_hidden = 128;
  bool shuffle = true;
  std::function<void(int epoch, double mean_loss)> on_epoch;
};

struct TrainReport {
  double initial_loss = 0.0;       // mean loss of the freshly initialized model
  std::vector<double> epoch_loss;  // mean per-example loss seen during each epoch
  double final_loss = 0.0;         // mean loss of the trained model
  double train_accuracy = 0.0;
  double val_accuracy = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  int epochs = 0;
};

struct TrainedPredictor {
  AttentionDecoderModel model;
  TrainReport report;
};

namespace decoder_detail {

inline std::pair<double, double> loss_and_accuracy(const AttentionDecoderModel& m,
                                                   std::span<const LabeledRecording> data) {
  if (data.empty()) return {0.0, std::numeric_limits<double>::quiet_NaN()};
  ForwardCache cache;
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data) {
    const Vec p = bilstm_forward(m, ex.z.data, cache);
    loss += cross_entropy(cache, ex.label);
    correct += argmax(p) == static_cast<std::size_t>(ex.label);
  }
  const double n = static_cast<double>(data.size());
  return {loss / n, correct / n};
}

}  // namespace decoder_detail

/// Adam on per-example cross-entropy (batch size 1) for a fixed number of
/// epochs. Fully determined by (seed, dataset order).
inline TrainedPredictor train_predictor(std::span<const LabeledRecording> data, int classes,
                                        int channels, const TrainOptions& opt,
                                        std::span<const LabeledRecording> validation = {}) {
  require(!data.empty(), "train_predictor: empty dataset");
  require(opt.epochs >= 0, "train_predictor: negative epoch count");
  for (const auto& ex : data) {
    require(ex.label >= 0 && ex.label < classes,
            "train_predictor: label " + std::to_string(ex.label) + " outside [0, K)");
    require(ex.z.channels() == channels, "train_predictor: channel count mismatch");
  }
  const DecoderShape shape{channels, opt.hidden, opt.fc_hidden, classes};
  TrainedPredictor out{AttentionDecoderModel::init(shape, opt.seed), {}};
  out.report.seed = opt.seed;
  out.report.epochs = opt.epochs;
  out.report.initial_loss = decoder_detail::loss_and_accuracy(out.model, data).first;

  Adam adam(shape, {opt.lr});
  AttentionDecoderModel grad = AttentionDecoderModel::zeros(shape);
  ForwardCache cache;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(opt.seed, 0x5eed));
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    if (opt.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t idx : order) {
      grad.visit([](const char*, double* p, Eigen::Index n) { std::fill(p, p + n, 0.0); });
      total += bilstm_backward(out.model, data[idx].z.data, data[idx].label, grad, cache);
      adam.step(out.model, grad);
    }
    const double mean = total / static_cast<double>(data.size());
    if (!std::isfinite(mean)) throw DegenerateInput("train_predictor: loss diverged");
    out.report.epoch_loss.push_back(mean);
    if (opt.on_epoch) opt.on_epoch(epoch, mean);
  }
  const auto [final_loss, acc] = decoder_detail::loss_and_accuracy(out.model, data);
  out.report.final_loss = final_loss;
  out.report.train_accuracy = acc;
  if (!validation.empty())
    out.report.val_accuracy = decoder_detail::loss_and_accuracy(out.model, validation).second;
  return out;
}

// Checkpoint: one line of JSON header, '\n', then the parameters as
// little-endian float64 in AttentionDecoderModel's documented order.
inline void save_checkpoint(const std::filesystem::path& path, const AttentionDecoderModel& m) {
  nlohmann::json header = {{"format", "attnscene-bilstm-v1"},
                           {"C", m.shape.channels},
                           {"S", m.shape.hidden},
                           {"H", m.shape.fc_hidden},
                           {"K", m.shape.classes},
                           {"seed", m.seed},
                           {"n_params", m.parameter_count()}};
  nlohmann::json order = nlohmann::json::array();
  m.visit([&order](const char* name, const double*, Eigen::Index n) {
    order.push_back({{"name", name}, {"count", n}});
  });
  header["order"] = order;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << header.dump() << '\n';
  m.visit([&os](const char*, const double* p, Eigen::Index n) {
    os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  });
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline AttentionDecoderModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(is, line);
  const auto header = nlohmann::json::parse(line);
  if (header.value("format", "") != "attnscene-bilstm-v1")
    throw ProtocolError("unknown checkpoint format in " + path.string());
  const DecoderShape shape{header.at("C").get<int>(), header.at("S").get<int>(),
                           header.at("H").get<int>(), header.at("K").get<int>()};
  AttentionDecoderModel m = AttentionDecoderModel::zeros(shape);
  m.seed = header.at("seed").get<std::uint64_t>();
  m.visit([&is](const char*, double* p, Eigen::Index n) {
    is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  });
  if (!is) throw ProtocolError("truncated checkpoint " + path.string());
  return m;
}

// ---------------------------------------------------------------------------
// Intention prediction and the window sweep

struct Intention {
  int label = 0;
  SpeakerEmbedding centroid;
  Vec probabilities;
};

inline Intention predict_intention(const AttentionDecoderModel& model, const ClusterModel& clusters,
                                   const NeuralRecording& z) {
  require(model.shape.classes == clusters.k(), "predict_intention: model K differs from clusters K");
  Intention out;
  out.probabilities = bilstm_forward(model, z.data);
  out.label = static_cast<int>(argmax(out.probabilities));
  out.centroid = centroid_of(clusters, out.label);
  return out;
}

/// Everything the selection step needs for one test trial.
struct SelectionTrial {
  NeuralRecording z;
  std::array<SpeakerEmbedding, 2> stream_embeddings;  // presentation order
  int attended_stream = 0;
  int true_label = 0;
};

struct SelectionOutcome {
  int label = 0;
  int chosen_stream = 0;
  bool label_correct = false;
  bool selection_correct = false;
};

inline SelectionOutcome evaluate_selection(const AttentionDecoderModel& model,
                                           const ClusterModel& clusters, const SelectionTrial& trial,
                                           const NeuralRecording& z) {
  const Intention it = predict_intention(model, clusters, z);
  SelectionOutcome o;
  o.label = it.label;
  o.chosen_stream = nearest_candidate(it.centroid, trial.stream_embeddings);
  o.label_correct = it.label == trial.true_label;
  o.selection_correct = o.chosen_stream == trial.attended_stream;
  return o;
}

/// Where a sweep window sits inside the recording.
enum class WindowOffset { Start, Center, End };

inline const char* to_string(WindowOffset o) {
  return o == WindowOffset::Start ? "start" : o == WindowOffset::Center ? "center" : "end";
}
inline WindowOffset window_offset_from_string(std::string_view s) {
  if (s == "start") return WindowOffset::Start;
  if (s == "center") return WindowOffset::Center;
  if (s == "end") return WindowOffset::End;
  throw InvalidArgument("unknown window offset '" + std::string(s) + "'");
}

/// Window of `window_s` seconds placed by `offset`, clamped to the recording.
inline NeuralRecording window_at(const NeuralRecording& z, double window_s, WindowOffset offset) {
  const long len = std::lround(window_s * z.frame_rate_hz);
  require(len >= 1 && len <= z.frames(), "window of " + std::to_string(window_s) +
                                             " s does not fit a recording of " +
                                             std::to_string(z.duration_s()) + " s");
  long start = 0;
  switch (offset) {
    case WindowOffset::Start: start = 0; break;
    case WindowOffset::Center: start = z.frames() / 2 - len / 2; break;
    case WindowOffset::End: start = z.frames() - len; break;
  }
  start = std::clamp<long>(start, 0, z.frames() - len);
  return slice_window(z, start / z.frame_rate_hz, len / z.frame_rate_hz);
}

inline NeuralRecording centered_window(const NeuralRecording& z, double window_s) {
  return window_at(z, window_s, WindowOffset::Center);
}

struct SweepRow {
  double window_s = 0.0;
  double accuracy_pct = 0.0;        // stream selection accuracy
  double label_accuracy_pct = 0.0;  // exact cluster label accuracy
  std::size_t n_trials = 0;
};

/// Selection accuracy per window length. Every (model, trial) pair is one
/// trial, so several restarts pool into one table.
inline std::vector<SweepRow> window_sweep(std::span<const AttentionDecoderModel> models,
                                          const ClusterModel& clusters,
                                          std::span<const SelectionTrial> trials,
                                          std::span<const double> windows_s,
                                          WindowOffset offset = WindowOffset::Center) {
  require(!models.empty(), "window_sweep: no models");
  std::vector<SweepRow> rows;
  for (double w : windows_s) {
    SweepRow row;
    row.window_s = w;
    std::size_t sel = 0, lab = 0;
    for (const auto& model : models) {
      for (const auto& trial : trials) {
        const auto o = evaluate_selection(model, clusters, trial, window_at(trial.z, w, offset));
        sel += o.selection_correct;
        lab += o.label_correct;
        ++row.n_trials;
      }
    }
    if (row.n_trials > 0) {
      row.accuracy_pct = 100.0 * static_cast<double>(sel) / static_cast<double>(row.n_trials);
      row.label_accuracy_pct = 100.0 * static_cast<double>(lab) / static_cast<double>(row.n_trials);
    }
    rows.push_back(row);
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
  os << "window_s,accuracy_pct,n_trials\n";
  for (const auto& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%g,%.4f,%zu\n", r.window_s, r.accuracy_pct, r.n_trials);
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// Stimulus-reconstruction baselines

/// Backward model: features(t) ~ sum over lags l of W_l^T z(:, t + l).
struct ReconstructionDecoder {
  Mat weights;  // (C * L) x F
  std::vector<int> lags;
  double lambda = 1e2;
  int channels = 0;

  /// Reconstructed features, T x F.
  Mat reconstruct(const NeuralRecording& z) const;
};

/// T x (C * L) design matrix; column l * C + c holds z(c, t + lags[l]), zero
/// past the end of the recording.
inline Mat lagged_design(const NeuralRecording& z, std::span<const int> lags) {
  const int c = z.channels(), frames = z.frames();
  Mat x = Mat::Zero(frames, static_cast<Eigen::Index>(c * lags.size()));
  for (std::size_t l = 0; l < lags.size(); ++l) {
    const int lag = lags[l];
    require(lag >= 0, "lagged_design: negative lag");
    const int n = frames - lag;
    if (n <= 0) continue;
    x.block(0, static_cast<Eigen::Index>(l * c), n, c) = z.data.middleCols(lag, n).transpose();
  }
  return x;
}

inline Mat ReconstructionDecoder::reconstruct(const NeuralRecording& z) const {
  require(z.channels() == channels, "reconstruct: channel count mismatch");
  return lagged_design(z, lags) * weights;
}

struct ReconstructionExample {
  NeuralRecording z;
  Mat features;  // T x F, same frame rate as z
};

/// Closed-form ridge solution W = (X^T X + lambda I)^-1 X^T Y over all examples.
inline ReconstructionDecoder fit_reconstruction(std::span<const ReconstructionExample> data,
                                                std::vector<int> lags, double lambda) {
  require(lambda > 0.0, "fit_reconstruction: lambda must be positive");
  require(!data.empty(), "fit_reconstruction: empty dataset");
  require(!lags.empty(), "fit_reconstruction: empty lag set");
  const int c = data[0].z.channels();
  const auto f = data[0].features.cols();
  const auto p = static_cast<Eigen::Index>(c * lags.size());
  Mat xtx = Mat::Zero(p, p), xty = Mat::Zero(p, f);
  for (const auto& ex : data) {
    require(ex.z.channels() == c, "fit_reconstruction: channel count mismatch");
    require(ex.features.rows() == ex.z.frames() && ex.features.cols() == f,
            "fit_reconstruction: features not aligned with recording");
    const Mat x = lagged_design(ex.z, lags);
    xtx.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    xty.noalias() += x.transpose() * ex.features;
  }
  Mat sym = xtx.selfadjointView<Eigen::Lower>();
  sym.diagonal().array() += lambda;
  ReconstructionDecoder dec;
  dec.weights = sym.ldlt().solve(xty);
  dec.lags = std::move(lags);
  dec.lambda = lambda;
  dec.channels = c;
  return dec;
}

/// Default lag set: 0 .. max_ms inclusive at the given frame rate.
inline std::vector<int> lag_range(double max_ms, double frame_rate_hz) {
  const int n = static_cast<int>(std::lround(max_ms * frame_rate_hz / 1000.0));
  std::vector<int> lags(static_cast<std::size_t>(n) + 1);
  std::iota(lags.begin(), lags.end(), 0);
  return lags;
}

struct ReconstructionSelection {
  int choice = 0;  // 0 = first candidate ("A"), 1 = second
  double corr_a = 0.0;
  double corr_b = 0.0;
};

/// Mean over feature columns of the Pearson correlation between two T x F
/// matrices.
inline double mean_column_correlation(const Mat& x, const Mat& y) {
  require(x.rows() == y.rows() && x.cols() == y.cols(), "correlation: shape mismatch");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    acc += pearson(std::span<const double>(x.col(j).data(), static_cast<std::size_t>(x.rows())),
                   std::span<const double>(y.col(j).data(), static_cast<std::size_t>(y.rows())));
  return acc / static_cast<double>(x.cols());
}

/// Reconstructs features from z and picks the better-correlated candidate;
/// ties go to the first.
inline ReconstructionSelection select_by_reconstruction(const ReconstructionDecoder& dec,
                                                        const NeuralRecording& z,
                                                        const Mat& candidate_a,
                                                        const Mat& candidate_b) {
  const Mat rec = dec.reconstruct(z);
  ReconstructionSelection s;
  s.corr_a = mean_column_correlation(rec, candidate_a);
  s.corr_b = mean_column_correlation(rec, candidate_b);
  s.choice = s.corr_b > s.corr_a ? 1 : 0;
  return s;
}

/// Wraps a 1-D feature sequence as a T x 1 matrix.
inline Mat as_column(std::span<const double> x) {
  Mat m(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = x[i];
  return m;
}

}  // namespace attnscene
