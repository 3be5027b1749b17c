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

#include <functional>

#include "attnscene/core.hpp"

namespace attnscene {

/// Layer sizes of the speaker predictor.
struct DecoderShape {
  int channels = 32;
  int hidden = 64;      // per-direction LSTM state size S
  int fc_hidden = 128;  // width of the hidden fully connected layer
  int classes = 8;      // K

  void validate() const {
    require(channels >= 1 && hidden >= 1 && fc_hidden >= 1 && classes >= 1,
            "DecoderShape: all sizes must be positive");
  }
  friend bool operator==(const DecoderShape&, const DecoderShape&) = default;
};

/// One LSTM direction. Gate rows are stacked as [input, forget, cell, output].
struct LstmWeights {
  Mat w;  // 4S x C
  Mat u;  // 4S x S
  Vec b;  // 4S
};

/// LayerNorm -> BiLSTM -> temporal mean -> FC -> ReLU -> FC -> softmax.
///
/// Parameter order (used by the optimizer and the checkpoint blob):
/// ln_gain, ln_bias, fwd.w, fwd.u, fwd.b, bwd.w, bwd.u, bwd.b,
/// fc1_w, fc1_b, fc2_w, fc2_b. Matrices are stored column-major.
struct AttentionDecoderModel {
  DecoderShape shape;
  Vec ln_gain, ln_bias;
  LstmWeights fwd, bwd;
  Mat fc1_w;  // fc_hidden x 2S
  Vec fc1_b;
  Mat fc2_w;  // K x fc_hidden
  Vec fc2_b;
  std::uint64_t seed = 0;

  static AttentionDecoderModel zeros(const DecoderShape& s) {
    s.validate();
    AttentionDecoderModel m;
    m.shape = s;
    const int g = 4 * s.hidden;
    m.ln_gain = Vec::Zero(s.channels);
    m.ln_bias = Vec::Zero(s.channels);
    for (LstmWeights* d : {&m.fwd, &m.bwd}) {
      d->w = Mat::Zero(g, s.channels);
      d->u = Mat::Zero(g, s.hidden);
      d->b = Vec::Zero(g);
    }
    m.fc1_w = Mat::Zero(s.fc_hidden, 2 * s.hidden);
    m.fc1_b = Vec::Zero(s.fc_hidden);
    m.fc2_w = Mat::Zero(s.classes, s.fc_hidden);
    m.fc2_b = Vec::Zero(s.classes);
    return m;
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights; LayerNorm starts as identity.
  static AttentionDecoderModel init(const DecoderShape& s, std::uint64_t seed) {
    AttentionDecoderModel m = zeros(s);
    m.seed = seed;
    Rng rng(seed);
    auto fill = [&rng](auto& x, double fan_in) {
      std::uniform_real_distribution<double> u(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    };
    m.ln_gain.setOnes();
    for (LstmWeights* d : {&m.fwd, &m.bwd}) {
      fill(d->w, s.channels);
      fill(d->u, s.hidden);
      fill(d->b, s.hidden);
    }
    fill(m.fc1_w, 2.0 * s.hidden);
    fill(m.fc1_b, 2.0 * s.hidden);
    fill(m.fc2_w, s.fc_hidden);
    fill(m.fc2_b, s.fc_hidden);
    return m;
  }

  template <class F>
  void visit(F&& f) {
    f("ln_gain", ln_gain.data(), ln_gain.size());
    f("ln_bias", ln_bias.data(), ln_bias.size());
    f("fwd.w", fwd.w.data(), fwd.w.size());
    f("fwd.u", fwd.u.data(), fwd.u.size());
    f("fwd.b", fwd.b.data(), fwd.b.size());
    f("bwd.w", bwd.w.data(), bwd.w.size());
    f("bwd.u", bwd.u.data(), bwd.u.size());
    f("bwd.b", bwd.b.data(), bwd.b.size());
    f("fc1_w", fc1_w.data(), fc1_w.size());
    f("fc1_b", fc1_b.data(), fc1_b.size());
    f("fc2_w", fc2_w.data(), fc2_w.size());
    f("fc2_b", fc2_b.data(), fc2_b.size());
  }
  template <class F>
  void visit(F&& f) const {
    const_cast<AttentionDecoderModel*>(this)->visit(
        [&f](const char* name, double* p, Eigen::Index n) { f(name, static_cast<const double*>(p), n); });
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    visit([&n](const char*, const double*, Eigen::Index k) { n += static_cast<std::size_t>(k); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    visit([&ok](const char*, const double* p, Eigen::Index n) {
      for (Eigen::Index i = 0; i < n; ++i) ok = ok && std::isfinite(p[i]);
    });
    return ok;
  }
};

namespace lstm_detail {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace lstm_detail

/// Standard LSTM cell:
///   i = s(a_i), f = s(a_f), g = tanh(a_g), o = s(a_o),  a = W x + U h + b
///   c' = f*c + i*g,  h' = o*tanh(c')
inline std::pair<Vec, Vec> lstm_cell_step(const LstmWeights& lw, const Vec& x, const Vec& h_prev,
                                          const Vec& c_prev) {
  const Eigen::Index s = h_prev.size();
  const Vec a = lw.w * x + lw.u * h_prev + lw.b;
  Vec c(s), h(s);
  for (Eigen::Index j = 0; j < s; ++j) {
    const double i = lstm_detail::sigmoid(a(j));
    const double f = lstm_detail::sigmoid(a(s + j));
    const double g = std::tanh(a(2 * s + j));
    const double o = lstm_detail::sigmoid(a(3 * s + j));
    c(j) = f * c_prev(j) + i * g;
    h(j) = o * std::tanh(c(j));
  }
  return {h, c};
}

/// Activations kept from a forward pass for backpropagation.
struct ForwardCache {
  struct Direction {
    Mat gates;   // 4S x T, post-activation [i f g o]
    Mat cell;    // S x T
    Mat tanh_c;  // S x T
    Mat h;       // S x T, indexed by time (not processing order)
  };
  Mat xhat;  // C x T normalized input before gain/bias
  Mat x;     // C x T LayerNorm output fed to the LSTM
  Direction fwd, bwd;
  Vec pooled, fc1_pre, fc1_act, logits, probs;
};

namespace lstm_detail {

inline constexpr double kLayerNormEps = 1e-5;

inline void run_direction(const LstmWeights& lw, const Mat& x, bool reverse,
                          ForwardCache::Direction& out) {
  const Eigen::Index s = lw.u.cols(), frames = x.cols();
  Mat pre = lw.w * x;
  pre.colwise() += lw.b;
  out.gates.resize(4 * s, frames);
  out.cell.resize(s, frames);
  out.tanh_c.resize(s, frames);
  out.h.resize(s, frames);
  Vec h = Vec::Zero(s), c = Vec::Zero(s), a(4 * s);
  for (Eigen::Index k = 0; k < frames; ++k) {
    const Eigen::Index t = reverse ? frames - 1 - k : k;
    a.noalias() = pre.col(t);
    a.noalias() += lw.u * h;
    auto gates = out.gates.col(t);
    gates.segment(0, 2 * s) = (1.0 + (-a.segment(0, 2 * s).array()).exp()).inverse().matrix();
    gates.segment(2 * s, s) = a.segment(2 * s, s).array().tanh().matrix();
    gates.segment(3 * s, s) = (1.0 + (-a.segment(3 * s, s).array()).exp()).inverse().matrix();
    c = gates.segment(s, s).cwiseProduct(c) + gates.segment(0, s).cwiseProduct(gates.segment(2 * s, s));
    out.tanh_c.col(t) = c.array().tanh().matrix();
    h = gates.segment(3 * s, s).cwiseProduct(out.tanh_c.col(t));
    out.cell.col(t) = c;
    out.h.col(t) = h;
  }
}

// Backpropagates a per-time gradient on h through one direction. Accumulates
// parameter gradients into `grad` and input gradients into `dx`.
inline void backprop_direction(const LstmWeights& lw, const Mat& x,
                               const ForwardCache::Direction& cache, bool reverse,
                               const Vec& dh_each, LstmWeights& grad, Mat& dx) {
  const Eigen::Index s = lw.u.cols(), frames = x.cols();
  Mat da(4 * s, frames);
  Mat h_prev = Mat::Zero(s, frames);
  Vec dh_next = Vec::Zero(s), dc_next = Vec::Zero(s), dh(s);
  for (Eigen::Index k = frames - 1; k >= 0; --k) {
    const Eigen::Index t = reverse ? frames - 1 - k : k;
    const bool has_prev = k > 0;
    const Eigen::Index tp = reverse ? t + 1 : t - 1;
    if (has_prev) h_prev.col(t) = cache.h.col(tp);
    dh = dh_each + dh_next;
    for (Eigen::Index j = 0; j < s; ++j) {
      const double i = cache.gates(j, t), f = cache.gates(s + j, t);
      const double g = cache.gates(2 * s + j, t), o = cache.gates(3 * s + j, t);
      const double tc = cache.tanh_c(j, t);
      const double c_prev = has_prev ? cache.cell(j, tp) : 0.0;
      const double d_o = dh(j) * tc;
      const double dc = dh(j) * o * (1.0 - tc * tc) + dc_next(j);
      da(j, t) = dc * g * i * (1.0 - i);
      da(s + j, t) = dc * c_prev * f * (1.0 - f);
      da(2 * s + j, t) = dc * i * (1.0 - g * g);
      da(3 * s + j, t) = d_o * o * (1.0 - o);
      dc_next(j) = dc * f;
    }
    dh_next.noalias() = lw.u.transpose() * da.col(t);
  }
  grad.w.noalias() += da * x.transpose();
  grad.u.noalias() += da * h_prev.transpose();
  grad.b += da.rowwise().sum();
  dx.noalias() += lw.w.transpose() * da;
}

}  // namespace lstm_detail

/// Full forward pass over a C x T input. Fills `cache` and returns class
/// probabilities.
inline Vec bilstm_forward(const AttentionDecoderModel& m, const Mat& z, ForwardCache& cache) {
  require(z.rows() == m.shape.channels,
          "bilstm_forward: input has " + std::to_string(z.rows()) + " channels, model expects " +
              std::to_string(m.shape.channels));
  require(z.cols() >= 1, "bilstm_forward: empty input");
  const Eigen::Index frames = z.cols();
  const double inv_c = 1.0 / static_cast<double>(z.rows());

  cache.xhat.resize(z.rows(), frames);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const double mu = z.col(t).sum() * inv_c;
    const double var = (z.col(t).array() - mu).square().sum() * inv_c;
    cache.xhat.col(t) = (z.col(t).array() - mu) / std::sqrt(var + lstm_detail::kLayerNormEps);
  }
  cache.x = (cache.xhat.array().colwise() * m.ln_gain.array()).colwise() + m.ln_bias.array();

  lstm_detail::run_direction(m.fwd, cache.x, false, cache.fwd);
  lstm_detail::run_direction(m.bwd, cache.x, true, cache.bwd);

  const int s = m.shape.hidden;
  cache.pooled.resize(2 * s);
  cache.pooled.head(s) = cache.fwd.h.rowwise().mean();
  cache.pooled.tail(s) = cache.bwd.h.rowwise().mean();
  cache.fc1_pre = m.fc1_w * cache.pooled + m.fc1_b;
  cache.fc1_act = cache.fc1_pre.cwiseMax(0.0);
  cache.logits = m.fc2_w * cache.fc1_act + m.fc2_b;
  const double mx = cache.logits.maxCoeff();
  cache.probs = (cache.logits.array() - mx).exp();
  cache.probs /= cache.probs.sum();
  return cache.probs;
}

inline Vec bilstm_forward(const AttentionDecoderModel& m, const Mat& z) {
  ForwardCache cache;
  return bilstm_forward(m, z, cache);
}

/// Cross-entropy of the forward pass in `cache` against `label`.
inline double cross_entropy(const ForwardCache& cache, int label) {
  const double mx = cache.logits.maxCoeff();
  const double lse = mx + std::log((cache.logits.array() - mx).exp().sum());
  return lse - cache.logits(label);
}

/// Gradient of the cross-entropy w.r.t. every parameter, accumulated into
/// `grad` (which must have the model's shape). Returns the loss.
inline double bilstm_backward(const AttentionDecoderModel& m, const Mat& z, int label,
                              AttentionDecoderModel& grad, ForwardCache& cache) {
  require(label >= 0 && label < m.shape.classes, "bilstm_backward: label out of range");
  bilstm_forward(m, z, cache);
  const double loss = cross_entropy(cache, label);

  Vec dlogits = cache.probs;
  dlogits(label) -= 1.0;
  grad.fc2_w.noalias() += dlogits * cache.fc1_act.transpose();
  grad.fc2_b += dlogits;
  Vec du = m.fc2_w.transpose() * dlogits;
  for (Eigen::Index j = 0; j < du.size(); ++j)
    if (cache.fc1_pre(j) <= 0.0) du(j) = 0.0;
  grad.fc1_w.noalias() += du * cache.pooled.transpose();
  grad.fc1_b += du;
  const Vec dp = m.fc1_w.transpose() * du;

  const int s = m.shape.hidden;
  const double inv_t = 1.0 / static_cast<double>(z.cols());
  Mat dx = Mat::Zero(z.rows(), z.cols());
  lstm_detail::backprop_direction(m.fwd, cache.x, cache.fwd, false, dp.head(s) * inv_t, grad.fwd, dx);
  lstm_detail::backprop_direction(m.bwd, cache.x, cache.bwd, true, dp.tail(s) * inv_t, grad.bwd, dx);

  grad.ln_gain += (dx.array() * cache.xhat.array()).rowwise().sum().matrix();
  grad.ln_bias += dx.rowwise().sum();
  return loss;
}

inline std::size_t argmax(const Vec& p) {
  Eigen::Index i = 0;
  p.maxCoeff(&i);
  return static_cast<std::size_t>(i);
}

}  // namespace attnscene
