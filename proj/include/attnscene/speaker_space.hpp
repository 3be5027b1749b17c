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

#include <filesystem>
#include <fstream>
#include <optional>

#include <json.hpp>

#include "attnscene/audio_scene.hpp"

namespace attnscene {

/// Fixed-length voice identity vector (x-vector stand-in).
struct SpeakerEmbedding {
  Vec values;
  Eigen::Index dim() const { return values.size(); }
  friend bool operator==(const SpeakerEmbedding& a, const SpeakerEmbedding& b) {
    return a.values.size() == b.values.size() && a.values == b.values;
  }
};

// Embedding layout: [0] log-pitch coordinate, [1] log-rate coordinate,
// [2..D) unit-norm timbre block seeded by the talker.
inline constexpr double kPitchAxisScale = 4.0;
inline constexpr double kPitchAxisRefHz = 155.0;
inline constexpr double kTempoAxisScale = 4.0;
inline constexpr double kTempoAxisRefSpw = 0.32;
inline constexpr int kMinEmbeddingDim = 8;

inline SpeakerEmbedding embed_speaker(const SourceSpec& spec, int dim) {
  require(dim >= kMinEmbeddingDim, "embed_speaker: dimension must be >= 8");
  require(spec.f0_hz > 0.0 && spec.seconds_per_word > 0.0, "embed_speaker: invalid spec");
  Vec e(dim);
  e(0) = kPitchAxisScale * std::log2(spec.f0_hz / kPitchAxisRefHz);
  e(1) = kTempoAxisScale * std::log2(kTempoAxisRefSpw / spec.seconds_per_word);
  Rng rng(mix_seed(spec.timbre_seed, 0x7153));
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec timbre(dim - 2);
  for (Eigen::Index i = 0; i < timbre.size(); ++i) timbre(i) = normal(rng);
  e.tail(dim - 2) = timbre / timbre.norm();
  return {std::move(e)};
}

/// Inverse of the prosodic axes: the f0 a vector's pitch coordinate encodes.
inline double implied_f0_hz(const SpeakerEmbedding& e) {
  return kPitchAxisRefHz * std::exp2(e.values(0) / kPitchAxisScale);
}
inline double implied_seconds_per_word(const SpeakerEmbedding& e) {
  return kTempoAxisRefSpw / std::exp2(e.values(1) / kTempoAxisScale);
}

/// K centroids in embedding space.
class ClusterModel {
 public:
  ClusterModel() = default;
  ClusterModel(Mat centroids, std::uint64_t seed, std::string corpus_id)
      : centroids_(std::move(centroids)), seed_(seed), corpus_id_(std::move(corpus_id)) {
    require(centroids_.rows() >= 1 && centroids_.cols() >= 1, "ClusterModel: empty centroids");
    require(centroids_.allFinite(), "ClusterModel: non-finite centroid");
  }

  int k() const { return static_cast<int>(centroids_.rows()); }
  int dim() const { return static_cast<int>(centroids_.cols()); }
  const Mat& centroids() const { return centroids_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& corpus_id() const { return corpus_id_; }

  friend bool operator==(const ClusterModel& a, const ClusterModel& b) {
    return a.seed_ == b.seed_ && a.corpus_id_ == b.corpus_id_ &&
           a.centroids_.rows() == b.centroids_.rows() &&
           a.centroids_.cols() == b.centroids_.cols() && a.centroids_ == b.centroids_;
  }

 private:
  Mat centroids_;
  std::uint64_t seed_ = 0;
  std::string corpus_id_;
};

/// Nearest centroid by Euclidean distance; ties go to the lowest index.
inline int assign_label(const ClusterModel& model, const SpeakerEmbedding& e) {
  require(e.dim() == model.dim(), "assign_label: dimension mismatch (" + std::to_string(e.dim()) +
                                      " vs " + std::to_string(model.dim()) + ")");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < model.k(); ++k) {
    const double d = (model.centroids().row(k).transpose() - e.values).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

inline SpeakerEmbedding centroid_of(const ClusterModel& model, int label) {
  require(label >= 0 && label < model.k(),
          "centroid_of: label " + std::to_string(label) + " out of range for K=" +
              std::to_string(model.k()));
  return {model.centroids().row(label).transpose()};
}

struct KMeansFit {
  ClusterModel model;
  std::vector<int> assignments;
  std::vector<double> objective;  // sum of squared distances after each assignment step
  int iterations = 0;
  bool converged = false;
};

/// Lloyd's algorithm with k-means++ seeding. An empty cluster is re-seeded
/// with the point farthest from its current centroid.
inline KMeansFit kmeans_fit_detailed(std::span<const SpeakerEmbedding> points, int k,
                                     std::uint64_t seed, int max_iter,
                                     std::string corpus_id = "") {
  require(k >= 1, "kmeans_fit: K must be >= 1");
  require(points.size() >= static_cast<std::size_t>(k),
          "kmeans_fit: need at least K embeddings (" + std::to_string(points.size()) + " < " +
              std::to_string(k) + ")");
  require(max_iter >= 1, "kmeans_fit: max_iter must be >= 1");
  const auto n = static_cast<Eigen::Index>(points.size());
  const Eigen::Index d = points[0].dim();
  Mat x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    require(points[i].dim() == d, "kmeans_fit: inconsistent embedding dimensions");
    x.row(i) = points[i].values.transpose();
  }

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Mat c(k, d);
  {
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    c.row(0) = x.row(pick(rng));
    Vec nearest = (x.rowwise() - c.row(0)).rowwise().squaredNorm();
    for (int j = 1; j < k; ++j) {
      const double total = nearest.sum();
      if (total <= 0.0) throw DegenerateInput("kmeans_fit: fewer distinct points than K");
      double r = unit(rng) * total;
      Eigen::Index chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        r -= nearest(i);
        if (r < 0.0 && nearest(i) > 0.0) {
          chosen = i;
          break;
        }
      }
      while (nearest(chosen) <= 0.0) --chosen;
      c.row(j) = x.row(chosen);
      nearest = nearest.cwiseMin((x.rowwise() - c.row(j)).rowwise().squaredNorm());
    }
  }

  KMeansFit fit;
  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    double objective = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        const double dd = (x.row(i) - c.row(j)).squaredNorm();
        if (dd < best_d) {
          best_d = dd;
          best = j;
        }
      }
      if (assign[i] != best) changed = true;
      assign[i] = best;
      dist[i] = best_d;
      objective += best_d;
    }
    fit.objective.push_back(objective);
    fit.iterations = it + 1;
    if (!changed) {
      fit.converged = true;
      break;
    }

    Mat sums = Mat::Zero(k, d);
    std::vector<Eigen::Index> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[i]) += x.row(i);
      ++counts[assign[i]];
    }
    for (int j = 0; j < k; ++j) {
      if (counts[j] > 0) {
        c.row(j) = sums.row(j) / static_cast<double>(counts[j]);
        continue;
      }
      const auto far = static_cast<Eigen::Index>(
          std::max_element(dist.begin(), dist.end()) - dist.begin());
      if (dist[far] <= 0.0) throw DegenerateInput("kmeans_fit: cannot repair empty cluster");
      c.row(j) = x.row(far);
      dist[far] = 0.0;
      --counts[assign[far]];
      assign[far] = j;
      counts[j] = 1;
    }
  }
  fit.model = ClusterModel(std::move(c), seed, std::move(corpus_id));
  fit.assignments = std::move(assign);
  return fit;
}

inline ClusterModel kmeans_fit(std::span<const SpeakerEmbedding> points, int k, std::uint64_t seed,
                               int max_iter, std::string corpus_id = "") {
  return kmeans_fit_detailed(points, k, seed, max_iter, std::move(corpus_id)).model;
}

inline nlohmann::json to_json(const ClusterModel& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.k()) * m.dim());
  for (int r = 0; r < m.k(); ++r)
    for (int c = 0; c < m.dim(); ++c) flat.push_back(m.centroids()(r, c));
  return {{"K", m.k()}, {"D", m.dim()}, {"centroids", flat}, {"seed", m.seed()},
          {"corpus_id", m.corpus_id()}};
}

inline ClusterModel cluster_model_from_json(const nlohmann::json& j) {
  const int k = j.at("K").get<int>(), d = j.at("D").get<int>();
  const auto flat = j.at("centroids").get<std::vector<double>>();
  require(flat.size() == static_cast<std::size_t>(k) * d, "cluster model: centroid count mismatch");
  Mat c(k, d);
  for (int r = 0; r < k; ++r)
    for (int col = 0; col < d; ++col) c(r, col) = flat[static_cast<std::size_t>(r) * d + col];
  return ClusterModel(std::move(c), j.at("seed").get<std::uint64_t>(),
                      j.value("corpus_id", std::string{}));
}

inline void save_cluster_model(const std::filesystem::path& path, const ClusterModel& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << to_json(m).dump(1) << '\n';
}

inline ClusterModel load_cluster_model(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  return cluster_model_from_json(nlohmann::json::parse(is));
}

}  // namespace attnscene
