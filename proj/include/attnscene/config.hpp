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

#include <json.hpp>

#include "attnscene/http_backend.hpp"
#include "attnscene/prompt.hpp"
#include "attnscene/separation.hpp"
#include "attnscene/text_metrics.hpp"

namespace attnscene {

struct SceneConfig {
  int sample_rate_hz = 16000;
  double duration_s = 8.0;
  int n_train = 300;
  int n_test = 100;
  std::vector<double> snr_db = {9.0, 12.0};
  std::uint64_t seed = 1;
  // Reject talker pairs that fall in the same voice cluster.
  bool distinct_clusters = true;
  bool write_wav = true;
};

struct NeuralConfig {
  int channels = 32;
  double frame_rate_hz = 100.0;
  double attended_gain = 1.0;
  double unattended_gain = 0.3;
  int identity_dims = 2;
  double identity_gain = 0.035;
  double noise_sigma = 1.0;
  int max_lag_frames = 15;
  std::uint64_t listener_seed = 7;
};

struct ClusterConfig {
  int k = 8;
  int dim = 512;
  int corpus_size = 1000;
  std::uint64_t seed = 3;
  int max_iter = 100;
};

struct PredictorConfig {
  int epochs = 30;
  double lr = 1e-4;
  std::uint64_t seed = 11;
  int hidden = 64;
  int fc_hidden = 128;
  int n_restarts = 1;
};

struct SeparationConfig {
  std::string profile = "oracle";  // oracle | degraded
  double degraded_si_sdr_db = 10.0;

  QualityProfile quality() const {
    if (profile == "oracle") return QualityProfile::oracle();
    if (profile == "degraded") return QualityProfile::degraded(degraded_si_sdr_db);
    throw InvalidArgument("separation.profile must be oracle or degraded, got '" + profile + "'");
  }
};

struct BackendConfig {
  std::string kind = "mock";                 // mock | http
  std::string stream_rendering = "transcript";  // transcript | audio_ref
  EndpointConfig endpoint;
};

struct EvalConfig {
  std::vector<std::string> attention_modes = {"random", "decoded", "oracle"};
  std::vector<std::string> tasks = {"description", "transcription", "summarization", "free_qa"};
  std::vector<double> windows_s = {0.1, 0.2, 0.5, 1.0, 2.0, 4.0, 8.0};
  std::string window_offset = "center";  // start | center | end
  std::vector<std::string> boilerplate_prefixes = default_boilerplate_prefixes();
  double envelope_frame_ms = 10.0;
  int mel_bands = 40;
  double mel_frame_ms = 25.0;
  double recon_max_lag_ms = 250.0;
  double recon_lambda = 1e2;
  std::uint64_t seed = 5;
};

struct ExperimentConfig {
  SceneConfig scene;
  NeuralConfig neural;
  ClusterConfig clusters;
  PredictorConfig predictor;
  SeparationConfig separation;
  BackendConfig backend;
  EvalConfig eval;
};

// JSON mapping. Missing keys keep their defaults, so a config file only needs
// the fields it changes.

#define ATTNSCENE_JSON_FIELD(j, obj, field) \
  if ((j).contains(#field)) (j).at(#field).get_to((obj).field)

inline void from_json(const nlohmann::json& j, SceneConfig& c) {
  ATTNSCENE_JSON_FIELD(j, c, sample_rate_hz);
  ATTNSCENE_JSON_FIELD(j, c, duration_s);
  ATTNSCENE_JSON_FIELD(j, c, n_train);
  ATTNSCENE_JSON_FIELD(j, c, n_test);
  ATTNSCENE_JSON_FIELD(j, c, snr_db);
  ATTNSCENE_JSON_FIELD(j, c, seed);
  ATTNSCENE_JSON_FIELD(j, c, distinct_clusters);
  ATTNSCENE_JSON_FIELD(j, c, write_wav);
}
inline void to_json(nlohmann::json& j, const SceneConfig& c) {
  j = {{"sample_rate_hz", c.sample_rate_hz}, {"duration_s", c.duration_s},
       {"n_train", c.n_train},               {"n_test", c.n_test},
       {"snr_db", c.snr_db},                 {"seed", c.seed},
       {"distinct_clusters", c.distinct_clusters}, {"write_wav", c.write_wav}};
}

inline void from_json(const nlohmann::json& j, NeuralConfig& c) {
  ATTNSCENE_JSON_FIELD(j, c, channels);
  ATTNSCENE_JSON_FIELD(j, c, frame_rate_hz);
  ATTNSCENE_JSON_FIELD(j, c, attended_gain);
  ATTNSCENE_JSON_FIELD(j, c, unattended_gain);
  ATTNSCENE_JSON_FIELD(j, c, identity_dims);
  ATTNSCENE_JSON_FIELD(j, c, identity_gain);
  ATTNSCENE_JSON_FIELD(j, c, noise_sigma);
  ATTNSCENE_JSON_FIELD(j, c, max_lag_frames);
  ATTNSCENE_JSON_FIELD(j, c, listener_seed);
}
inline void to_json(nlohmann::json& j, const NeuralConfig& c) {
  j = {{"channels", c.channels},           {"frame_rate_hz", c.frame_rate_hz},
       {"attended_gain", c.attended_gain}, {"unattended_gain", c.unattended_gain},
       {"identity_dims", c.identity_dims}, {"identity_gain", c.identity_gain},
       {"noise_sigma", c.noise_sigma},     {"max_lag_frames", c.max_lag_frames},
       {"listener_seed", c.listener_seed}};
}

inline void from_json(const nlohmann::json& j, ClusterConfig& c) {
  ATTNSCENE_JSON_FIELD(j, c, k);
  ATTNSCENE_JSON_FIELD(j, c, dim);
  ATTNSCENE_JSON_FIELD(j, c, corpus_size);
  ATTNSCENE_JSON_FIELD(j, c, seed);
  ATTNSCENE_JSON_FIELD(j, c, max_iter);
}
inline void to_json(nlohmann::json& j, const ClusterConfig& c) {
  j = {{"k", c.k}, {"dim", c.dim}, {"corpus_size", c.corpus_size}, {"seed", c.seed},
       {"max_iter", c.max_iter}};
}

inline void from_json(const nlohmann::json& j, PredictorConfig& c) {
  ATTNSCENE_JSON_FIELD(j, c, epochs);
  ATTNSCENE_JSON_FIELD(j, c, lr);
  ATTNSCENE_JSON_FIELD(j, c, seed);
  ATTNSCENE_JSON_FIELD(j, c, hidden);
  ATTNSCENE_JSON_FIELD(j, c, fc_hidden);
  ATTNSCENE_JSON_FIELD(j, c, n_restarts);
}
inline void to_json(nlohmann::json& j, const PredictorConfig& c) {
  j = {{"epochs", c.epochs}, {"lr", c.lr},
       {"seed", c.seed},     {"hidden", c.hidden},
       {"fc_hidden", c.fc_hidden}, {"n_restarts", c.n_restarts}};
}

inline void from_json(const nlohmann::json& j, SeparationConfig& c) {
  ATTNSCENE_JSON_FIELD(j, c, profile);
  ATTNSCENE_JSON_FIELD(j, c, degraded_si_sdr_db);
}
inline void to_json(nlohmann::json& j, const SeparationConfig& c) {
  j = {{"profile", c.profile}, {"degraded_si_sdr_db", c.degraded_si_sdr_db}};
}

inline void from_json(const nlohmann::json& j, EndpointConfig& c) {
  ATTNSCENE_JSON_FIELD(j, c, url);
  ATTNSCENE_JSON_FIELD(j, c, model);
  ATTNSCENE_JSON_FIELD(j, c, api_key_env);
  ATTNSCENE_JSON_FIELD(j, c, api_key_header);
  ATTNSCENE_JSON_FIELD(j, c, api_key_prefix);
  ATTNSCENE_JSON_FIELD(j, c, timeout_ms);
  ATTNSCENE_JSON_FIELD(j, c, retries);
  ATTNSCENE_JSON_FIELD(j, c, temperature);
  ATTNSCENE_JSON_FIELD(j, c, max_in_flight);
}
inline void to_json(nlohmann::json& j, const EndpointConfig& c) {
  j = {{"url", c.url},
       {"model", c.model},
       {"api_key_env", c.api_key_env},
       {"api_key_header", c.api_key_header},
       {"api_key_prefix", c.api_key_prefix},
       {"timeout_ms", c.timeout_ms},
       {"retries", c.retries},
       {"temperature", c.temperature},
       {"max_in_flight", c.max_in_flight}};
}

inline void from_json(const nlohmann::json& j, BackendConfig& c) {
  ATTNSCENE_JSON_FIELD(j, c, kind);
  ATTNSCENE_JSON_FIELD(j, c, stream_rendering);
  ATTNSCENE_JSON_FIELD(j, c, endpoint);
}
inline void to_json(nlohmann::json& j, const BackendConfig& c) {
  j = {{"kind", c.kind}, {"stream_rendering", c.stream_rendering}, {"endpoint", c.endpoint}};
}

inline void from_json(const nlohmann::json& j, EvalConfig& c) {
  ATTNSCENE_JSON_FIELD(j, c, attention_modes);
  ATTNSCENE_JSON_FIELD(j, c, tasks);
  ATTNSCENE_JSON_FIELD(j, c, windows_s);
  ATTNSCENE_JSON_FIELD(j, c, window_offset);
  ATTNSCENE_JSON_FIELD(j, c, boilerplate_prefixes);
  ATTNSCENE_JSON_FIELD(j, c, envelope_frame_ms);
  ATTNSCENE_JSON_FIELD(j, c, mel_bands);
  ATTNSCENE_JSON_FIELD(j, c, mel_frame_ms);
  ATTNSCENE_JSON_FIELD(j, c, recon_max_lag_ms);
  ATTNSCENE_JSON_FIELD(j, c, recon_lambda);
  ATTNSCENE_JSON_FIELD(j, c, seed);
}
inline void to_json(nlohmann::json& j, const EvalConfig& c) {
  j = {{"attention_modes", c.attention_modes},
       {"tasks", c.tasks},
       {"windows_s", c.windows_s},
       {"window_offset", c.window_offset},
       {"boilerplate_prefixes", c.boilerplate_prefixes},
       {"envelope_frame_ms", c.envelope_frame_ms},
       {"mel_bands", c.mel_bands},
       {"mel_frame_ms", c.mel_frame_ms},
       {"recon_max_lag_ms", c.recon_max_lag_ms},
       {"recon_lambda", c.recon_lambda},
       {"seed", c.seed}};
}

#undef ATTNSCENE_JSON_FIELD

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  if (j.contains("scene")) j.at("scene").get_to(c.scene);
  if (j.contains("neural")) j.at("neural").get_to(c.neural);
  if (j.contains("clusters")) j.at("clusters").get_to(c.clusters);
  if (j.contains("predictor")) j.at("predictor").get_to(c.predictor);
  if (j.contains("separation")) j.at("separation").get_to(c.separation);
  if (j.contains("backend")) j.at("backend").get_to(c.backend);
  if (j.contains("eval")) j.at("eval").get_to(c.eval);
}
inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"scene", c.scene},         {"neural", c.neural},         {"clusters", c.clusters},
       {"predictor", c.predictor}, {"separation", c.separation}, {"backend", c.backend},
       {"eval", c.eval}};
}

inline void validate(const ExperimentConfig& c) {
  require(c.scene.sample_rate_hz > 0 && c.scene.duration_s > 0.0, "scene: bad rate or duration");
  require(c.scene.n_train >= 0 && c.scene.n_test >= 0, "scene: negative scene count");
  require(!c.scene.snr_db.empty(), "scene: snr_db list is empty");
  require(c.neural.channels >= 1 && c.neural.frame_rate_hz > 0.0, "neural: bad channels or rate");
  require(c.neural.attended_gain > c.neural.unattended_gain && c.neural.unattended_gain >= 0.0,
          "neural: need attended_gain > unattended_gain >= 0");
  require(c.neural.identity_dims >= 0 && c.neural.identity_dims <= c.clusters.dim,
          "neural: identity_dims must fit in the embedding");
  require(c.clusters.k >= 2 && c.clusters.dim >= kMinEmbeddingDim, "clusters: need K >= 2, D >= 8");
  require(c.clusters.corpus_size >= c.clusters.k, "clusters: corpus smaller than K");
  require(c.predictor.epochs >= 0 && c.predictor.lr > 0.0 && c.predictor.n_restarts >= 1,
          "predictor: bad epochs, lr or n_restarts");
  require(c.backend.kind == "mock" || c.backend.kind == "http", "backend.kind must be mock or http");
  require(c.backend.stream_rendering == "transcript" || c.backend.stream_rendering == "audio_ref",
          "backend.stream_rendering must be transcript or audio_ref");
  for (const auto& m : c.eval.attention_modes)
    require(m == "random" || m == "decoded" || m == "oracle",
            "eval.attention_modes entries must be random, decoded or oracle");
  for (const auto& t : c.eval.tasks) (void)task_from_string(t);
  require(c.eval.window_offset == "start" || c.eval.window_offset == "center" ||
              c.eval.window_offset == "end",
          "eval.window_offset must be start, center or end");
  (void)c.separation.quality();
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config " + path.string());
  ExperimentConfig c = nlohmann::json::parse(is).get<ExperimentConfig>();
  validate(c);
  return c;
}

}  // namespace attnscene
