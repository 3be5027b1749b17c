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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>

#include <json.hpp>

#include "attnscene/attention_decoder.hpp"
#include "attnscene/audio_io.hpp"
#include "attnscene/config.hpp"
#include "attnscene/prompt.hpp"

namespace attnscene {

// ---------------------------------------------------------------------------
// Scripted content

struct Topic {
  std::string name;
  std::vector<std::string> words;
};

inline const std::vector<Topic>& topics() {
  static const std::vector<Topic> t = {
      {"the weather", {"rain", "cloud", "storm", "sunshine", "wind", "forecast", "thunder",
                       "umbrella", "snow", "breeze", "frost", "puddle"}},
      {"cooking", {"oven", "garlic", "recipe", "butter", "flour", "onion", "pepper", "kitchen",
                   "simmer", "bread", "spoon", "salad"}},
      {"travel", {"train", "ticket", "airport", "luggage", "hotel", "passport", "journey",
                  "station", "map", "beach", "harbor", "bridge"}},
      {"music", {"guitar", "melody", "piano", "concert", "rhythm", "violin", "chorus", "drum",
                 "singer", "album", "tune", "orchestra"}},
      {"gardening", {"tulip", "shovel", "soil", "seed", "roses", "hedge", "compost", "fence",
                     "apple", "watering", "bloom", "meadow"}},
      {"sports", {"football", "coach", "goal", "stadium", "referee", "sprint", "tennis", "match",
                  "team", "trophy", "score", "bicycle"}},
      {"science", {"planet", "atom", "telescope", "experiment", "molecule", "gravity",
                   "laboratory", "comet", "energy", "fossil", "microscope", "orbit"}},
      {"history", {"castle", "king", "empire", "battle", "museum", "ancient", "village", "treaty",
                   "knight", "scroll", "throne", "cathedral"}},
  };
  return t;
}

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> w = {"the",  "a",    "and",  "then",  "we",   "it",
                                             "was",  "very", "my",   "our",   "with", "near",
                                             "after", "about", "this", "that"};
  return w;
}

/// Words, summaries and QA for one talker. Topic words carry the content;
/// fillers are interleaved at random.
struct Script {
  std::size_t topic = 0;
  std::vector<std::string> words;
  std::vector<std::string> summaries;
  std::vector<QaPair> qa;
};

inline Script make_script(std::size_t topic_index, std::size_t n_words, Rng& rng) {
  require(topic_index < topics().size(), "make_script: topic index out of range");
  require(n_words >= 1, "make_script: need at least one word");
  const Topic& tp = topics()[topic_index];
  Script s;
  s.topic = topic_index;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_topic(0, tp.words.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_filler(0, filler_words().size() - 1);
  for (std::size_t i = 0; i < n_words; ++i) {
    const bool content = i == 0 || u(rng) < 0.6;
    s.words.push_back(content ? tp.words[pick_topic(rng)] : filler_words()[pick_filler(rng)]);
  }

  // First three distinct topic words in speaking order.
  std::vector<std::string> keys;
  for (const auto& w : s.words) {
    if (std::find(tp.words.begin(), tp.words.end(), w) == tp.words.end()) continue;
    if (std::find(keys.begin(), keys.end(), w) != keys.end()) continue;
    keys.push_back(w);
    if (keys.size() == 3) break;
  }
  while (keys.size() < 3) keys.push_back(keys.front());

  s.summaries = {
      "The speaker talks about " + tp.name + " and mentions " + keys[0] + " and " + keys[1] + ".",
      "A short talk on " + tp.name + " covering " + keys[0] + ", " + keys[1] + " and " + keys[2] +
          ".",
      "The talk is mostly about " + tp.name + ", especially " + keys[0] + ".",
  };

  std::string ending;
  const std::size_t tail = std::min<std::size_t>(3, s.words.size());
  for (std::size_t i = s.words.size() - tail; i < s.words.size(); ++i)
    ending += (ending.empty() ? "" : " ") + s.words[i];
  s.qa = {
      {"What topic does the speaker talk about?", "The speaker talks about " + tp.name + "."},
      {"Which topic word does the speaker say first?", "The first one is " + keys[0] + "."},
      {"What are the last words of the speech?", "It ends with " + ending + "."},
  };
  return s;
}

// ---------------------------------------------------------------------------
// Speakers

/// Gender at random, f0 from a gender-typical range, tempo uniform.
inline SourceSpec draw_speaker(Rng& rng) {
  SourceSpec s;
  std::bernoulli_distribution female(0.5);
  s.gender = female(rng) ? Gender::Female : Gender::Male;
  std::uniform_real_distribution<double> f0 = s.gender == Gender::Male
                                                  ? std::uniform_real_distribution<double>(85.0, 180.0)
                                                  : std::uniform_real_distribution<double>(160.0, 255.0);
  s.f0_hz = f0(rng);
  s.seconds_per_word = std::uniform_real_distribution<double>(0.2, 0.45)(rng);
  s.timbre_seed = rng();
  return s;
}

/// Speaker corpus used to build the identity space.
inline ClusterModel build_cluster_model(const ClusterConfig& cfg) {
  require(cfg.corpus_size >= cfg.k, "build_cluster_model: corpus smaller than K");
  Rng rng(mix_seed(cfg.seed, 0xc0));
  std::vector<SpeakerEmbedding> corpus;
  corpus.reserve(static_cast<std::size_t>(cfg.corpus_size));
  for (int i = 0; i < cfg.corpus_size; ++i) corpus.push_back(embed_speaker(draw_speaker(rng), cfg.dim));
  const std::string corpus_id = "synthetic-" + std::to_string(cfg.corpus_size) + "-" +
                                std::to_string(cfg.seed);
  return kmeans_fit(corpus, cfg.k, cfg.seed, cfg.max_iter, corpus_id);
}

inline EncodingParams listener_params(const NeuralConfig& cfg) {
  EncodingParams p = EncodingParams::random_listener(cfg.channels, cfg.identity_dims,
                                                     cfg.max_lag_frames, cfg.listener_seed);
  p.attended_gain = cfg.attended_gain;
  p.unattended_gain = cfg.unattended_gain;
  p.identity_gain = cfg.identity_gain;
  p.noise_sigma = cfg.noise_sigma;
  p.frame_rate_hz = cfg.frame_rate_hz;
  return p;
}

// ---------------------------------------------------------------------------
// Trials

enum class Split { Train, Test };
inline const char* to_string(Split s) { return s == Split::Train ? "train" : "test"; }
inline Split split_from_string(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw InvalidArgument("unknown split '" + std::string(s) + "'");
}

struct TrialSeeds {
  std::uint64_t scene = 0;
  std::uint64_t neural = 0;
  std::uint64_t order = 0;
};

/// One generated scene with everything downstream stages need. Indexed by
/// talker (A, B) unless stated otherwise.
struct Trial {
  Split split = Split::Test;
  int index = 0;
  TrialSeeds seeds;
  std::array<SourceSpec, 2> specs;
  std::array<Script, 2> scripts;
  std::array<SpeakerEmbedding, 2> embeddings;
  std::array<int, 2> labels{};
  Scene scene;
  NeuralRecording z;
  SeparatedStreams streams;

  const std::string& id() const { return scene.scene_id; }
  Talker attended() const { return scene.attended; }
  int attended_label() const { return labels[static_cast<int>(scene.attended)]; }
  int attended_stream() const { return streams.index_of(scene.attended); }

  /// Per stream, in presentation order.
  const SpeakerEmbedding& stream_embedding(int i) const {
    return embeddings[static_cast<int>(streams.source_of(i))];
  }
  int stream_label(int i) const { return labels[static_cast<int>(streams.source_of(i))]; }
  std::array<SpeakerEmbedding, 2> stream_embeddings() const {
    return {stream_embedding(0), stream_embedding(1)};
  }
  std::string transcript_text(Talker t) const { return join_words(scene.transcript(t)); }

  OracleSceneRecord oracle_record() const {
    OracleSceneRecord r;
    for (int i = 0; i < 2; ++i) {
      const int t = static_cast<int>(streams.source_of(i));
      auto& s = r.streams[static_cast<std::size_t>(i)];
      s.transcript = join_words(scripts[t].words);
      s.attrs = classify_attributes(specs[t]);
      s.summaries = scripts[t].summaries;
      s.qa = scripts[t].qa;
      s.embedding = embeddings[t];
    }
    return r;
  }

  SelectionTrial selection_trial() const {
    return {z, stream_embeddings(), attended_stream(), attended_label()};
  }
};

inline std::string scene_id(Split split, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%05d", to_string(split), index);
  return buf;
}

/// Deterministic trial factory: trial (split, index) depends only on the
/// config, never on generation order.
class TrialGenerator {
 public:
  TrialGenerator(ExperimentConfig cfg, ClusterModel clusters)
      : cfg_(std::move(cfg)),
        clusters_(std::move(clusters)),
        listener_(listener_params(cfg_.neural)),
        profile_(cfg_.separation.quality()) {
    require(clusters_.dim() == cfg_.clusters.dim, "TrialGenerator: cluster D differs from config");
  }

  const ExperimentConfig& config() const { return cfg_; }
  const ClusterModel& clusters() const { return clusters_; }
  const EncodingParams& listener() const { return listener_; }

  TrialSeeds seeds(Split split, int index) const {
    const std::uint64_t base = mix_seed(cfg_.scene.seed, split == Split::Train ? 0x7a1 : 0x7e5);
    const std::uint64_t s = mix_seed(base, static_cast<std::uint64_t>(index));
    return {s, mix_seed(s, 0x2e), mix_seed(s, 0x0d)};
  }

  Trial make(Split split, int index) const {
    require(index >= 0, "TrialGenerator: negative index");
    Trial t;
    t.split = split;
    t.index = index;
    t.seeds = seeds(split, index);
    Rng rng(t.seeds.scene);

    // Talker pair, redrawn until labels differ when distinct clusters are requested.
    constexpr int kMaxDraws = 1000;
    int draws = 0;
    for (;;) {
      for (int i = 0; i < 2; ++i) {
        t.specs[i] = draw_speaker(rng);
        t.embeddings[i] = embed_speaker(t.specs[i], cfg_.clusters.dim);
        t.labels[i] = assign_label(clusters_, t.embeddings[i]);
      }
      if (!cfg_.scene.distinct_clusters || t.labels[0] != t.labels[1]) break;
      if (++draws >= kMaxDraws)
        throw DegenerateInput("TrialGenerator: no talker pair with distinct cluster labels");
    }

    const std::size_t n_topics = topics().size();
    const std::size_t topic_a = std::uniform_int_distribution<std::size_t>(0, n_topics - 1)(rng);
    const std::size_t topic_b =
        (topic_a + 1 + std::uniform_int_distribution<std::size_t>(0, n_topics - 2)(rng)) % n_topics;
    const std::array<std::size_t, 2> topic = {topic_a, topic_b};
    const double dur = cfg_.scene.duration_s;
    const int rate = cfg_.scene.sample_rate_hz;
    std::array<AudioSignal, 2> src;
    for (int i = 0; i < 2; ++i) {
      const auto n_words =
          static_cast<std::size_t>(std::ceil(dur / t.specs[i].seconds_per_word - 1e-9));
      t.scripts[i] = make_script(topic[i], std::max<std::size_t>(n_words, 1), rng);
      t.specs[i].words = t.scripts[i].words;
      src[i] = synthesize_source(t.specs[i], dur, rate);
    }

    const auto& snrs = cfg_.scene.snr_db;
    const double snr = snrs[std::uniform_int_distribution<std::size_t>(0, snrs.size() - 1)(rng)];
    const Talker attended = std::bernoulli_distribution(0.5)(rng) ? Talker::B : Talker::A;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> noise(src[0].size());
    for (double& v : noise) v = normal(rng);

    t.scene = mix_scene(src[0], src[1], AudioSignal(std::move(noise), rate), snr, attended);
    finish(t, scene_id(split, index));
    return t;
  }

  /// Fills labels-derived fields, neural data and streams once the scene exists.
  void finish(Trial& t, const std::string& id, bool encode_neural = true) const {
    t.scene.scene_id = id;
    t.scene.attrs_a = classify_attributes(t.specs[0]);
    t.scene.attrs_b = classify_attributes(t.specs[1]);
    t.scene.transcript_a = t.scripts[0].words;
    t.scene.transcript_b = t.scripts[1].words;
    EncodingParams p = listener_;
    p.seed = t.seeds.neural;
    if (encode_neural) t.z = encode(t.scene, t.embeddings, p);
    t.streams = separate(t.scene, profile_, t.seeds.order);
  }

  LabeledRecording labeled(const Trial& t) const { return {t.z, t.attended_label()}; }

 private:
  ExperimentConfig cfg_;
  ClusterModel clusters_;
  EncodingParams listener_;
  QualityProfile profile_;
};

// ---------------------------------------------------------------------------
// On-disk workspace: manifest.jsonl plus wav/ and neural/ directories.

inline nlohmann::json attrs_json(const SpeakerAttributes& a) {
  return {{"gender", to_string(a.gender)}, {"pitch", to_string(a.pitch)}, {"tempo", to_string(a.tempo)}};
}

inline nlohmann::json spec_json(const SourceSpec& s) {
  return {{"f0_hz", s.f0_hz},
          {"seconds_per_word", s.seconds_per_word},
          {"timbre_seed", s.timbre_seed},
          {"gender", to_string(s.gender)}};
}

inline nlohmann::json script_json(const Script& s) {
  nlohmann::json qa = nlohmann::json::array();
  for (const auto& p : s.qa) qa.push_back({{"question", p.question}, {"answer", p.answer}});
  return {{"topic", topics()[s.topic].name}, {"summaries", s.summaries}, {"qa", qa}};
}

/// Common int16 headroom for every file of one scene, so the stored sources
/// keep their relative levels.
inline double wav_gain(const Scene& s) {
  double peak = 0.0;
  for (const AudioSignal* x : {&s.source_a, &s.source_b, &s.noise, &s.mixture})
    for (double v : x->samples()) peak = std::max(peak, std::abs(v));
  return peak > 0.0 ? 0.99 / peak : 1.0;
}

struct ManifestPaths {
  std::filesystem::path root;
  std::filesystem::path manifest() const { return root / "manifest.jsonl"; }
  std::filesystem::path wav_dir() const { return root / "wav"; }
  std::filesystem::path neural_dir() const { return root / "neural"; }
  std::filesystem::path clusters() const { return root / "clusters.json"; }
  std::filesystem::path config() const { return root / "config.json"; }
};

/// Writes audio and neural files for `t` and returns its manifest line.
inline nlohmann::json write_trial_files(const ManifestPaths& ws, const Trial& t, bool write_audio) {
  namespace fs = std::filesystem;
  const std::string id = t.id();
  nlohmann::json j;
  j["scene_id"] = id;
  j["split"] = to_string(t.split);
  j["index"] = t.index;
  j["attended"] = to_string(t.attended());
  j["snr_db"] = t.scene.snr_db;
  j["attrs_a"] = attrs_json(t.scene.attrs_a);
  j["attrs_b"] = attrs_json(t.scene.attrs_b);
  j["transcript_a"] = t.transcript_text(Talker::A);
  j["transcript_b"] = t.transcript_text(Talker::B);
  j["spec_a"] = spec_json(t.specs[0]);
  j["spec_b"] = spec_json(t.specs[1]);
  j["script_a"] = script_json(t.scripts[0]);
  j["script_b"] = script_json(t.scripts[1]);
  j["labels"] = {{"a", t.labels[0]}, {"b", t.labels[1]}};
  j["seeds"] = {{"scene", t.seeds.scene}, {"neural", t.seeds.neural}, {"order", t.seeds.order}};

  const fs::path neural_rel = fs::path("neural") / (id + ".iiz");
  fs::create_directories(ws.neural_dir());
  write_iiz(ws.root / neural_rel, t.z);
  j["neural"] = neural_rel.generic_string();

  if (write_audio) {
    fs::create_directories(ws.wav_dir());
    const double g = wav_gain(t.scene);
    nlohmann::json wav;
    const std::array<std::pair<const char*, const AudioSignal*>, 4> parts = {
        {{"a", &t.scene.source_a}, {"b", &t.scene.source_b}, {"noise", &t.scene.noise},
         {"mixture", &t.scene.mixture}}};
    for (const auto& [name, sig] : parts) {
      const fs::path rel = fs::path("wav") / (id + "_" + name + ".wav");
      write_wav(ws.root / rel, *sig, g);
      wav[name] = rel.generic_string();
    }
    j["wav"] = wav;
    j["wav_gain"] = g;
  }
  return j;
}

inline Script script_from_json(const nlohmann::json& j, const std::vector<std::string>& words) {
  Script s;
  const std::string name = j.at("topic").get<std::string>();
  const auto& ts = topics();
  const auto it = std::find_if(ts.begin(), ts.end(), [&](const Topic& t) { return t.name == name; });
  require(it != ts.end(), "manifest: unknown topic '" + name + "'");
  s.topic = static_cast<std::size_t>(it - ts.begin());
  s.words = words;
  s.summaries = j.at("summaries").get<std::vector<std::string>>();
  for (const auto& q : j.at("qa"))
    s.qa.push_back({q.at("question").get<std::string>(), q.at("answer").get<std::string>()});
  return s;
}

/// Rebuilds a trial from its manifest line. Audio comes from the stored WAVs
/// when present, otherwise it is resynthesized from the stored specs; the
/// neural recording is always read from disk.
inline Trial load_trial(const ManifestPaths& ws, const nlohmann::json& j, const TrialGenerator& gen) {
  Trial t;
  t.split = split_from_string(j.at("split").get<std::string>());
  t.index = j.at("index").get<int>();
  const auto& sd = j.at("seeds");
  t.seeds = {sd.at("scene").get<std::uint64_t>(), sd.at("neural").get<std::uint64_t>(),
             sd.at("order").get<std::uint64_t>()};
  const std::array<const char*, 2> suffix = {"a", "b"};
  for (int i = 0; i < 2; ++i) {
    const auto& js = j.at(std::string("spec_") + suffix[i]);
    SourceSpec s;
    s.f0_hz = js.at("f0_hz").get<double>();
    s.seconds_per_word = js.at("seconds_per_word").get<double>();
    s.timbre_seed = js.at("timbre_seed").get<std::uint64_t>();
    s.gender = gender_from_string(js.at("gender").get<std::string>());
    s.words = split_words(j.at(std::string("transcript_") + suffix[i]).get<std::string>());
    t.specs[i] = s;
    t.scripts[i] = script_from_json(j.at(std::string("script_") + suffix[i]), s.words);
    t.embeddings[i] = embed_speaker(s, gen.config().clusters.dim);
    t.labels[i] = assign_label(gen.clusters(), t.embeddings[i]);
  }

  const Talker attended = talker_from_string(j.at("attended").get<std::string>());
  const double snr = j.at("snr_db").get<double>();
  if (j.contains("wav")) {
    const double g = j.at("wav_gain").get<double>();
    const auto& w = j.at("wav");
    const auto rd = [&](const char* k) { return read_wav(ws.root / w.at(k).get<std::string>(), g); };
    t.scene.source_a = rd("a");
    t.scene.source_b = rd("b");
    t.scene.noise = rd("noise");
    t.scene.mixture = rd("mixture");
    t.scene.attended = attended;
    t.scene.snr_db = snr;
  } else {
    const double dur = gen.config().scene.duration_s;
    const int rate = gen.config().scene.sample_rate_hz;
    const AudioSignal a = synthesize_source(t.specs[0], dur, rate);
    const AudioSignal b = synthesize_source(t.specs[1], dur, rate);
    t.scene.source_a = a;
    t.scene.source_b = b;
    t.scene.noise = AudioSignal(std::vector<double>(a.size(), 0.0), rate);
    t.scene.mixture = a + b;
    t.scene.attended = attended;
    t.scene.snr_db = snr;
  }
  const std::string id = j.at("scene_id").get<std::string>();
  gen.finish(t, id, false);
  t.z = read_iiz(ws.root / j.at("neural").get<std::string>(), id);
  return t;
}

inline std::vector<nlohmann::json> read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read manifest " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

}  // namespace attnscene
