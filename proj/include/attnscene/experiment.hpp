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

#include <chrono>
#include <ctime>
#include <functional>
#include <map>
#include <mutex>
#include <optional>

#include <json.hpp>

#include "attnscene/dataset.hpp"

namespace attnscene {

// ---------------------------------------------------------------------------
// Output sinks

/// Append-only JSONL writer; one mutex serializes concurrent producers.
class JsonlSink {
 public:
  explicit JsonlSink(const std::filesystem::path& path) : os_(path, std::ios::trunc) {
    if (!os_) throw std::runtime_error("cannot write " + path.string());
  }
  void write(const nlohmann::json& j) {
    std::lock_guard lock(mu_);
    os_ << j.dump() << '\n';
    os_.flush();
  }

 private:
  std::mutex mu_;
  std::ofstream os_;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Record with its timestamp removed, for reproducibility comparisons.
inline nlohmann::json without_timestamp(nlohmann::json j) {
  j.erase("timestamp");
  return j;
}

// ---------------------------------------------------------------------------
// Training

/// Training data from one pass over the train split: labelled recordings for
/// the classifier plus feature targets for the reconstruction baselines.
struct TrainingSet {
  std::vector<LabeledRecording> labeled;
  std::vector<ReconstructionExample> envelope;
  std::vector<ReconstructionExample> mel;
};

inline double feature_frame_ms(const NeuralConfig& n) { return 1000.0 / n.frame_rate_hz; }

/// Envelope of `x` framed at the neural rate, trimmed to `frames`.
inline Mat envelope_features(const AudioSignal& x, const ExperimentConfig& cfg, int frames) {
  const auto env = envelope(x, feature_frame_ms(cfg.neural));
  require(static_cast<int>(env.size()) >= frames, "envelope shorter than the neural recording");
  return as_column(std::span<const double>(env.data(), static_cast<std::size_t>(frames)));
}

/// Mel features framed at the neural rate, trimmed to `frames`.
inline Mat mel_stream_features(const AudioSignal& x, const ExperimentConfig& cfg, int frames) {
  const Mat m = mel_features(x, cfg.eval.mel_bands, feature_frame_ms(cfg.neural));
  require(m.rows() >= frames, "mel features shorter than the neural recording");
  return m.topRows(frames);
}

struct TrainingSetOptions {
  bool labeled = true;
  bool reconstruction = false;
};

inline void add_to_training_set(TrainingSet& ts, const Trial& t, const ExperimentConfig& cfg,
                                const TrainingSetOptions& opt) {
  if (opt.labeled) ts.labeled.push_back({t.z, t.attended_label()});
  if (opt.reconstruction) {
    const AudioSignal& src = t.scene.source(t.attended());
    ts.envelope.push_back({t.z, envelope_features(src, cfg, t.z.frames())});
    ts.mel.push_back({t.z, mel_stream_features(src, cfg, t.z.frames())});
  }
}

inline TrainingSet build_training_set(const TrialGenerator& gen, const TrainingSetOptions& opt) {
  TrainingSet ts;
  for (int i = 0; i < gen.config().scene.n_train; ++i)
    add_to_training_set(ts, gen.make(Split::Train, i), gen.config(), opt);
  return ts;
}

inline std::uint64_t restart_seed(std::uint64_t seed, int restart) {
  return restart == 0 ? seed : mix_seed(seed, static_cast<std::uint64_t>(restart));
}

using EpochCallback = std::function<void(int restart, int epoch, double loss)>;

inline std::vector<TrainedPredictor> train_predictors(std::span<const LabeledRecording> data,
                                                      const ExperimentConfig& cfg,
                                                      const EpochCallback& on_epoch = {}) {
  std::vector<TrainedPredictor> out;
  for (int r = 0; r < cfg.predictor.n_restarts; ++r) {
    TrainOptions opt;
    opt.epochs = cfg.predictor.epochs;
    opt.lr = cfg.predictor.lr;
    opt.seed = restart_seed(cfg.predictor.seed, r);
    opt.hidden = cfg.predictor.hidden;
    opt.fc_hidden = cfg.predictor.fc_hidden;
    if (on_epoch) opt.on_epoch = [&, r](int e, double loss) { on_epoch(r, e, loss); };
    out.push_back(train_predictor(data, cfg.clusters.k, cfg.neural.channels, opt));
  }
  return out;
}

struct ReconstructionBaselines {
  ReconstructionDecoder envelope;
  ReconstructionDecoder mel;
};

inline ReconstructionBaselines fit_baselines(const TrainingSet& ts, const ExperimentConfig& cfg) {
  const auto lags = lag_range(cfg.eval.recon_max_lag_ms, cfg.neural.frame_rate_hz);
  return {fit_reconstruction(ts.envelope, lags, cfg.eval.recon_lambda),
          fit_reconstruction(ts.mel, lags, cfg.eval.recon_lambda)};
}

inline nlohmann::json train_report_json(const TrainReport& r, int restart) {
  return {{"restart", restart},          {"seed", r.seed},
          {"epochs", r.epochs},          {"initial_loss", r.initial_loss},
          {"epoch_loss", r.epoch_loss},  {"final_loss", r.final_loss},
          {"train_accuracy", r.train_accuracy}};
}

// ---------------------------------------------------------------------------
// Signal-level metrics of a chosen stream

struct SignalMetrics {
  double snr_db = 0.0;
  double si_sdr_db = 0.0;
  double wer_pct = 0.0;
  double speaker_sim = 0.0;
};

inline nlohmann::json to_json(const SignalMetrics& m) {
  return {{"snr_db", m.snr_db},
          {"si_sdr_db", m.si_sdr_db},
          {"wer_pct", m.wer_pct},
          {"speaker_sim", m.speaker_sim}};
}

/// Quality of stream `index` as an estimate of the attended talker. WER uses
/// the stream's transcript in place of a recognizer.
inline SignalMetrics stream_metrics(const Trial& t, int index) {
  const Talker att = t.attended();
  const Talker src = t.streams.source_of(index);
  SignalMetrics m;
  m.snr_db = snr(t.streams.stream(index), t.scene.source(att));
  m.si_sdr_db = si_sdr(t.streams.stream(index), t.scene.source(att));
  m.wer_pct = wer(t.scene.transcript(src), t.scene.transcript(att));
  m.speaker_sim = speaker_similarity(t.embeddings[static_cast<int>(src)],
                                     t.embeddings[static_cast<int>(att)]);
  return m;
}

/// The unseparated mixture as the estimate: both transcripts in presentation
/// order, and the mean of both voices as the speaker vector.
inline SignalMetrics mixture_metrics(const Trial& t) {
  const Talker att = t.attended();
  SignalMetrics m;
  m.snr_db = snr(t.scene.mixture, t.scene.source(att));
  m.si_sdr_db = si_sdr(t.scene.mixture, t.scene.source(att));
  Tokens both = t.scene.transcript(t.streams.source_of(0));
  const Tokens& second = t.scene.transcript(t.streams.source_of(1));
  both.insert(both.end(), second.begin(), second.end());
  m.wer_pct = wer(both, t.scene.transcript(att));
  const SpeakerEmbedding mean{0.5 * (t.embeddings[0].values + t.embeddings[1].values)};
  m.speaker_sim = speaker_similarity(mean, t.embeddings[static_cast<int>(att)]);
  return m;
}

// ---------------------------------------------------------------------------
// Attended-speaker decoding comparison (reconstruction baselines vs centroid
// selection vs oracle)

inline const std::array<std::string, 5>& decode_systems() {
  static const std::array<std::string, 5> s = {"mixture", "envelope_reconstruction",
                                               "mel_reconstruction", "centroid_selection",
                                               "oracle"};
  return s;
}

inline std::vector<nlohmann::json> decode_trial(const Trial& t, const ExperimentConfig& cfg,
                                                const ReconstructionBaselines* baselines,
                                                std::span<const AttentionDecoderModel> models,
                                                const ClusterModel& clusters) {
  std::vector<nlohmann::json> out;
  const int att = t.attended_stream();
  const auto row = [&](const std::string& system, int restart, int selected,
                       const SignalMetrics& m, nlohmann::json extra) {
    nlohmann::json j = {{"scene_id", t.id()},
                        {"system", system},
                        {"restart", restart},
                        {"attended_stream", att},
                        {"selected_stream", selected},
                        {"selection_correct", selected == att},
                        {"signal_metrics", to_json(m)}};
    if (!extra.is_null()) j["details"] = std::move(extra);
    out.push_back(std::move(j));
  };

  row("mixture", 0, -1, mixture_metrics(t), nullptr);
  if (baselines) {
    const int frames = t.z.frames();
    const auto recon = [&](const std::string& name, const ReconstructionDecoder& dec,
                           const Mat& c0, const Mat& c1) {
      const auto s = select_by_reconstruction(dec, t.z, c0, c1);
      row(name, 0, s.choice, stream_metrics(t, s.choice), {{"corr", {s.corr_a, s.corr_b}}});
    };
    recon("envelope_reconstruction", baselines->envelope,
          envelope_features(t.streams.stream(0), cfg, frames),
          envelope_features(t.streams.stream(1), cfg, frames));
    recon("mel_reconstruction", baselines->mel,
          mel_stream_features(t.streams.stream(0), cfg, frames),
          mel_stream_features(t.streams.stream(1), cfg, frames));
  }
  for (std::size_t r = 0; r < models.size(); ++r) {
    const Intention it = predict_intention(models[r], clusters, t.z);
    const StreamChoice c = select_stream(t.streams, it.centroid, t.stream_embeddings());
    row("centroid_selection", static_cast<int>(r), c.index, stream_metrics(t, c.index),
        {{"predicted_label", it.label},
         {"true_label", t.attended_label()},
         {"label_correct", it.label == t.attended_label()}});
  }
  row("oracle", 0, att, stream_metrics(t, att), nullptr);
  return out;
}

// ---------------------------------------------------------------------------
// Task battery

enum class AttentionMode { Random, Decoded, Oracle };

inline const char* to_string(AttentionMode m) {
  return m == AttentionMode::Random ? "random" : m == AttentionMode::Decoded ? "decoded" : "oracle";
}
inline AttentionMode attention_mode_from_string(std::string_view s) {
  if (s == "random") return AttentionMode::Random;
  if (s == "decoded") return AttentionMode::Decoded;
  if (s == "oracle") return AttentionMode::Oracle;
  throw InvalidArgument("unknown attention mode '" + std::string(s) + "'");
}

struct AttentionChoice {
  int label = 0;
  SpeakerEmbedding centroid;
};

/// Per-scene seed shared by every system, so all systems see the same
/// questions and the same random draw.
inline std::uint64_t scene_eval_seed(const EvalConfig& e, const std::string& scene_id) {
  return mix_seed(e.seed, stable_hash(scene_id));
}

inline AttentionChoice choose_attention(AttentionMode mode, const Trial& t,
                                        const ClusterModel& clusters,
                                        const AttentionDecoderModel* model, std::uint64_t seed) {
  switch (mode) {
    case AttentionMode::Oracle:
      return {t.attended_label(), centroid_of(clusters, t.attended_label())};
    case AttentionMode::Random: {
      Rng rng(mix_seed(seed, 0x9a));
      const int s = std::bernoulli_distribution(0.5)(rng) ? 1 : 0;
      return {t.stream_label(s), centroid_of(clusters, t.stream_label(s))};
    }
    case AttentionMode::Decoded: {
      require(model != nullptr, "decoded attention needs a trained model");
      const Intention it = predict_intention(*model, clusters, t.z);
      return {it.label, it.centroid};
    }
  }
  throw InvalidArgument("choose_attention: bad mode");
}

struct TaskAnswer {
  TaskQuery query;
  ModelOutput output;
  Talker target_talker = Talker::A;
  std::map<std::string, double> metrics;
  double closeness_target = 0.0;
  double closeness_other = 0.0;
  bool closer = false;
};

/// Metric used for the closer-to-target comparison, and its direction.
inline std::pair<std::string, bool> closeness_metric(TaskKind task) {
  switch (task) {
    case TaskKind::Description: return {"description_mean", false};
    case TaskKind::Transcription: return {"wer_pct", true};
    case TaskKind::Summarization:
    case TaskKind::FreeQa: return {"rouge_l", false};
  }
  return {"", false};
}

/// Reference strings of `who` for a query.
inline std::vector<std::string> references_for(const Trial& t, TaskKind task, Talker who,
                                               int qa_index) {
  const int w = static_cast<int>(who);
  switch (task) {
    case TaskKind::Description: return {describe(t.scene.attrs(who))};
    case TaskKind::Transcription: return {t.transcript_text(who)};
    case TaskKind::Summarization: return t.scripts[w].summaries;
    case TaskKind::FreeQa:
      return {t.scripts[w].qa.at(static_cast<std::size_t>(qa_index)).answer};
  }
  return {};
}

inline std::map<std::string, double> score_answer(const std::string& answer, TaskKind task,
                                                  const std::vector<std::string>& refs,
                                                  const SpeakerAttributes& truth,
                                                  const std::vector<std::string>& prefixes) {
  std::map<std::string, double> m;
  if (task == TaskKind::Description) {
    const DescriptionScore d = description_accuracy(answer, truth);
    m["gender"] = d.gender ? 100.0 : 0.0;
    m["pitch"] = d.pitch ? 100.0 : 0.0;
    m["tempo"] = d.tempo ? 100.0 : 0.0;
    m["description_mean"] = 100.0 * d.mean();
    m["parsed"] = d.parsed ? 100.0 : 0.0;
    return m;
  }
  const Tokens hyp = normalize_text(answer, prefixes);
  std::vector<Tokens> ref_tokens;
  for (const auto& r : refs) ref_tokens.push_back(normalize_text(r, prefixes));
  if (task == TaskKind::Transcription) {
    m["wer_pct"] = wer(hyp, ref_tokens.front());
    m["bleu"] = bleu(hyp, ref_tokens.front());
  } else {
    m["rouge_l"] = rouge_l(hyp, ref_tokens);
    m["meteor"] = meteor_lite(hyp, ref_tokens);
  }
  return m;
}

inline std::string stream_content(const Trial& t, int i, const BackendConfig& b) {
  if (b.stream_rendering == "audio_ref")
    return "<audio " + t.id() + " stream " + std::to_string(i + 1) + ">";
  return t.transcript_text(t.streams.source_of(i));
}

/// Queries for one scene, one per (task, target), identical across systems.
inline std::vector<TaskQuery> scene_queries(const Trial& t, const EvalConfig& e) {
  std::vector<TaskQuery> qs;
  const std::uint64_t base = scene_eval_seed(e, t.id());
  for (const auto& name : e.tasks) {
    const TaskKind task = task_from_string(name);
    for (Target target : kAllTargets) {
      Rng rng(mix_seed(base, 0x100 + 2 * static_cast<std::uint64_t>(task) +
                                 static_cast<std::uint64_t>(target)));
      TaskQuery q;
      q.task = task;
      q.target = target;
      const Talker who = target == Target::Foreground ? t.attended() : other(t.attended());
      if (task == TaskKind::FreeQa) {
        const auto& qa = t.scripts[static_cast<int>(who)].qa;
        q.qa_index =
            static_cast<int>(std::uniform_int_distribution<std::size_t>(0, qa.size() - 1)(rng));
        q.question_text = qa[static_cast<std::size_t>(q.qa_index)].question;
      } else {
        const auto& pool = question_pool(task, target);
        q.question_text = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      }
      q.references = references_for(t, task, who, q.qa_index);
      qs.push_back(std::move(q));
    }
  }
  return qs;
}

struct TrialRecord {
  std::string scene_id;
  std::string system;
  int restart = 0;
  int true_attended = 0;
  std::array<int, 2> true_streams{};  // labels of stream 1 and stream 2
  int predicted_label = -1;
  bool label_correct = false;
  int attended_stream = 0;
  int selected_stream = -1;
  bool selection_correct = false;
  SignalMetrics signal;
  std::vector<TaskAnswer> answers;
  TrialSeeds seeds;
  std::uint64_t eval_seed = 0;
  bool failed = false;
  std::string error;
  std::string timestamp;
};

inline nlohmann::json to_json(const TaskAnswer& a) {
  nlohmann::json cot = nullptr;
  if (a.output.cot) cot = {{"attention", a.output.cot->attention},
                           {"spk1", a.output.cot->spk1},
                           {"spk2", a.output.cot->spk2}};
  return {{"task", to_string(a.query.task)},
          {"target", to_string(a.query.target)},
          {"question", a.query.question_text},
          {"qa_index", a.query.qa_index},
          {"references", a.query.references},
          {"raw_text", a.output.raw_text},
          {"answer", a.output.answer_text},
          {"cot", cot},
          {"parse_error", a.output.parse_error},
          {"label_unresolved", a.output.label_unresolved},
          {"answered_stream", a.output.answered_stream},
          {"target_talker", to_string(a.target_talker)},
          {"metrics", a.metrics},
          {"closeness", {{"target", a.closeness_target},
                         {"other", a.closeness_other},
                         {"closer", a.closer}}}};
}

inline nlohmann::json to_json(const TrialRecord& r) {
  nlohmann::json answers = nlohmann::json::array();
  for (const auto& a : r.answers) answers.push_back(to_json(a));
  return {{"scene_id", r.scene_id},
          {"system", r.system},
          {"restart", r.restart},
          {"true_labels", {{"attended", r.true_attended},
                           {"spk1", r.true_streams[0]},
                           {"spk2", r.true_streams[1]}}},
          {"predicted_label", r.predicted_label},
          {"label_correct", r.label_correct},
          {"attended_stream", r.attended_stream},
          {"selected_stream", r.selected_stream},
          {"selection_correct", r.selection_correct},
          {"signal_metrics", to_json(r.signal)},
          {"answers", answers},
          {"seeds", {{"scene", r.seeds.scene},
                     {"neural", r.seeds.neural},
                     {"order", r.seeds.order},
                     {"eval", r.eval_seed}}},
          {"failed", r.failed},
          {"error", r.error},
          {"timestamp", r.timestamp}};
}

/// Backend call: the mock answers from the trial's ground truth, the HTTP
/// backend sends every prompt of the trial with bounded concurrency.
using Responder = std::function<std::vector<ModelOutput>(const Trial&, std::span<const PromptBundle>)>;

inline Responder mock_responder() {
  return [](const Trial& t, std::span<const PromptBundle> bundles) {
    const OracleSceneRecord rec = t.oracle_record();
    std::vector<ModelOutput> out;
    for (const auto& b : bundles) out.push_back(mock_respond(b, rec));
    return out;
  };
}

inline Responder http_responder(EndpointConfig cfg) {
  return [cfg = std::move(cfg)](const Trial&, std::span<const PromptBundle> bundles) {
    std::vector<ModelOutput> out;
    for (auto& r : respond_all(bundles, cfg)) {
      if (!r.output) std::rethrow_exception(r.exception);
      out.push_back(std::move(*r.output));
    }
    return out;
  };
}

inline Responder make_responder(const BackendConfig& b) {
  return b.kind == "http" ? http_responder(b.endpoint) : mock_responder();
}

/// Full pipeline for one scene under one attention system.
inline TrialRecord evaluate_trial(const Trial& t, AttentionMode mode, int restart,
                                  const AttentionDecoderModel* model, const ClusterModel& clusters,
                                  const ExperimentConfig& cfg, const Responder& respond) {
  TrialRecord r;
  r.scene_id = t.id();
  r.system = to_string(mode);
  r.restart = restart;
  r.seeds = t.seeds;
  r.eval_seed = scene_eval_seed(cfg.eval, t.id());
  r.timestamp = utc_timestamp();
  try {
    r.true_attended = t.attended_label();
    r.true_streams = {t.stream_label(0), t.stream_label(1)};
    r.attended_stream = t.attended_stream();

    const AttentionChoice att = choose_attention(mode, t, clusters, model, r.eval_seed);
    r.predicted_label = att.label;
    r.label_correct = att.label == r.true_attended;
    const StreamChoice choice = select_stream(t.streams, att.centroid, t.stream_embeddings());
    r.selected_stream = choice.index;
    r.selection_correct = choice.index == r.attended_stream;
    r.signal = stream_metrics(t, choice.index);

    const std::array<StreamSlot, 2> slots = {
        StreamSlot{stream_content(t, 0, cfg.backend), t.stream_label(0)},
        StreamSlot{stream_content(t, 1, cfg.backend), t.stream_label(1)}};
    const auto queries = scene_queries(t, cfg.eval);
    std::vector<PromptBundle> bundles;
    for (const auto& q : queries)
      bundles.push_back(build_prompt(q, slots, att.label, att.centroid, clusters.k()));
    const std::vector<ModelOutput> outputs = respond(t, bundles);
    require(outputs.size() == bundles.size(), "backend returned the wrong number of answers");

    for (std::size_t i = 0; i < queries.size(); ++i) {
      TaskAnswer a;
      a.query = queries[i];
      a.output = outputs[i];
      a.target_talker =
          a.query.target == Target::Foreground ? t.attended() : other(t.attended());
      const Talker o = other(a.target_talker);
      a.metrics = score_answer(a.output.answer_text, a.query.task, a.query.references,
                               t.scene.attrs(a.target_talker), cfg.eval.boilerplate_prefixes);
      const auto other_metrics = score_answer(
          a.output.answer_text, a.query.task,
          references_for(t, a.query.task, o, a.query.qa_index), t.scene.attrs(o),
          cfg.eval.boilerplate_prefixes);
      const auto [name, lower] = closeness_metric(a.query.task);
      a.closeness_target = a.metrics.at(name);
      a.closeness_other = other_metrics.at(name);
      a.closer = lower ? a.closeness_target < a.closeness_other
                       : a.closeness_target > a.closeness_other;
      r.answers.push_back(std::move(a));
    }
  } catch (const std::exception& e) {
    r.failed = true;
    r.error = e.what();
    r.answers.clear();
  }
  return r;
}

/// Runs every attention system over scenes 0..n-1. A scene that cannot be
/// produced yields one failed record per system.
inline void evaluate_all(int n, const std::function<Trial(int)>& trial_at,
                         const std::function<std::string(int)>& id_at,
                         std::span<const AttentionMode> modes,
                         std::span<const AttentionDecoderModel> models,
                         const ClusterModel& clusters, const ExperimentConfig& cfg,
                         const Responder& respond,
                         const std::function<void(const TrialRecord&)>& emit) {
  for (int i = 0; i < n; ++i) {
    std::optional<Trial> t;
    std::string gen_error;
    try {
      t = trial_at(i);
    } catch (const std::exception& e) {
      gen_error = e.what();
    }
    for (AttentionMode mode : modes) {
      const int runs = mode == AttentionMode::Decoded ? static_cast<int>(models.size()) : 1;
      if (mode == AttentionMode::Decoded && runs == 0)
        throw InvalidArgument("decoded attention requested without a trained model");
      for (int r = 0; r < runs; ++r) {
        if (!t) {
          TrialRecord fail;
          fail.scene_id = id_at(i);
          fail.system = to_string(mode);
          fail.restart = r;
          fail.failed = true;
          fail.error = gen_error;
          fail.timestamp = utc_timestamp();
          emit(fail);
          continue;
        }
        const AttentionDecoderModel* m =
            mode == AttentionMode::Decoded ? &models[static_cast<std::size_t>(r)] : nullptr;
        emit(evaluate_trial(*t, mode, r, m, clusters, cfg, respond));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Report aggregation

struct ReportRow {
  std::string system, task, target, metric;
  double mean = 0.0;
  std::size_t n_trials = 0;
};

/// Collects metric values keyed by (system, task, target, metric) and reports
/// their means. Values are sorted before summing so the mean does not depend
/// on trial order.
class ReportTable {
 public:
  void add(const std::string& system, const std::string& task, const std::string& target,
           const std::string& metric, double v) {
    cells_[{system, task, target, metric}].push_back(v);
  }

  /// Adds one trial or decode record.
  void add_record(const nlohmann::json& rec) {
    if (rec.value("failed", false)) return;
    const std::string system = rec.at("system").get<std::string>();
    const std::string aad = "aad";
    const std::string fg = "foreground";
    if (rec.contains("label_correct"))
      add(system, aad, fg, "label_accuracy_pct", rec.at("label_correct").get<bool>() ? 100.0 : 0.0);
    else if (rec.contains("details") && rec.at("details").contains("label_correct"))
      add(system, aad, fg, "label_accuracy_pct",
          rec.at("details").at("label_correct").get<bool>() ? 100.0 : 0.0);
    if (rec.at("selected_stream").get<int>() >= 0)
      add(system, aad, fg, "selection_accuracy_pct",
          rec.at("selection_correct").get<bool>() ? 100.0 : 0.0);
    for (const auto& [k, v] : rec.at("signal_metrics").items()) add(system, aad, fg, k, v.get<double>());
    if (!rec.contains("answers")) return;
    for (const auto& a : rec.at("answers")) {
      const std::string task = a.at("task").get<std::string>();
      const std::string target = a.at("target").get<std::string>();
      for (const auto& [k, v] : a.at("metrics").items()) add(system, task, target, k, v.get<double>());
      add(system, task, target, "closer_pct",
          a.at("closeness").at("closer").get<bool>() ? 100.0 : 0.0);
    }
  }

  std::vector<ReportRow> rows() const {
    std::vector<ReportRow> out;
    for (const auto& [key, values] : cells_) {
      std::vector<double> v = values;
      std::sort(v.begin(), v.end());
      double sum = 0.0;
      for (double x : v) sum += x;
      out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key),
                     sum / static_cast<double>(v.size()), v.size()});
    }
    return out;
  }

  std::optional<ReportRow> find(const std::string& system, const std::string& task,
                                const std::string& target, const std::string& metric) const {
    for (const auto& r : rows())
      if (r.system == system && r.task == task && r.target == target && r.metric == metric) return r;
    return std::nullopt;
  }

 private:
  std::map<std::tuple<std::string, std::string, std::string, std::string>, std::vector<double>>
      cells_;
};

inline void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << "system,task,target,metric,mean,n_trials\n";
  for (const auto& r : rows) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", r.mean);
    os << r.system << ',' << r.task << ',' << r.target << ',' << r.metric << ',' << buf << ','
       << r.n_trials << '\n';
  }
}

inline void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_report_csv(os, rows);
}

// ---------------------------------------------------------------------------
// Whole experiment

struct ExperimentOptions {
  std::filesystem::path out_dir;  // empty: keep results in memory only
  std::vector<AttentionDecoderModel> models;  // skip training when non-empty
  EpochCallback on_epoch;
  std::function<void(const std::string&)> log;
};

struct ExperimentResult {
  std::vector<nlohmann::json> records;
  std::vector<ReportRow> report;
  std::vector<TrainReport> train_reports;
  std::size_t failed_trials = 0;
};

/// gen scene -> embed -> encode -> separate -> attention -> select -> prompt
/// -> respond -> score, for every test scene and every configured attention
/// system.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, ExperimentOptions opt = {}) {
  validate(cfg);
  const auto log = [&](const std::string& s) {
    if (opt.log) opt.log(s);
  };
  std::vector<AttentionMode> modes;
  for (const auto& m : cfg.eval.attention_modes) modes.push_back(attention_mode_from_string(m));
  const bool need_models =
      std::find(modes.begin(), modes.end(), AttentionMode::Decoded) != modes.end();

  log("fitting speaker clusters");
  TrialGenerator gen(cfg, build_cluster_model(cfg.clusters));
  ExperimentResult res;

  if (need_models && opt.models.empty()) {
    log("generating " + std::to_string(cfg.scene.n_train) + " training scenes");
    const TrainingSet ts = build_training_set(gen, {true, false});
    log("training " + std::to_string(cfg.predictor.n_restarts) + " predictor(s)");
    for (auto& tp : train_predictors(ts.labeled, cfg, opt.on_epoch)) {
      res.train_reports.push_back(tp.report);
      opt.models.push_back(std::move(tp.model));
    }
  }

  std::unique_ptr<JsonlSink> sink;
  if (!opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    std::ofstream(opt.out_dir / "config.json") << nlohmann::json(cfg).dump(2) << '\n';
    sink = std::make_unique<JsonlSink>(opt.out_dir / "trials.jsonl");
  }

  const Responder respond = make_responder(cfg.backend);
  ReportTable table;
  const auto emit = [&](const TrialRecord& r) {
    nlohmann::json j = to_json(r);
    if (r.failed) ++res.failed_trials;
    table.add_record(j);
    if (sink) sink->write(j);
    res.records.push_back(std::move(j));
  };

  const auto trial_at = [&](int i) { return gen.make(Split::Test, i); };
  const auto id_at = [](int i) { return scene_id(Split::Test, i); };
  evaluate_all(cfg.scene.n_test, trial_at, id_at, modes, opt.models, gen.clusters(), cfg, respond,
               emit);

  res.report = table.rows();
  if (!opt.out_dir.empty()) write_report_csv(opt.out_dir / "report.csv", res.report);
  return res;
}

}  // namespace attnscene
