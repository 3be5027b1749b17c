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

// Acceptance suite: one line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "attnscene.hpp"
#include "oracles.hpp"

using namespace attnscene;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// 1 -------------------------------------------------------------------------
Outcome gradient_check() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed)
    worst = std::max(worst, oracle::bilstm_gradient_check(seed).max_rel_error);
  return {worst < 1e-4, fmt("6 seeds, max relative error %.3g", worst)};
}

// 2 -------------------------------------------------------------------------
Outcome clustering_oracle() {
  const double radius = 1.0, sep = 12.0;
  const auto blobs = oracle::make_blobs(8, 40, 16, radius, sep, 21);
  const KMeansFit fit = kmeans_fit_detailed(blobs.points, 8, 5, 100);
  const double purity = oracle::purity(fit.assignments, blobs.truth, 8);
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal(0.0, sep);
  int agree = 0;
  for (int i = 0; i < 1000; ++i) {
    Vec v(16);
    for (int j = 0; j < 16; ++j) v(j) = normal(rng);
    agree += assign_label(fit.model, SpeakerEmbedding{v}) ==
             oracle::brute_nearest(fit.model.centroids(), v);
  }
  return {purity == 1.0 && agree == 1000,
          fmt("purity %.3f, brute-force agreement %.0f/1000", purity, agree)};
}

// 3 -------------------------------------------------------------------------
Outcome metric_oracles() {
  std::mt19937_64 rng(3);
  int exact = 0;
  for (int i = 0; i < 200; ++i) {
    const auto h = oracle::random_tokens(rng, 8, 5);
    auto r = oracle::random_tokens(rng, 8, 5);
    if (r.empty()) r.push_back("w0");
    exact += edit_distance(h, r) == oracle::edit_distance_recursive(h, r) &&
             lcs_length(h, r) == oracle::lcs_recursive(h, r);
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  double worst_scale = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> e(512), r(512);
    for (std::size_t k = 0; k < e.size(); ++k) {
      r[k] = normal(rng);
      e[k] = r[k] + 0.5 * normal(rng);
    }
    const AudioSignal est(e, 16000), ref(r, 16000);
    const double base = si_sdr(est, ref);
    for (double beta : {0.1, 3.0}) {
      std::vector<double> s = e;
      for (double& v : s) v *= beta;
      worst_scale = std::max(worst_scale, std::abs(si_sdr(AudioSignal(s, 16000), ref) - base));
    }
  }

  double worst_snr = 0.0;
  for (double target_db : {-10.0, 0.0, 3.0, 20.0}) {
    std::vector<double> r(1000), n(1000);
    for (std::size_t k = 0; k < r.size(); ++k) {
      r[k] = normal(rng);
      n[k] = normal(rng);
    }
    const double rn = std::inner_product(r.begin(), r.end(), n.begin(), 0.0);
    const double rr = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
    for (std::size_t k = 0; k < n.size(); ++k) n[k] -= rn / rr * r[k];
    const double nn = std::inner_product(n.begin(), n.end(), n.begin(), 0.0);
    const double scale = std::sqrt(rr / nn * std::pow(10.0, -target_db / 10.0));
    std::vector<double> e(r.size());
    for (std::size_t k = 0; k < e.size(); ++k) e[k] = r[k] + scale * n[k];
    const AudioSignal est(e, 16000), ref(r, 16000);
    worst_snr = std::max({worst_snr, std::abs(snr(est, ref) - target_db),
                          std::abs(si_sdr(est, ref) - target_db)});
  }
  return {exact == 200 && worst_scale <= 1e-9 && worst_snr <= 1e-6,
          fmt("%.0f/200 token pairs exact, SI-SDR scale drift %.2g dB, SNR error %.2g dB", exact,
              worst_scale, worst_snr)};
}

// 4 -------------------------------------------------------------------------
Outcome prompt_bytes() {
  int ok = 0;
  for (int a = 0; a < 8; ++a)
    for (int s1 = 0; s1 < 8; ++s1)
      for (int s2 = 0; s2 < 8; ++s2) {
        char want[96];
        std::snprintf(want, sizeof want, "Attention:%d;\nSpk1:%d; Spk2:%d;", a, s1, s2);
        const std::string got = build_cot_prefix(a, s1, s2, 8);
        const auto parsed = parse_output(got + "\nx", 8);
        ok += got == want && parsed.cot && *parsed.cot == CotLabels{a, s1, s2};
      }
  return {ok == 512, fmt("%.0f/512 triples byte-exact and round-tripped", ok)};
}

// 5 -------------------------------------------------------------------------
Outcome oracle_path(const TrialGenerator& gen, const ExperimentConfig& cfg) {
  ReportTable table;
  const Responder respond = mock_responder();
  for (int i = 0; i < 50; ++i)
    table.add_record(to_json(evaluate_trial(gen.make(Split::Test, i), AttentionMode::Oracle, 0,
                                            nullptr, gen.clusters(), cfg, respond)));
  const auto get = [&](const char* task, const char* metric) {
    const auto r = table.find("oracle", task, "foreground", metric);
    return r && r->n_trials == 50 ? r->mean : std::nan("");
  };
  const double w = get("transcription", "wer_pct");
  const double d = get("description", "description_mean");
  const double s = get("summarization", "rouge_l");
  return {w == 0.0 && d == 100.0 && s == 100.0,
          fmt("50 trials: WER %.2f, description %.2f%%, summary ROUGE-L %.2f", w, d, s)};
}

struct Shared {
  std::vector<AttentionDecoderModel> models;
  std::vector<SelectionTrial> sweep_trials;  // 200 test scenes
  ReportTable table;                         // first 100 test scenes, all systems
};

// 6 -------------------------------------------------------------------------
Outcome decoding_efficacy(const Shared& sh) {
  const auto sel = sh.table.find("decoded", "aad", "foreground", "selection_accuracy_pct");
  const auto lab = sh.table.find("decoded", "aad", "foreground", "label_accuracy_pct");
  const auto rnd = sh.table.find("random", "aad", "foreground", "selection_accuracy_pct");
  if (!sel || !lab || !rnd) return {false, "missing report rows"};
  const bool pass = sel->mean >= 85.0 && sel->mean >= lab->mean && sel->mean >= rnd->mean &&
                    std::abs(rnd->mean - 50.0) <= 5.0;
  return {pass, fmt("100 test scenes: selection %.1f%%, label %.1f%%, random %.1f%%", sel->mean,
                    lab->mean, rnd->mean)};
}

// 7 -------------------------------------------------------------------------
Outcome window_trend(const Shared& sh, const ClusterModel& clusters) {
  const std::array<double, 5> windows = {0.5, 1.0, 2.0, 4.0, 8.0};
  const auto rows = window_sweep(sh.models, clusters, sh.sweep_trials, windows);
  bool pass = rows.front().n_trials >= 200;
  std::string detail = std::to_string(rows.front().n_trials) + " trials:";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail += fmt(" %.1fs=%.1f", rows[i].window_s, rows[i].accuracy_pct);
    for (std::size_t j = 0; j < i; ++j)
      pass = pass && rows[i].accuracy_pct >= rows[j].accuracy_pct - 2.0;
  }
  return {pass, detail};
}

// 8 -------------------------------------------------------------------------
Outcome ordering(const Shared& sh) {
  struct Item {
    const char* task;
    const char* metric;
    bool lower_is_better;
  };
  const std::array<Item, 4> items = {{{"description", "description_mean", false},
                                      {"transcription", "wer_pct", true},
                                      {"summarization", "rouge_l", false},
                                      {"free_qa", "rouge_l", false}}};
  bool pass = true;
  std::string detail;
  for (const auto& it : items) {
    std::array<double, 3> v{};
    const std::array<const char*, 3> systems = {"random", "decoded", "oracle"};
    for (std::size_t s = 0; s < 3; ++s) {
      const auto r = sh.table.find(systems[s], it.task, "foreground", it.metric);
      if (!r) return {false, std::string("missing ") + it.task};
      v[s] = it.lower_is_better ? -r->mean : r->mean;
    }
    pass = pass && v[0] <= v[1] + 1.0 && v[1] <= v[2] + 1.0;
    const double sign = it.lower_is_better ? -1.0 : 1.0;
    detail += std::string(detail.empty() ? "" : "; ") + it.task + " " +
              fmt("%.1f/%.1f/%.1f", sign * v[0], sign * v[1], sign * v[2]);
  }
  return {pass, "random/decoded/oracle " + detail};
}

// 9 -------------------------------------------------------------------------
Outcome reproducibility() {
  ExperimentConfig c;
  c.scene.duration_s = 2.0;
  c.scene.n_train = 10;
  c.scene.n_test = 4;
  c.clusters.corpus_size = 200;
  c.predictor.epochs = 2;
  c.predictor.hidden = 8;
  c.predictor.fc_hidden = 16;
  c.predictor.n_restarts = 2;
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  bool same = a.records.size() == b.records.size() && !a.records.empty();
  for (std::size_t i = 0; same && i < a.records.size(); ++i)
    same = without_timestamp(a.records[i]).dump() == without_timestamp(b.records[i]).dump();
  return {same, fmt("%.0f records compared", static_cast<double>(a.records.size()))};
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  int failures = 0;
  const auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    const auto t0 = clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(clock::now() - t0).count();
    failures += !o.pass;
    std::printf("[%s] criterion %d: %s (%s; %.1f s)\n", o.pass ? "PASS" : "FAIL", id, name,
                o.detail.c_str(), sec);
    std::fflush(stdout);
  };

  report(1, "BiLSTM gradient check", gradient_check);
  report(2, "clustering oracle", clustering_oracle);
  report(3, "metric oracles", metric_oracles);
  report(4, "CoT prefix byte-exactness", prompt_bytes);

  const ExperimentConfig cfg;  // defaults: 300 train / 100 test, 8 s scenes
  const TrialGenerator gen(cfg, build_cluster_model(cfg.clusters));
  report(5, "oracle end-to-end path", [&] { return oracle_path(gen, cfg); });

  Shared sh;
  const auto t0 = clock::now();
  try {
    const TrainingSet ts = build_training_set(gen, {true, false});
    for (auto& tp : train_predictors(ts.labeled, cfg, {})) sh.models.push_back(std::move(tp.model));
    const Responder respond = mock_responder();
    for (int i = 0; i < 200; ++i) {
      const Trial t = gen.make(Split::Test, i);
      sh.sweep_trials.push_back(t.selection_trial());
      if (i >= cfg.scene.n_test) continue;
      for (AttentionMode m : {AttentionMode::Random, AttentionMode::Oracle})
        sh.table.add_record(to_json(evaluate_trial(t, m, 0, nullptr, gen.clusters(), cfg, respond)));
      for (std::size_t r = 0; r < sh.models.size(); ++r)
        sh.table.add_record(to_json(evaluate_trial(t, AttentionMode::Decoded, static_cast<int>(r),
                                                   &sh.models[r], gen.clusters(), cfg, respond)));
    }
  } catch (const std::exception& e) {
    std::printf("shared training/evaluation failed: %s\n", e.what());
  }
  std::printf("(shared training and evaluation of 200 test scenes: %.1f s)\n",
              std::chrono::duration<double>(clock::now() - t0).count());

  report(6, "decoding efficacy", [&] { return decoding_efficacy(sh); });
  report(7, "window-size trend", [&] { return window_trend(sh, gen.clusters()); });
  report(8, "random <= decoded <= oracle ordering", [&] { return ordering(sh); });
  report(9, "reproducibility", reproducibility);

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
