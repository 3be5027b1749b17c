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

// Command-line front end. Every subcommand works inside one workspace
// directory created by `gen`.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "attnscene.hpp"

namespace fs = std::filesystem;
using namespace attnscene;

namespace {

void log(const std::string& s) { std::fprintf(stderr, "[attnscene] %s\n", s.c_str()); }

struct Workspace {
  ManifestPaths paths;
  ExperimentConfig cfg;
  std::vector<nlohmann::json> manifest;
  std::optional<TrialGenerator> gen;

  explicit Workspace(const fs::path& root) : paths{root} {
    cfg = load_config(paths.config());
    manifest = read_manifest(paths.manifest());
    gen.emplace(cfg, load_cluster_model(paths.clusters()));
  }

  std::vector<const nlohmann::json*> split(Split s) const {
    std::vector<const nlohmann::json*> out;
    for (const auto& j : manifest)
      if (j.at("split").get<std::string>() == to_string(s)) out.push_back(&j);
    return out;
  }

  fs::path models_dir() const { return paths.root / "models"; }

  std::vector<AttentionDecoderModel> load_models() const {
    std::vector<AttentionDecoderModel> out;
    for (int r = 0;; ++r) {
      const fs::path p = models_dir() / ("predictor_r" + std::to_string(r) + ".ckpt");
      if (!fs::exists(p)) break;
      out.push_back(load_checkpoint(p));
    }
    return out;
  }
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

int cmd_gen(const std::string& config_path, const fs::path& work, std::optional<int> n_train,
            std::optional<int> n_test, std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
  if (n_train) cfg.scene.n_train = *n_train;
  if (n_test) cfg.scene.n_test = *n_test;
  if (seed) cfg.scene.seed = *seed;
  validate(cfg);
  const ManifestPaths ws{work};
  fs::create_directories(work);
  std::ofstream(ws.config()) << nlohmann::json(cfg).dump(2) << '\n';

  log("fitting " + std::to_string(cfg.clusters.k) + " speaker clusters on " +
      std::to_string(cfg.clusters.corpus_size) + " synthetic speakers");
  const ClusterModel clusters = build_cluster_model(cfg.clusters);
  save_cluster_model(ws.clusters(), clusters);
  const TrialGenerator gen(cfg, clusters);

  JsonlSink manifest(ws.manifest());
  int failed = 0;
  for (Split split : {Split::Train, Split::Test}) {
    const int n = split == Split::Train ? cfg.scene.n_train : cfg.scene.n_test;
    for (int i = 0; i < n; ++i) {
      try {
        manifest.write(write_trial_files(ws, gen.make(split, i), cfg.scene.write_wav));
      } catch (const std::exception& e) {
        ++failed;
        log(scene_id(split, i) + " failed: " + e.what());
      }
    }
    log("wrote " + std::to_string(n) + " " + to_string(split) + " scenes");
  }
  return failed == 0 ? 0 : 1;
}

int cmd_train(const fs::path& work, std::optional<int> epochs, std::optional<double> lr,
              std::optional<std::uint64_t> seed, std::optional<int> restarts) {
  Workspace ws(work);
  ExperimentConfig cfg = ws.cfg;
  if (epochs) cfg.predictor.epochs = *epochs;
  if (lr) cfg.predictor.lr = *lr;
  if (seed) cfg.predictor.seed = *seed;
  if (restarts) cfg.predictor.n_restarts = *restarts;
  validate(cfg);

  std::vector<LabeledRecording> data;
  for (const auto* j : ws.split(Split::Train)) {
    const std::string id = j->at("scene_id").get<std::string>();
    const Talker att = talker_from_string(j->at("attended").get<std::string>());
    const int label = j->at("labels").at(att == Talker::A ? "a" : "b").get<int>();
    data.push_back({read_iiz(ws.paths.root / j->at("neural").get<std::string>(), id), label});
  }
  log("training on " + std::to_string(data.size()) + " scenes");
  const auto trained = train_predictors(data, cfg, [](int r, int e, double loss) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "restart %d epoch %d loss %.5f", r, e, loss);
    log(buf);
  });

  fs::create_directories(ws.models_dir());
  nlohmann::json reports = nlohmann::json::array();
  for (std::size_t r = 0; r < trained.size(); ++r) {
    save_checkpoint(ws.models_dir() / ("predictor_r" + std::to_string(r) + ".ckpt"),
                    trained[r].model);
    reports.push_back(train_report_json(trained[r].report, static_cast<int>(r)));
  }
  for (std::size_t r = trained.size();; ++r) {
    const fs::path stale = ws.models_dir() / ("predictor_r" + std::to_string(r) + ".ckpt");
    if (!fs::remove(stale)) break;
  }
  std::ofstream(ws.paths.root / "train_report.json")
      << nlohmann::json{{"predictor", cfg.predictor}, {"restarts", reports}}.dump(2) << '\n';
  return 0;
}

int cmd_decode(const fs::path& work) {
  Workspace ws(work);
  const auto models = ws.load_models();
  if (models.empty()) log("no trained predictor found; centroid selection is skipped");

  log("fitting reconstruction baselines");
  TrainingSet ts;
  for (const auto* j : ws.split(Split::Train))
    add_to_training_set(ts, load_trial(ws.paths, *j, *ws.gen), ws.cfg, {false, true});
  std::optional<ReconstructionBaselines> baselines;
  if (!ts.envelope.empty()) baselines = fit_baselines(ts, ws.cfg);

  JsonlSink sink(ws.paths.root / "decode.jsonl");
  ReportTable table;
  int failed = 0;
  for (const auto* j : ws.split(Split::Test)) {
    try {
      const Trial t = load_trial(ws.paths, *j, *ws.gen);
      for (auto& rec : decode_trial(t, ws.cfg, baselines ? &*baselines : nullptr, models,
                                    ws.gen->clusters())) {
        table.add_record(rec);
        sink.write(rec);
      }
    } catch (const std::exception& e) {
      ++failed;
      sink.write({{"scene_id", j->at("scene_id")}, {"failed", true}, {"error", e.what()}});
    }
  }
  write_report_csv(ws.paths.root / "decode_report.csv", table.rows());
  write_report_csv(std::cout, table.rows());
  return failed == 0 ? 0 : 1;
}

int cmd_eval(const fs::path& work, const std::vector<std::string>& attention,
             const std::string& backend) {
  Workspace ws(work);
  ExperimentConfig cfg = ws.cfg;
  if (!backend.empty()) cfg.backend.kind = backend;
  if (!attention.empty()) cfg.eval.attention_modes = attention;
  validate(cfg);
  std::vector<AttentionMode> modes;
  for (const auto& m : cfg.eval.attention_modes) modes.push_back(attention_mode_from_string(m));
  std::vector<AttentionDecoderModel> models;
  if (std::find(modes.begin(), modes.end(), AttentionMode::Decoded) != modes.end()) {
    models = ws.load_models();
    if (models.empty()) throw std::runtime_error("decoded attention needs `train` first");
  }

  const auto test = ws.split(Split::Test);
  const Responder respond = make_responder(cfg.backend);
  std::map<std::string, std::unique_ptr<JsonlSink>> sinks;
  for (AttentionMode m : modes)
    sinks[to_string(m)] =
        std::make_unique<JsonlSink>(ws.paths.root / (std::string("trials_") + to_string(m) + ".jsonl"));
  ReportTable table;
  int failed = 0;
  evaluate_all(
      static_cast<int>(test.size()),
      [&](int i) { return load_trial(ws.paths, *test[static_cast<std::size_t>(i)], *ws.gen); },
      [&](int i) { return test[static_cast<std::size_t>(i)]->at("scene_id").get<std::string>(); },
      modes, models, ws.gen->clusters(), cfg, respond, [&](const TrialRecord& r) {
        const nlohmann::json j = to_json(r);
        failed += r.failed;
        table.add_record(j);
        sinks.at(r.system)->write(j);
      });
  write_report_csv(std::cout, table.rows());
  if (failed > 0) log(std::to_string(failed) + " trial records failed");
  return failed == 0 ? 0 : 1;
}

int cmd_sweep(const fs::path& work, const std::string& windows, const std::string& offset) {
  Workspace ws(work);
  const auto models = ws.load_models();
  if (models.empty()) throw std::runtime_error("sweep needs `train` first");
  std::vector<SelectionTrial> trials;
  for (const auto* j : ws.split(Split::Test)) trials.push_back(load_trial(ws.paths, *j, *ws.gen).selection_trial());
  const std::vector<double> w = windows.empty() ? ws.cfg.eval.windows_s : parse_list(windows);
  const WindowOffset off = window_offset_from_string(offset.empty() ? ws.cfg.eval.window_offset : offset);
  const auto rows = window_sweep(models, ws.gen->clusters(), trials, w, off);
  std::ofstream os(ws.paths.root / "sweep.csv");
  write_sweep_csv(os, rows);
  write_sweep_csv(std::cout, rows);
  return 0;
}

int cmd_report(const fs::path& work, const fs::path& out) {
  ReportTable table;
  std::vector<fs::path> inputs;
  for (const auto& e : fs::directory_iterator(work)) {
    const std::string name = e.path().filename().string();
    if (name.ends_with(".jsonl") && (name.starts_with("trials") || name == "decode.jsonl"))
      inputs.push_back(e.path());
  }
  std::sort(inputs.begin(), inputs.end());
  if (inputs.empty()) throw std::runtime_error("no trials_*.jsonl or decode.jsonl in " + work.string());
  for (const auto& p : inputs)
    for (const auto& j : read_manifest(p))
      if (j.contains("system")) table.add_record(j);
  const fs::path dest = out.empty() ? work / "report.csv" : out;
  write_report_csv(dest, table.rows());
  write_report_csv(std::cout, table.rows());
  return 0;
}

int cmd_run(const std::string& config_path, const fs::path& out) {
  const ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
  ExperimentOptions opt;
  opt.out_dir = out;
  opt.log = log;
  opt.on_epoch = [](int r, int e, double loss) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "restart %d epoch %d loss %.5f", r, e, loss);
    log(buf);
  };
  const ExperimentResult res = run_experiment(cfg, std::move(opt));
  write_report_csv(std::cout, res.report);
  if (res.failed_trials > 0) log(std::to_string(res.failed_trials) + " trial records failed");
  return res.failed_trials == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-conditioned auditory scene benchmark"};
  app.require_subcommand(1);

  std::string config, work, windows, offset, backend, out;
  std::optional<int> n_train, n_test, epochs, restarts;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> attention;

  auto* gen = app.add_subcommand("gen", "Generate scenes, neural recordings and the manifest");
  gen->add_option("--config", config, "Experiment config (JSON)");
  gen->add_option("--work", work, "Workspace directory")->required();
  gen->add_option("--n-train", n_train, "Training scenes");
  gen->add_option("--n-test", n_test, "Test scenes");
  gen->add_option("--seed", seed, "Scene seed");

  auto* train = app.add_subcommand("train", "Train the attended-speaker predictor");
  train->add_option("--work", work, "Workspace directory")->required();
  train->add_option("--epochs", epochs, "Epochs (default 30)");
  train->add_option("--lr", lr, "Adam learning rate (default 1e-4)");
  train->add_option("--seed", seed, "Initialization seed");
  train->add_option("--n-restarts", restarts, "Independent restarts");

  auto* decode = app.add_subcommand("decode", "Attended-speaker decoding and stream selection");
  decode->add_option("--work", work, "Workspace directory")->required();

  auto* eval = app.add_subcommand("eval", "Run the task battery");
  eval->add_option("--work", work, "Workspace directory")->required();
  eval->add_option("--attention", attention, "decoded, oracle or random (repeatable)")
      ->check(CLI::IsMember({"decoded", "oracle", "random"}));
  eval->add_option("--backend", backend, "mock or http")->check(CLI::IsMember({"mock", "http"}));

  auto* sweep = app.add_subcommand("sweep", "Selection accuracy against window length");
  sweep->add_option("--work", work, "Workspace directory")->required();
  sweep->add_option("--windows", windows, "Comma-separated window lengths in seconds");
  sweep->add_option("--offset", offset, "start, center or end")
      ->check(CLI::IsMember({"start", "center", "end"}));

  auto* report = app.add_subcommand("report", "Aggregate trial records into a CSV table");
  report->add_option("--work", work, "Workspace directory")->required();
  report->add_option("--out", out, "Output CSV (default <work>/report.csv)");

  auto* run = app.add_subcommand("run", "Generate, train and evaluate in one pass");
  run->add_option("--config", config, "Experiment config (JSON)");
  run->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_gen(config, work, n_train, n_test, seed);
    if (*train) return cmd_train(work, epochs, lr, seed, restarts);
    if (*decode) return cmd_decode(work);
    if (*eval) return cmd_eval(work, attention, backend);
    if (*sweep) return cmd_sweep(work, windows, offset);
    if (*report) return cmd_report(work, out);
    if (*run) return cmd_run(config, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
