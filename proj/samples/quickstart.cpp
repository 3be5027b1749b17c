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

// Runs a reduced experiment in memory and prints the foreground scores of
// each attention system.

#include <cstdio>
#include <iostream>

#include "attnscene.hpp"

int main(int argc, char** argv) {
  using namespace attnscene;
  ExperimentConfig cfg = argc > 1 ? load_config(argv[1]) : ExperimentConfig{};
  if (argc <= 1) {
    cfg.scene.n_train = 100;
    cfg.scene.n_test = 40;
    cfg.predictor.epochs = 10;
    cfg.predictor.lr = 1e-3;
  }
  ExperimentOptions opt;
  opt.log = [](const std::string& s) { std::fprintf(stderr, "%s\n", s.c_str()); };
  opt.on_epoch = [](int restart, int epoch, double loss) {
    std::fprintf(stderr, "  restart %d epoch %d loss %.4f\n", restart, epoch + 1, loss);
  };
  const ExperimentResult res = run_experiment(cfg, opt);

  std::vector<ReportRow> fg;
  for (const auto& r : res.report)
    if (r.target == "foreground") fg.push_back(r);
  write_report_csv(std::cout, fg);
  return res.failed_trials == 0 ? 0 : 1;
}
