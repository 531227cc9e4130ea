//
// Copyright 2026 The Geohist Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"
#include "geohist/experiment.h"

namespace {

void AddCommonOptions(CLI::App* cmd, geohist::cli::ExperimentSpec* spec) {
  cmd->set_config("--spec")->description("TOML spec file (flags win)");
  cmd->add_option("--dataset", spec->dataset,
                  "named profile (manhattan|coastal|citywide|uniform|hotspot),"
                  " .pgm image, .csv check-ins, or .toml generator spec");
  cmd->add_option("--side", spec->side, "grid side for synthetic datasets");
  cmd->add_option("--population", spec->population,
                  "synthetic population size");
  cmd->add_option("--algorithm", spec->algorithm,
                  "adaptive|flat|hierarchical|cm-sketch|adaptive-grid|"
                  "non-private");
  cmd->add_option("--eps", spec->run.eps_total, "total privacy budget");
  cmd->add_option("--users", spec->run.users_per_query,
                  "users sampled per sub-query");
  cmd->add_option("--shard-size", spec->run.shard.shard_size,
                  "secure aggregation shard size S_max");
  cmd->add_option("--dropout", spec->run.shard.dropout_rate,
                  "expected dropout rate");
  cmd->add_option("--modulus-bits", spec->run.shard.modulus_bits,
                  "aggregation precision (m = 2^bits)");
  cmd->add_option("--c", spec->run.calibration_c, "calibration parameter c");
  cmd->add_option("--k", spec->run.split_k, "split threshold multiplier k");
  cmd->add_option("--b", spec->run.expansion_b, "budget expansion factor b");
  cmd->add_option("--gamma", spec->run.gamma_scale,
                  "multi-location scaling constant");
  cmd->add_option("--depth", spec->depth, "flat resolution depth");
  cmd->add_option("--levels", spec->levels, "hierarchical/cm-sketch levels");
  cmd->add_option("--sketch-width", spec->sketch.width, "count-min width");
  cmd->add_option("--sketch-depth", spec->sketch.depth, "count-min depth");
  cmd->add_option("--grid-alpha", spec->grid_alpha,
                  "adaptive-grid stage-1 budget share");
  cmd->add_option("--grid-c2", spec->grid_c2, "adaptive-grid c2");
  cmd->add_option("--seed", spec->seed, "master seed");
  cmd->add_option("--repeat", spec->repeat, "seeded repetitions");
  cmd->add_option("--out", spec->out_dir, "output directory");
  cmd->add_option("--max-subqueries", spec->run.max_subqueries,
                  "adaptive sub-query cap");
  cmd->add_flag("--multi-location", spec->run.multi_location,
                "weighted multi-location client reports");
  cmd->add_flag("--aux", spec->aux,
                "proportion estimation over synthetic aux bits");
  cmd->add_flag("--non-private-noise,--no-noise", spec->run.noise_disabled,
                "disable DP noise (infinite-budget proxy)");
  std::map<std::string, geohist::protocol::VarianceFactor> factor_map{
      {"paper", geohist::protocol::VarianceFactor::kPaper},
      {"shards", geohist::protocol::VarianceFactor::kShards}};
  cmd->add_option("--variance-factor", spec->run.variance_factor,
                  "Eq-6 multi-shard factor: paper or shards")
      ->transform(CLI::CheckedTransformer(factor_map, CLI::ignore_case));
  std::map<std::string, geohist::engine::NoiseMode> noise_map{
      {"per-client", geohist::engine::NoiseMode::kPerClient},
      {"aggregated", geohist::engine::NoiseMode::kAggregated}};
  cmd->add_option("--noise-mode", spec->run.noise_mode,
                  "per-client (faithful) or aggregated (fast, same "
                  "distribution)")
      ->transform(CLI::CheckedTransformer(noise_map, CLI::ignore_case));
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("GEOHIST_THREADS")) {
    const int n = std::atoi(threads);
    if (n > 0) omp_set_num_threads(n);
  }

  CLI::App app{
      "geohist: private location heatmaps under distributed differential "
      "privacy with simulated secure aggregation"};
  app.require_subcommand(1);

  geohist::cli::ExperimentSpec run_spec;
  CLI::App* run = app.add_subcommand("run", "run one experiment");
  AddCommonOptions(run, &run_spec);

  geohist::cli::ExperimentSpec sweep_spec;
  std::string axis;
  std::vector<double> values;
  CLI::App* sweep = app.add_subcommand("sweep", "sweep one parameter");
  AddCommonOptions(sweep, &sweep_spec);
  sweep->add_option("--axis", axis,
                   "users|eps|shard_size|dropout|dp_shard_size|modulus_bits|"
                   "c|k|b|gamma")
      ->required();
  sweep->add_option("--values", values, "axis values")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    std::string dir;
    int code = 0;
    if (run->parsed()) {
      code = geohist::cli::RunExperiment(run_spec, &dir);
    } else {
      code = geohist::cli::RunSweep(sweep_spec, axis, values, &dir);
    }
    if (!dir.empty()) std::cout << "outputs: " << dir << '\n';
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
