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

#include "geohist/experiment.h"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "geohist/pgm.h"
#include "json.hpp"

namespace geohist {
namespace cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int Log2(int v) {
  int bits = 0;
  while ((1 << bits) < v) ++bits;
  return bits;
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// out_dir/<timestamp>[-N]: reruns never touch prior outputs.
fs::path CreateRunDirectory(const std::string& out_dir) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  localtime_r(&tt, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm);
  fs::path base = fs::path(out_dir) / stamp;
  fs::path dir = base;
  for (int n = 1; fs::exists(dir); ++n) {
    dir = base;
    dir += "-" + std::to_string(n);
  }
  fs::create_directories(dir);
  return dir;
}

json StatsJson(const protocol::ShardStats& stats) {
  return json{{"shards", stats.shards},
              {"failed_shards", stats.failed_shards},
              {"contributors", stats.contributors},
              {"dropped", stats.dropped}};
}

}  // namespace

void ExperimentSpec::Validate() const {
  run.Validate();
  if (repeat < 1) throw std::invalid_argument("repeat must be >= 1");
  if (population < 1) throw std::invalid_argument("population must be >= 1");
  if (side < 2 || (side & (side - 1)) != 0) {
    throw std::invalid_argument("side must be a power of two >= 2");
  }
  static const char* kAlgorithms[] = {"adaptive",  "flat",
                                      "hierarchical", "cm-sketch",
                                      "adaptive-grid", "non-private"};
  bool known = false;
  for (const char* a : kAlgorithms) known |= algorithm == a;
  if (!known) throw std::invalid_argument("unknown algorithm: " + algorithm);
  if (aux && algorithm != "adaptive") {
    throw std::invalid_argument("--aux requires the adaptive algorithm");
  }
}

dataset::Population BuildPopulation(const ExperimentSpec& spec) {
  dataset::Population pop;
  if (EndsWith(spec.dataset, ".pgm")) {
    pop = dataset::FromImage(pgm::ReadPgmFile(spec.dataset), spec.dataset);
  } else if (EndsWith(spec.dataset, ".csv")) {
    std::ifstream in(spec.dataset);
    if (!in) throw std::runtime_error("cannot open " + spec.dataset);
    pop = dataset::FromCheckins(in, spec.side);
  } else if (EndsWith(spec.dataset, ".toml")) {
    std::ifstream in(spec.dataset);
    if (!in) throw std::runtime_error("cannot open " + spec.dataset);
    const auto synth = dataset::ParseSyntheticSpec(in);
    pop = dataset::Synthetic(synth, spec.population, spec.side, spec.seed);
  } else {
    pop = dataset::Synthetic(dataset::NamedSpec(spec.dataset),
                             spec.population, spec.side, spec.seed);
  }
  if (spec.aux) {
    AssignAuxBits(pop, spec.aux_cx, spec.aux_cy, spec.aux_sigma,
                  DeriveSeed(spec.seed, 0xa0bULL));
  }
  return pop;
}

void AssignAuxBits(dataset::Population& pop, double cx, double cy,
                   double sigma_fraction, uint64_t seed) {
  RngStream rng(seed);
  const double sx = cx * pop.side;
  const double sy = cy * pop.side;
  const double sigma = sigma_fraction * pop.side;
  for (auto& user : pop.users) {
    const auto& loc = user.locations.front();
    const double d2 = (loc.x - sx) * (loc.x - sx) + (loc.y - sy) * (loc.y - sy);
    const double p = std::exp(-d2 / (2 * sigma * sigma));
    user.aux_bit = rng.NextBernoulli(p);
  }
}

RunArtifacts ExecuteRun(const ExperimentSpec& spec,
                        const dataset::Population& pop,
                        const qtree::DensityGrid& truth, uint64_t run_seed) {
  const int max_depth = Log2(pop.side);
  const int depth = spec.depth < 0 ? max_depth : spec.depth;
  const int levels = spec.levels < 0 ? max_depth : spec.levels;

  RunArtifacts art;
  art.report.algorithm = spec.aux ? "adaptive-aux" : spec.algorithm;
  art.report.eps = spec.run.eps_total;
  art.report.users = spec.run.users_per_query;
  art.report.dropout = spec.run.shard.dropout_rate;
  art.report.seed = run_seed;

  const double kBudgetTol = 1e-9;
  if (spec.aux) {
    const auto result = protocol::RunAdaptiveAux(spec.run, pop, run_seed);
    art.estimate = result.proportion_map;
    art.report.comm = result.comm;
    for (const auto& record : result.log) art.log.push_back(record);
    art.tree_nodes = result.log.empty() ? std::vector<std::string>{}
                                        : result.log.back().tree_nodes;
    art.budget_balanced =
        std::abs(result.eps_spent - spec.run.eps_total) <= kBudgetTol;
    // The proportion map is not a density; metrics against the location
    // truth are not meaningful, so only comm is reported.
    art.report.errors = {};
    return art;
  }

  if (spec.algorithm == "adaptive") {
    const auto result = protocol::RunAdaptive(spec.run, pop, run_seed);
    art.estimate = result.grid;
    art.report.comm = result.comm;
    art.log = result.log;
    std::vector<std::string> nodes;
    for (const auto& node : result.tree.nodes()) {
      if (!node.IsRoot()) nodes.push_back(node.ToString());
    }
    art.tree_nodes = std::move(nodes);
    art.budget_balanced =
        std::abs(result.eps_spent - spec.run.eps_total) <= kBudgetTol;
  } else {
    baselines::BaselineResult result;
    if (spec.algorithm == "flat") {
      result = baselines::FlatOneHot(pop, spec.run.eps_total, depth, spec.run,
                                     run_seed);
    } else if (spec.algorithm == "hierarchical") {
      result = baselines::HierarchicalOneHot(pop, spec.run.eps_total, levels,
                                             truth, spec.run, run_seed);
    } else if (spec.algorithm == "cm-sketch") {
      result = baselines::CmSketchBaseline(pop, spec.run.eps_total, levels,
                                           spec.sketch, truth, spec.run,
                                           run_seed);
    } else if (spec.algorithm == "adaptive-grid") {
      result = baselines::AdaptiveGrid(pop, spec.run.eps_total,
                                       spec.grid_alpha, spec.grid_c2,
                                       spec.run, run_seed);
    } else {  // non-private
      result = baselines::NonPrivate(pop, truth, spec.run, run_seed);
    }
    art.estimate = result.grid;
    art.report.comm = result.comm;
    art.budget_balanced =
        spec.algorithm == "non-private" ||
        std::abs(result.eps_spent - spec.run.eps_total) <= kBudgetTol;
  }
  art.report.errors = metrics::Compare(art.estimate, truth);
  return art;
}

namespace {

void WriteRunLog(std::ostream& out, int run_index,
                 const ExperimentSpec& spec, const RunArtifacts& art) {
  if (!art.log.empty()) {
    for (const auto& record : art.log) {
      json j{{"run", run_index},
             {"subquery", record.index},
             {"eps", record.eps},
             {"sigma_target", record.sigma_target},
             {"threshold", record.threshold},
             {"num_slots", record.num_slots},
             {"final", record.final_subquery},
             {"tree", record.tree_nodes},
             {"counts", record.counts},
             {"stats", StatsJson(record.stats)}};
      out << j.dump() << '\n';
    }
  } else {
    json j{{"run", run_index},
           {"algorithm", spec.algorithm},
           {"comm", art.report.comm},
           {"mse", art.report.errors.mse}};
    out << j.dump() << '\n';
  }
}

}  // namespace

int RunExperiment(const ExperimentSpec& spec, std::string* created_dir) {
  spec.Validate();
  const auto pop = BuildPopulation(spec);
  const auto truth = dataset::TruthGrid(pop);
  const fs::path dir = CreateRunDirectory(spec.out_dir);
  if (created_dir != nullptr) *created_dir = dir.string();

  std::vector<RunArtifacts> runs(spec.repeat);
  bool failed = false;
  std::string failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < spec.repeat; ++r) {
    try {
      runs[r] = ExecuteRun(spec, pop, truth,
                           DeriveSeed(spec.seed, engine::kSaltRun,
                                      static_cast<uint64_t>(r)));
    } catch (const std::exception& e) {
#pragma omp critical
      {
        failed = true;
        failure = e.what();
      }
    }
  }
  if (failed) {
    std::cerr << "run failed: " << failure << '\n';
    return 1;
  }

  std::ofstream csv(dir / "metrics.csv");
  csv << metrics::MetricReport::CsvHeader() << '\n';
  for (const auto& art : runs) csv << art.report.CsvRow() << '\n';

  std::ofstream log(dir / "run-log.jsonl");
  for (int r = 0; r < spec.repeat; ++r) WriteRunLog(log, r, spec, runs[r]);

  pgm::WritePgmFile((dir / "truth.pgm").string(), pgm::RenderGrid(truth));
  pgm::WritePgmFile((dir / "estimate.pgm").string(),
                    pgm::RenderGrid(runs.front().estimate));
  if (!runs.front().tree_nodes.empty() || spec.algorithm == "adaptive") {
    std::ofstream tree(dir / "tree.txt");
    for (const auto& node : runs.front().tree_nodes) tree << node << '\n';
  }

  bool balanced = true;
  for (const auto& art : runs) balanced &= art.budget_balanced;
  if (!balanced) {
    std::cerr << "privacy budget did not balance\n";
    return 1;
  }
  return 0;
}

ExperimentSpec WithAxisValue(const ExperimentSpec& spec,
                             const std::string& axis, double value) {
  ExperimentSpec out = spec;
  if (axis == "users") {
    out.run.users_per_query = static_cast<int>(value);
  } else if (axis == "eps") {
    out.run.eps_total = value;
  } else if (axis == "shard_size") {
    out.run.shard.shard_size = static_cast<int>(value);
  } else if (axis == "dropout" || axis == "dp_shard_size") {
    out.run.shard.dropout_rate = value;
  } else if (axis == "modulus_bits") {
    out.run.shard.modulus_bits = static_cast<int>(value);
  } else if (axis == "c") {
    out.run.calibration_c = value;
  } else if (axis == "k") {
    out.run.split_k = value;
  } else if (axis == "b") {
    out.run.expansion_b = value;
  } else if (axis == "gamma") {
    out.run.gamma_scale = static_cast<int64_t>(value);
  } else {
    throw std::invalid_argument("unknown sweep axis: " + axis);
  }
  return out;
}

int RunSweep(const ExperimentSpec& spec, const std::string& axis,
             std::span<const double> values, std::string* created_dir) {
  spec.Validate();
  if (values.empty()) throw std::invalid_argument("sweep needs values");
  const auto pop = BuildPopulation(spec);
  const auto truth = dataset::TruthGrid(pop);
  const fs::path dir = CreateRunDirectory(spec.out_dir);
  if (created_dir != nullptr) *created_dir = dir.string();

  std::ofstream csv(dir / "metrics.csv");
  csv << "axis,value," << metrics::MetricReport::CsvHeader() << '\n';
  std::ofstream agg(dir / "sweep.csv");
  agg << "axis,value,runs,mse_mean,mse_std,l1_mean,l1_std,comm_mean,comm_std\n";
  agg.precision(17);

  for (double value : values) {
    const ExperimentSpec point = WithAxisValue(spec, axis, value);
    point.Validate();
    std::vector<RunArtifacts> runs(point.repeat);
    bool failed = false;
    std::string failure;
#pragma omp parallel for schedule(dynamic, 1)
    for (int r = 0; r < point.repeat; ++r) {
      try {
        runs[r] = ExecuteRun(point, pop, truth,
                             DeriveSeed(point.seed, engine::kSaltRun,
                                        static_cast<uint64_t>(r)));
      } catch (const std::exception& e) {
#pragma omp critical
        {
          failed = true;
          failure = e.what();
        }
      }
    }
    if (failed) {
      std::cerr << "sweep point " << value << " failed: " << failure << '\n';
      return 1;
    }
    double mse_sum = 0, mse_sq = 0, l1_sum = 0, l1_sq = 0;
    double comm_sum = 0, comm_sq = 0;
    for (const auto& art : runs) {
      csv << axis << ',' << value << ',' << art.report.CsvRow() << '\n';
      mse_sum += art.report.errors.mse;
      mse_sq += art.report.errors.mse * art.report.errors.mse;
      l1_sum += art.report.errors.l1;
      l1_sq += art.report.errors.l1 * art.report.errors.l1;
      comm_sum += static_cast<double>(art.report.comm);
      comm_sq += static_cast<double>(art.report.comm) * art.report.comm;
    }
    const double n = point.repeat;
    auto std_of = [n](double sum, double sq) {
      if (n < 2) return 0.0;
      const double var = (sq - sum * sum / n) / (n - 1);
      return std::sqrt(std::max(var, 0.0));
    };
    agg << axis << ',' << value << ',' << point.repeat << ','
        << mse_sum / n << ',' << std_of(mse_sum, mse_sq) << ','
        << l1_sum / n << ',' << std_of(l1_sum, l1_sq) << ','
        << comm_sum / n << ',' << std_of(comm_sum, comm_sq) << '\n';
  }
  return 0;
}

}  // namespace cli
}  // namespace geohist
