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

#ifndef GEOHIST_EXPERIMENT_H_
#define GEOHIST_EXPERIMENT_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geohist/baselines.h"
#include "geohist/dataset.h"
#include "geohist/metrics.h"
#include "geohist/protocol.h"

namespace geohist {
namespace cli {

// A fully serializable experiment: a run is reproducible from spec + seed.
struct ExperimentSpec {
  // Dataset: a named synthetic profile (manhattan, coastal, citywide,
  // uniform, hotspot), a .pgm heatmap, a .csv check-in file, or a .toml
  // generator spec.
  std::string dataset = "manhattan";
  int side = 1024;           // grid side for synthetic datasets
  int population = 1000000;  // synthetic population size

  // adaptive | flat | hierarchical | cm-sketch | adaptive-grid | non-private
  std::string algorithm = "adaptive";
  protocol::RunConfig run;

  int depth = -1;   // flat resolution depth; -1 means log2(side)
  int levels = -1;  // hierarchical/cm levels; -1 means log2(side)
  baselines::SketchConfig sketch;
  double grid_alpha = 0.5;  // adaptive-grid budget share
  double grid_c2 = 10.0;

  bool aux = false;  // proportion-estimation mode (adaptive only)
  // Synthetic aux-bit assignment: P(bit = 1) is a Gaussian bump at
  // (aux_cx, aux_cy) in side units.
  double aux_cx = 0.2;
  double aux_cy = 0.88;
  double aux_sigma = 0.1;

  int repeat = 1;
  uint64_t seed = 1;
  std::string out_dir = "out";

  void Validate() const;
};

struct RunArtifacts {
  metrics::MetricReport report;
  qtree::DensityGrid estimate;
  bool budget_balanced = true;
  std::vector<protocol::SubQueryRecord> log;  // adaptive/aux only
  std::vector<std::string> tree_nodes;        // final tree, adaptive/aux only
};

dataset::Population BuildPopulation(const ExperimentSpec& spec);

// Marks users with synthetic aux bits (Bernoulli of a Gaussian bump).
void AssignAuxBits(dataset::Population& pop, double cx, double cy,
                   double sigma_fraction, uint64_t seed);

// One seeded run of the configured algorithm against a prebuilt population.
RunArtifacts ExecuteRun(const ExperimentSpec& spec,
                        const dataset::Population& pop,
                        const qtree::DensityGrid& truth, uint64_t run_seed);

// Runs `repeat` seeded runs into a fresh timestamped directory under
// spec.out_dir, writing metrics.csv, run-log.jsonl, estimate.pgm, truth.pgm
// and tree.txt. Returns the process exit code (0 only if every run completed
// with its budget balanced). If created_dir is non-null it receives the
// output directory path.
int RunExperiment(const ExperimentSpec& spec, std::string* created_dir = nullptr);

// Parameter sweep over one axis; writes sweep.csv (mean and sample std per
// value) next to the per-run metrics.csv.
int RunSweep(const ExperimentSpec& spec, const std::string& axis,
             std::span<const double> values,
             std::string* created_dir = nullptr);

// Applies one sweep-axis value to a spec copy. Exposed for tests.
ExperimentSpec WithAxisValue(const ExperimentSpec& spec,
                             const std::string& axis, double value);

}  // namespace cli
}  // namespace geohist

#endif  // GEOHIST_EXPERIMENT_H_
