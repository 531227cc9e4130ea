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

#ifndef GEOHIST_DATASET_H_
#define GEOHIST_DATASET_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "geohist/pgm.h"
#include "geohist/rng.h"
#include "geohist/tree.h"
#include "geohist/user.h"

namespace geohist {
namespace dataset {

// An immutable simulated user base. Deterministic given (source, seed).
struct Population {
  std::vector<protocol::UserRecord> users;
  int side = 0;          // grid resolution the coordinates live on
  std::string source;    // image path or generator description
};

// One single-location user per unit of pixel luminosity.
Population FromImage(const pgm::PgmImage& image, const std::string& source = "image");

struct GaussianKernel {
  double cx = 0;
  double cy = 0;
  double sigma = 1;
  double weight = 0;
};

// Mixture of 2D Gaussian kernels plus a uniform floor; weights (including
// uniform_weight) must sum to 1.
struct SyntheticSpec {
  std::vector<GaussianKernel> kernels;
  double uniform_weight = 0.0;
  std::string name = "synthetic";

  void Validate() const;
};

// Built-in profiles mimicking the qualitative shapes of public heatmaps:
// "manhattan" (dense diagonal corridor), "coastal" (sparse ring of shore
// settlements), "citywide" (broad spread), "uniform", and "hotspot" (one
// tight kernel). Coordinates scale with `side`.
SyntheticSpec NamedSpec(const std::string& name);

// Parses the generator TOML: optional top-level `uniform_weight`, and one
// [[kernel]] table per kernel with keys cx, cy, sigma, weight (cx/cy/sigma in
// units of the grid side, i.e. 0.5 is the center).
SyntheticSpec ParseSyntheticSpec(std::istream& in);

Population Synthetic(const SyntheticSpec& spec, int n_users, int side,
                     uint64_t seed);

// Uniform sample of `count` distinct user indices, without replacement.
std::vector<int32_t> SampleUsers(const Population& pop, int count,
                                 RngStream& rng);

// Check-in CSV with header `user,x,y[,weight]`; rows are grouped by user id
// into multi-location records with summed weights per location.
Population FromCheckins(std::istream& in, int side = 64);

// Ground truth: rasterizes every user's locations (each user contributes
// total mass equal to 1, split by normalized location weights), then
// normalizes the grid to total mass 1.
qtree::DensityGrid TruthGrid(const Population& pop);

}  // namespace dataset
}  // namespace geohist

#endif  // GEOHIST_DATASET_H_
