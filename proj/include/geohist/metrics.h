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

#ifndef GEOHIST_METRICS_H_
#define GEOHIST_METRICS_H_

#include <cstdint>
#include <string>

#include "geohist/tree.h"

namespace geohist {
namespace metrics {

// Divides by the total signed mass. DP estimates may have negative entries;
// they are kept as-is. A non-positive total is an error.
qtree::DensityGrid Normalized(const qtree::DensityGrid& grid);

struct ErrorMeasures {
  double mse = 0;
  double l1 = 0;
  double mape = 0;
  double smape = 0;
  double maape = 0;
};

// All five error measures in one pass. Both grids are normalized to total
// mass 1 first; all measures are per-coordinate means.
//
// Percentage denominators follow the rule of using the minimum nonzero truth
// value where the true value is zero; sMAPE defines 0/0 as 0; MAAPE takes the
// arctangent of the absolute percentage (bounded by pi/2).
ErrorMeasures Compare(const qtree::DensityGrid& estimate,
                      const qtree::DensityGrid& truth);

double Mse(const qtree::DensityGrid& estimate, const qtree::DensityGrid& truth);
double L1(const qtree::DensityGrid& estimate, const qtree::DensityGrid& truth);
double Mape(const qtree::DensityGrid& estimate, const qtree::DensityGrid& truth);
double Smape(const qtree::DensityGrid& estimate, const qtree::DensityGrid& truth);
double Maape(const qtree::DensityGrid& estimate, const qtree::DensityGrid& truth);

// One experiment run's metric row. `comm` is the total per-client vector
// slots summed over sub-queries.
struct MetricReport {
  std::string algorithm;
  double eps = 0;
  int users = 0;
  double dropout = 0;
  ErrorMeasures errors;
  int64_t comm = 0;
  uint64_t seed = 0;

  static std::string CsvHeader();
  std::string CsvRow() const;
};

}  // namespace metrics
}  // namespace geohist

#endif  // GEOHIST_METRICS_H_
