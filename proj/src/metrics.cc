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

#include "geohist/metrics.h"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace geohist {
namespace metrics {
namespace {

void CheckSameSide(const qtree::DensityGrid& a, const qtree::DensityGrid& b) {
  if (a.side != b.side) {
    throw std::invalid_argument("grid sides do not match");
  }
}

}  // namespace

qtree::DensityGrid Normalized(const qtree::DensityGrid& grid) {
  const double mass = grid.Total();
  if (!(mass > 0)) {
    throw std::invalid_argument("total signed mass must be positive");
  }
  qtree::DensityGrid out = grid;
  for (double& v : out.values) v /= mass;
  return out;
}

ErrorMeasures Compare(const qtree::DensityGrid& estimate,
                      const qtree::DensityGrid& truth) {
  CheckSameSide(estimate, truth);
  const qtree::DensityGrid est = Normalized(estimate);
  const qtree::DensityGrid tru = Normalized(truth);

  // A normalized truth grid has positive mass, so a minimum nonzero value
  // always exists.
  double min_nonzero = std::numeric_limits<double>::infinity();
  for (double t : tru.values) {
    if (t != 0 && std::abs(t) < min_nonzero) min_nonzero = std::abs(t);
  }

  ErrorMeasures m;
  const size_t n = tru.values.size();
  for (size_t i = 0; i < n; ++i) {
    const double e = est.values[i];
    const double t = tru.values[i];
    const double diff = std::abs(e - t);
    m.mse += (e - t) * (e - t);
    m.l1 += diff;
    // Absolute percentage with the minimum-nonzero-denominator rule for
    // zero-valued truth cells.
    const double ape = t != 0 ? diff / std::abs(t) : diff / min_nonzero;
    m.mape += ape;
    m.maape += std::atan(ape);
    const double scale = (std::abs(e) + std::abs(t)) / 2;
    m.smape += scale > 0 ? diff / scale : 0.0;
  }
  const double cells = static_cast<double>(n);
  m.mse /= cells;
  m.l1 /= cells;
  m.mape /= cells;
  m.smape /= cells;
  m.maape /= cells;
  return m;
}

double Mse(const qtree::DensityGrid& estimate, const qtree::DensityGrid& truth) {
  return Compare(estimate, truth).mse;
}

double L1(const qtree::DensityGrid& estimate, const qtree::DensityGrid& truth) {
  return Compare(estimate, truth).l1;
}

double Mape(const qtree::DensityGrid& estimate, const qtree::DensityGrid& truth) {
  return Compare(estimate, truth).mape;
}

double Smape(const qtree::DensityGrid& estimate, const qtree::DensityGrid& truth) {
  return Compare(estimate, truth).smape;
}

double Maape(const qtree::DensityGrid& estimate, const qtree::DensityGrid& truth) {
  return Compare(estimate, truth).maape;
}

std::string MetricReport::CsvHeader() {
  return "algorithm,eps,users,dropout,mse,l1,mape,smape,maape,comm,seed";
}

std::string MetricReport::CsvRow() const {
  std::ostringstream out;
  out.precision(17);
  out << algorithm << ',' << eps << ',' << users << ',' << dropout << ','
      << errors.mse << ',' << errors.l1 << ',' << errors.mape << ','
      << errors.smape << ',' << errors.maape << ',' << comm << ',' << seed;
  return out.str();
}

}  // namespace metrics
}  // namespace geohist
