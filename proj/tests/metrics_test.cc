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

#include "geohist/rng.h"
#include "gtest/gtest.h"

namespace geohist {
namespace metrics {
namespace {

qtree::DensityGrid Grid2x2(double a, double b, double c, double d) {
  qtree::DensityGrid grid(2);
  grid.values = {a, b, c, d};
  return grid;
}

TEST(MetricsTest, IdenticalGridsAreZero) {
  const auto grid = Grid2x2(0.4, 0.3, 0.2, 0.1);
  const auto m = Compare(grid, grid);
  EXPECT_DOUBLE_EQ(m.mse, 0);
  EXPECT_DOUBLE_EQ(m.l1, 0);
  EXPECT_DOUBLE_EQ(m.mape, 0);
  EXPECT_DOUBLE_EQ(m.smape, 0);
  EXPECT_DOUBLE_EQ(m.maape, 0);
}

TEST(MetricsTest, MseHandExample) {
  const auto truth = Grid2x2(1, 0, 0, 0);
  const auto estimate = Grid2x2(0.5, 0.5, 0, 0);
  EXPECT_DOUBLE_EQ(Mse(estimate, truth), 0.125);
}

TEST(MetricsTest, L1AndSmapeHandExample) {
  const auto truth = Grid2x2(1, 0, 0, 0);
  const auto estimate = Grid2x2(0, 1, 0, 0);
  EXPECT_DOUBLE_EQ(L1(estimate, truth), 0.5);
  // sMAPE: two cells contribute 2 each, two are 0/0 -> 0.
  EXPECT_DOUBLE_EQ(Smape(estimate, truth), 1.0);
  // MAPE with the minimum-nonzero denominator (1.0): (1 + 1 + 0 + 0) / 4.
  EXPECT_DOUBLE_EQ(Mape(estimate, truth), 0.5);
}

TEST(MetricsTest, MaapeBoundedByHalfPi) {
  RngStream rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    qtree::DensityGrid truth(4);
    qtree::DensityGrid estimate(4);
    for (auto& v : truth.values) v = rng.NextDouble();
    for (auto& v : estimate.values) v = rng.NextDouble() * 10 - 1;
    if (!(estimate.Total() > 0)) continue;
    EXPECT_LE(Maape(estimate, truth), std::atan(INFINITY) + 1e-12);
    EXPECT_GE(Maape(estimate, truth), 0.0);
  }
}

TEST(MetricsTest, MseAndL1AreSymmetric) {
  const auto a = Grid2x2(0.7, 0.1, 0.1, 0.1);
  const auto b = Grid2x2(0.25, 0.25, 0.25, 0.25);
  EXPECT_DOUBLE_EQ(Mse(a, b), Mse(b, a));
  EXPECT_DOUBLE_EQ(L1(a, b), L1(b, a));
}

TEST(MetricsTest, NormalizationIsScaleInvariant) {
  const auto truth = Grid2x2(2, 1, 1, 0);
  auto scaled = truth;
  for (auto& v : scaled.values) v *= 37.5;
  EXPECT_DOUBLE_EQ(Mse(scaled, truth), 0.0);
}

TEST(MetricsTest, ErrorsOnBadInput) {
  const auto truth = Grid2x2(1, 0, 0, 0);
  qtree::DensityGrid wrong(4);
  wrong.values.assign(16, 1.0);
  EXPECT_THROW(Mse(wrong, truth), std::invalid_argument);
  // Non-positive total signed mass cannot be normalized.
  EXPECT_THROW(Mse(Grid2x2(0, 0, 0, 0), truth), std::invalid_argument);
  EXPECT_THROW(Mse(Grid2x2(1, -2, 0, 0), truth), std::invalid_argument);
  EXPECT_THROW(Mape(truth, Grid2x2(0, 0, 0, 0)), std::invalid_argument);
}

TEST(MetricsTest, NegativeEstimateEntriesAreKept) {
  // DP noise can push cells negative; they participate as-is.
  const auto truth = Grid2x2(1, 1, 1, 1);
  const auto estimate = Grid2x2(2, -0.5, 0.5, 2);
  const auto m = Compare(estimate, truth);
  EXPECT_GT(m.mse, 0);
  EXPECT_TRUE(std::isfinite(m.smape));
}

TEST(MetricReportTest, CsvFormat) {
  EXPECT_EQ(MetricReport::CsvHeader(),
            "algorithm,eps,users,dropout,mse,l1,mape,smape,maape,comm,seed");
  MetricReport report;
  report.algorithm = "adaptive";
  report.eps = 1;
  report.users = 10000;
  report.dropout = 0.05;
  report.errors = {1e-12, 2e-6, 0.3, 1.1, 0.2};
  report.comm = 340;
  report.seed = 42;
  EXPECT_EQ(report.CsvRow(),
            "adaptive,1,10000,0.050000000000000003,9.9999999999999998e-13,"
            "1.9999999999999999e-06,0.29999999999999999,1.1000000000000001,"
            "0.20000000000000001,340,42");
}

}  // namespace
}  // namespace metrics
}  // namespace geohist
