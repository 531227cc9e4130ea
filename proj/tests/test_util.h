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

#ifndef GEOHIST_TESTS_TEST_UTIL_H_
#define GEOHIST_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace geohist {
namespace testing {

inline double ChiSquarePValue(double stat, int dof) {
  if (dof <= 0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, stat / 2.0);
}

// Discrete Laplace pmf, the analytic oracle for summed noise shares:
// P(k) = (1 - b) / (1 + b) * b^|k| with b = exp(-eps / delta).
inline double DiscreteLaplacePmf(int64_t k, double beta) {
  return (1 - beta) / (1 + beta) * std::pow(beta, std::abs(static_cast<double>(k)));
}

inline double DiscreteLaplaceVariance(double beta) {
  return 2 * beta / ((1 - beta) * (1 - beta));
}

// Goodness-of-fit p-value of integer samples against the discrete Laplace
// pmf. Central values get one bin each while expected counts stay >= 5; the
// tails are merged into the outermost bins.
inline double DiscreteLaplaceGofP(const std::vector<int64_t>& samples,
                                  double beta) {
  const double n = static_cast<double>(samples.size());
  int cutoff = 0;
  while (n * DiscreteLaplacePmf(cutoff + 1, beta) >= 5.0 && cutoff < 4096) {
    ++cutoff;
  }
  // bins: [-inf, -cutoff], -cutoff+1, ..., cutoff-1, [cutoff, inf]
  const int bins = 2 * cutoff + 1;
  std::vector<double> observed(bins, 0.0);
  for (int64_t s : samples) {
    const int64_t clamped = std::clamp<int64_t>(s, -cutoff, cutoff);
    observed[static_cast<int>(clamped + cutoff)] += 1.0;
  }
  std::vector<double> expected(bins, 0.0);
  for (int k = -cutoff + 1; k < cutoff; ++k) {
    expected[k + cutoff] = n * DiscreteLaplacePmf(k, beta);
  }
  // Tail mass beyond +-(cutoff-1): sum_{k>=c} pmf(k) = b^c / (1 + b).
  const double tail = n * std::pow(beta, cutoff) / (1 + beta);
  expected[0] = tail;
  expected[bins - 1] = tail;
  double stat = 0;
  for (int i = 0; i < bins; ++i) {
    if (expected[i] <= 0) continue;
    const double d = observed[i] - expected[i];
    stat += d * d / expected[i];
  }
  return ChiSquarePValue(stat, bins - 1);
}

// Two-sample chi-square homogeneity test over integer samples.
inline double TwoSampleChiSquareP(const std::vector<int64_t>& a,
                                  const std::vector<int64_t>& b) {
  std::map<int64_t, std::pair<double, double>> cells;
  for (int64_t v : a) cells[v].first += 1;
  for (int64_t v : b) cells[v].second += 1;
  // Merge sparse cells (combined count < 10) into their predecessor.
  std::vector<std::pair<double, double>> merged;
  for (const auto& [value, counts] : cells) {
    (void)value;
    if (!merged.empty() &&
        merged.back().first + merged.back().second < 10.0) {
      merged.back().first += counts.first;
      merged.back().second += counts.second;
    } else {
      merged.push_back(counts);
    }
  }
  if (merged.size() >= 2 &&
      merged.back().first + merged.back().second < 10.0) {
    auto last = merged.back();
    merged.pop_back();
    merged.back().first += last.first;
    merged.back().second += last.second;
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double stat = 0;
  for (const auto& [ca, cb] : merged) {
    const double total = ca + cb;
    if (total <= 0) continue;
    const double ea = total * na / (na + nb);
    const double eb = total * nb / (na + nb);
    stat += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
  }
  const int dof = static_cast<int>(merged.size()) - 1;
  return ChiSquarePValue(stat, dof);
}

// Uniformity test over [0, m) values, binned by 64 equal ranges.
inline double UniformityChiSquareP(const std::vector<uint64_t>& samples,
                                   uint64_t mask) {
  constexpr int kBins = 64;
  std::vector<double> observed(kBins, 0.0);
  const double range = static_cast<double>(mask) + 1.0;
  for (uint64_t s : samples) {
    int bin = static_cast<int>(static_cast<double>(s) / range * kBins);
    observed[std::min(bin, kBins - 1)] += 1.0;
  }
  const double expected = static_cast<double>(samples.size()) / kBins;
  double stat = 0;
  for (double obs : observed) {
    stat += (obs - expected) * (obs - expected) / expected;
  }
  return ChiSquarePValue(stat, kBins - 1);
}

}  // namespace testing
}  // namespace geohist

#endif  // GEOHIST_TESTS_TEST_UTIL_H_
