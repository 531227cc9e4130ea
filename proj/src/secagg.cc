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

#include "geohist/secagg.h"

namespace geohist {
namespace secagg {

void ShardConfig::Validate() const {
  if (shard_size < 1) throw std::invalid_argument("shard_size must be >= 1");
  if (modulus_bits < 1 || modulus_bits > 64) {
    throw std::invalid_argument("modulus_bits must be in [1, 64]");
  }
  if (!(dropout_rate >= 0) || dropout_rate >= 0.5) {
    throw std::invalid_argument("dropout_rate must be in [0, 0.5)");
  }
}

std::vector<std::vector<uint64_t>> ZeroSumMasks(int k, int len,
                                                const Modulus& m,
                                                RngStream& rng) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (len < 0) throw std::invalid_argument("len must be >= 0");
  std::vector<std::vector<uint64_t>> masks(
      k, std::vector<uint64_t>(len, 0));
  for (int i = 0; i + 1 < k; ++i) {
    for (int j = 0; j < len; ++j) {
      const uint64_t v = m.Reduce(rng());
      masks[i][j] = v;
      // The last mask is the negation of everything else.
      masks[k - 1][j] = m.Reduce(masks[k - 1][j] - v);
    }
  }
  return masks;
}

std::optional<ShardReport> AggregateShard(
    std::span<const std::vector<uint64_t>> client_vectors,
    const ShardConfig& config, RngStream& rng) {
  config.Validate();
  const Modulus m = config.modulus();
  const int n = static_cast<int>(client_vectors.size());
  const size_t len = n > 0 ? client_vectors[0].size() : 0;
  for (const auto& v : client_vectors) {
    if (v.size() != len) {
      throw std::invalid_argument("client vectors must share one length");
    }
  }

  // Dropouts happen before any contribution: a dropped client supplies
  // neither data, noise, nor masks.
  std::vector<int> survivors;
  survivors.reserve(n);
  int dropped = 0;
  for (int i = 0; i < n; ++i) {
    if (rng.NextBernoulli(config.dropout_rate)) {
      ++dropped;
    } else {
      survivors.push_back(i);
    }
  }
  if (2 * dropped >= n && n > 0) return std::nullopt;

  ShardReport report;
  report.sum.assign(len, 0);
  report.contributors = static_cast<int>(survivors.size());
  report.dropped = dropped;

  const auto masks =
      ZeroSumMasks(std::max<int>(1, report.contributors),
                   static_cast<int>(len), m, rng);
  for (int s = 0; s < report.contributors; ++s) {
    const auto& vec = client_vectors[survivors[s]];
    const auto& mask = masks[s];
    for (size_t j = 0; j < len; ++j) {
      const uint64_t masked = m.Reduce(vec[j] + mask[j]);
      report.sum[j] = m.Reduce(report.sum[j] + masked);
    }
  }
  return report;
}

std::vector<int64_t> DecodeSigned(std::span<const uint64_t> sum,
                                  const Modulus& m) {
  std::vector<int64_t> out(sum.size());
  for (size_t i = 0; i < sum.size(); ++i) out[i] = m.DecodeSigned(sum[i]);
  return out;
}

}  // namespace secagg
}  // namespace geohist
