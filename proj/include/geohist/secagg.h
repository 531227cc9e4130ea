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

#ifndef GEOHIST_SECAGG_H_
#define GEOHIST_SECAGG_H_

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "geohist/rng.h"

namespace geohist {
namespace secagg {

// The aggregation group Z_m with m = 2^bits, 1 <= bits <= 64. Entries live in
// [0, m) as uint64 words; bits == 64 uses native wraparound.
class Modulus {
 public:
  explicit Modulus(int bits) : bits_(bits) {
    if (bits < 1 || bits > 64) {
      throw std::invalid_argument("modulus_bits must be in [1, 64]");
    }
    mask_ = bits == 64 ? ~0ULL : (1ULL << bits) - 1;
  }

  int bits() const { return bits_; }
  uint64_t mask() const { return mask_; }

  uint64_t Reduce(uint64_t v) const { return v & mask_; }
  uint64_t EncodeSigned(int64_t v) const {
    return static_cast<uint64_t>(v) & mask_;
  }
  // Centered decoding: values >= m/2 map to value - m.
  int64_t DecodeSigned(uint64_t v) const {
    v &= mask_;
    if (bits_ == 64) return static_cast<int64_t>(v);
    if (v >= (1ULL << (bits_ - 1))) {
      return static_cast<int64_t>(v) - (1LL << bits_);
    }
    return static_cast<int64_t>(v);
  }

 private:
  int bits_;
  uint64_t mask_;
};

struct ShardConfig {
  int shard_size = 10000;     // S_max: clients admitted to one aggregation
  int modulus_bits = 32;      // m = 2^bits
  double dropout_rate = 0.05; // fraction expected to drop, < 0.5

  Modulus modulus() const { return Modulus(modulus_bits); }
  void Validate() const;
};

// What the server sees from one shard: the modular sum of the surviving
// clients' masked vectors plus dropout bookkeeping.
struct ShardReport {
  std::vector<uint64_t> sum;  // entries in [0, m)
  int contributors = 0;       // clients whose vectors were included
  int dropped = 0;            // admitted clients that dropped out
};

// k vectors over Z_m whose entrywise sum mod m is zero; for k >= 2 each
// vector is marginally uniform over Z_m^len. k == 1 yields the zero vector.
std::vector<std::vector<uint64_t>> ZeroSumMasks(int k, int len,
                                                const Modulus& m,
                                                RngStream& rng);

// Masks the given client vectors with zero-sum masks, drops a
// Bernoulli(dropout_rate) subset of clients before any contribution, and
// returns the modular sum of the survivors' masked vectors (which equals the
// modular sum of their unmasked vectors). Returns nullopt when half or more
// of the shard dropped: the protocol aborts and the server sees nothing.
std::optional<ShardReport> AggregateShard(
    std::span<const std::vector<uint64_t>> client_vectors,
    const ShardConfig& config, RngStream& rng);

// Entrywise centered decoding of a modular sum.
std::vector<int64_t> DecodeSigned(std::span<const uint64_t> sum,
                                  const Modulus& m);

}  // namespace secagg
}  // namespace geohist

#endif  // GEOHIST_SECAGG_H_
