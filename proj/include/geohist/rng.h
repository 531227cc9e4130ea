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

#ifndef GEOHIST_RNG_H_
#define GEOHIST_RNG_H_

#include <cstdint>
#include <limits>

namespace geohist {

// SplitMix64 output function. Used both as the per-stream engine and as the
// seed-derivation mixer.
inline uint64_t Mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// A tiny seedable random stream (SplitMix64). Every stochastic operation in
// this library takes one of these explicitly; a whole experiment is
// reproducible from a single master seed because all sub-streams are derived
// with DeriveSeed, never by sharing a stream across units of work.
//
// Satisfies std::uniform_random_bit_generator, so it can drive the standard
// <random> distributions.
class RngStream {
 public:
  using result_type = uint64_t;

  explicit RngStream(uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<uint64_t>::max();
  }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1).
  double NextDouble() { return ((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound). bound must be > 0.
  uint64_t NextBelow(uint64_t bound) {
    // Rejection sampling to remove modulo bias.
    const uint64_t limit = max() - max() % bound;
    uint64_t v;
    do {
      v = (*this)();
    } while (v >= limit);
    return v % bound;
  }

  bool NextBernoulli(double p) { return NextDouble() < p; }

 private:
  uint64_t state_;
};

// Derives an independent sub-seed from a base seed and a path of identifiers
// (e.g. sub-query, shard index, client index). Derivation is what makes
// parallel evaluation order-independent: every client owns a stream keyed by
// its position, not by scheduling order.
inline uint64_t DeriveSeed(uint64_t base) { return Mix64(base); }

template <typename... Ids>
uint64_t DeriveSeed(uint64_t base, uint64_t id, Ids... rest) {
  return DeriveSeed(Mix64(base ^ Mix64(id)), rest...);
}

}  // namespace geohist

#endif  // GEOHIST_RNG_H_
