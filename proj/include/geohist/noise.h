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

#ifndef GEOHIST_NOISE_H_
#define GEOHIST_NOISE_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "geohist/rng.h"

namespace geohist {
namespace noise {

// Per-client noise share parameters. One client adds the difference of two
// Polya(alpha, beta) draws to every vector entry; across the clients of one
// shard the shares sum to discrete Laplace noise.
struct NoiseParams {
  double alpha = 1.0;        // Polya shape, per-client share
  double beta = 0.0;         // Polya success parameter, in [0, 1)
  int64_t sensitivity = 1;   // L1 sensitivity of one client vector
  double epsilon = 0.0;      // the budget this was built for; beta=exp(-eps/sens)
};

// Thrown when a spend would push a ledger past its total budget.
class BudgetExhaustedError : public std::runtime_error {
 public:
  BudgetExhaustedError(double requested, double remaining)
      : std::runtime_error("privacy budget exhausted: requested " +
                           std::to_string(requested) + " with " +
                           std::to_string(remaining) + " remaining"),
        requested_(requested),
        remaining_(remaining) {}

  double requested() const { return requested_; }
  double remaining() const { return remaining_; }

 private:
  double requested_;
  double remaining_;
};

// Running accountant for basic epsilon composition. Spends are append-only
// and may never exceed the total budget (beyond fp slack of 1e-12).
class PrivacyLedger {
 public:
  explicit PrivacyLedger(double eps_total);

  // Appends one sub-query spend. Throws BudgetExhaustedError if the spend
  // would overdraw the budget. Spending exactly Remaining() zeroes the
  // ledger out exactly.
  void Spend(double eps);

  double Remaining() const { return eps_total_ - spent_sum_; }
  double Total() const { return eps_total_; }
  double SpentSum() const { return spent_sum_; }
  const std::vector<double>& Spent() const { return spent_; }

 private:
  double eps_total_;
  double spent_sum_ = 0.0;
  std::vector<double> spent_;
};

// One draw from Polya(alpha, beta): lambda ~ Gamma(alpha, beta/(1-beta)),
// then Poisson(lambda). beta = 0 forces a zero-scale Gamma and returns 0.
int64_t SamplePolya(double alpha, double beta, RngStream& rng);

inline int64_t SamplePolya(const NoiseParams& params, RngStream& rng) {
  return SamplePolya(params.alpha, params.beta, rng);
}

// One client's noise share: X - Y for independent X, Y ~ Polya(alpha, beta).
inline int64_t NoiseShare(const NoiseParams& params, RngStream& rng) {
  return SamplePolya(params.alpha, params.beta, rng) -
         SamplePolya(params.alpha, params.beta, rng);
}

// Same distribution as the sum of `shape/alpha` independent shares: the
// difference of two Polya(shape, beta) draws. Used by the aggregated noise
// path, which adds the whole shard's noise at once.
inline int64_t SummedNoise(double shape, double beta, RngStream& rng) {
  return SamplePolya(shape, beta, rng) - SamplePolya(shape, beta, rng);
}

// Standard deviation of discrete Laplace noise at budget eps and sensitivity
// delta: sqrt(2b/(1-b)^2) with b = exp(-eps/delta).
double SigmaFromEps(double eps, int64_t delta);

// Exact inverse of SigmaFromEps: the budget whose discrete Laplace noise has
// standard deviation sigma.
double EpsFromSigma(double sigma, int64_t delta);

// Per-client parameters for one shard: alpha = 1/((1-dropout_rate)*shard_size)
// so the noise shares of the worst-case survivor count sum to a full discrete
// Laplace draw.
NoiseParams ShardNoiseParams(double eps, int64_t delta, int64_t shard_size,
                             double dropout_rate);

}  // namespace noise
}  // namespace geohist

#endif  // GEOHIST_NOISE_H_
