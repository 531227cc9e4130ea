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

#include "geohist/noise.h"

#include <cmath>
#include <random>

namespace geohist {
namespace noise {

PrivacyLedger::PrivacyLedger(double eps_total) : eps_total_(eps_total) {
  if (!(eps_total > 0)) {
    throw std::invalid_argument("eps_total must be positive");
  }
}

void PrivacyLedger::Spend(double eps) {
  if (!(eps > 0)) {
    throw std::invalid_argument("ledger spends must be positive");
  }
  const double remaining = Remaining();
  if (eps > remaining + 1e-12) {
    throw BudgetExhaustedError(eps, remaining);
  }
  spent_.push_back(eps);
  if (eps == remaining) {
    // Spending the exact remainder zeroes the ledger without fp residue.
    spent_sum_ = eps_total_;
  } else {
    spent_sum_ += eps;
    if (spent_sum_ > eps_total_) spent_sum_ = eps_total_;
  }
}

int64_t SamplePolya(double alpha, double beta, RngStream& rng) {
  if (!(alpha > 0) || !(beta >= 0) || !(beta < 1)) {
    throw std::invalid_argument("Polya requires alpha > 0 and 0 <= beta < 1");
  }
  if (beta == 0) return 0;
  std::gamma_distribution<double> gamma(alpha, beta / (1.0 - beta));
  const double lambda = gamma(rng);
  if (lambda <= 0) return 0;
  std::poisson_distribution<int64_t> poisson(lambda);
  return poisson(rng);
}

double SigmaFromEps(double eps, int64_t delta) {
  if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
  if (delta < 1) throw std::invalid_argument("delta must be >= 1");
  const double beta = std::exp(-eps / static_cast<double>(delta));
  return std::sqrt(2.0 * beta) / (1.0 - beta);
}

double EpsFromSigma(double sigma, int64_t delta) {
  if (!(sigma > 0)) throw std::invalid_argument("sigma must be positive");
  if (delta < 1) throw std::invalid_argument("delta must be >= 1");
  // beta = (s^2 + 1 - sqrt(2 s^2 + 1)) / s^2, rewritten with the conjugate so
  // no cancellation occurs for small sigma.
  const double s2 = sigma * sigma;
  const double beta = s2 / (s2 + 1.0 + std::sqrt(2.0 * s2 + 1.0));
  return -static_cast<double>(delta) * std::log(beta);
}

NoiseParams ShardNoiseParams(double eps, int64_t delta, int64_t shard_size,
                             double dropout_rate) {
  if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
  if (shard_size < 1) throw std::invalid_argument("shard_size must be >= 1");
  if (!(dropout_rate >= 0) || dropout_rate >= 1) {
    throw std::invalid_argument("dropout_rate must be in [0, 1)");
  }
  NoiseParams params;
  params.alpha = 1.0 / ((1.0 - dropout_rate) * static_cast<double>(shard_size));
  params.beta = std::exp(-eps / static_cast<double>(delta));
  params.sensitivity = delta;
  params.epsilon = eps;
  return params;
}

}  // namespace noise
}  // namespace geohist
