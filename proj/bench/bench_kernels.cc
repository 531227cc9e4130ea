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

// Compares the OpenMP kernels against their serial reference
// implementations on protocol-sized inputs.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "geohist/engine.h"
#include "geohist/noise.h"
#include "geohist/reference.h"
#include "geohist/rng.h"
#include "geohist/tree.h"

namespace {

using geohist::RngStream;
using geohist::engine::ClientVote;
using geohist::engine::NoiseMode;
using geohist::engine::ShardSpec;

std::vector<std::vector<ClientVote>> MakeClients(int n, int num_slots,
                                                 uint64_t seed) {
  RngStream rng(seed);
  std::vector<std::vector<ClientVote>> clients(n);
  for (int i = 0; i < n; ++i) {
    clients[i] = {{static_cast<int32_t>(rng.NextBelow(num_slots)), 1.0}};
  }
  return clients;
}

ShardSpec MakeSpec(int num_slots, int clients, NoiseMode mode) {
  ShardSpec spec;
  spec.num_slots = num_slots;
  spec.params = geohist::noise::ShardNoiseParams(1.0, 1, clients, 0.05);
  spec.dropout_rate = 0.05;
  spec.shard_seed = 42;
  spec.noise_mode = mode;
  return spec;
}

void BM_ShardPerClientKernel(benchmark::State& state) {
  const int clients = static_cast<int>(state.range(0));
  const int slots = static_cast<int>(state.range(1));
  const auto votes = MakeClients(clients, slots, 7);
  const auto spec = MakeSpec(slots, clients, NoiseMode::kPerClient);
  for (auto _ : state) {
    benchmark::DoNotOptimize(geohist::engine::RunShard(votes, spec));
  }
}
BENCHMARK(BM_ShardPerClientKernel)->Args({2000, 256})->Args({10000, 1024});

void BM_ShardPerClientSerial(benchmark::State& state) {
  const int clients = static_cast<int>(state.range(0));
  const int slots = static_cast<int>(state.range(1));
  const auto votes = MakeClients(clients, slots, 7);
  const auto spec = MakeSpec(slots, clients, NoiseMode::kPerClient);
  for (auto _ : state) {
    benchmark::DoNotOptimize(geohist::reference::RunShardSerial(votes, spec));
  }
}
BENCHMARK(BM_ShardPerClientSerial)->Args({2000, 256})->Args({10000, 1024});

void BM_ShardAggregatedKernel(benchmark::State& state) {
  const int clients = static_cast<int>(state.range(0));
  const int slots = static_cast<int>(state.range(1));
  const auto votes = MakeClients(clients, slots, 7);
  const auto spec = MakeSpec(slots, clients, NoiseMode::kAggregated);
  for (auto _ : state) {
    benchmark::DoNotOptimize(geohist::engine::RunShard(votes, spec));
  }
}
BENCHMARK(BM_ShardAggregatedKernel)->Args({10000, 1 << 20});

void BM_PolyaBatch(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    int64_t sink = 0;
#pragma omp parallel for reduction(+ : sink) schedule(static)
    for (int i = 0; i < n; ++i) {
      RngStream rng(geohist::DeriveSeed(99, i));
      sink += geohist::noise::SamplePolya(0.001, 0.3678794411714423, rng);
    }
    benchmark::DoNotOptimize(sink);
  }
}
BENCHMARK(BM_PolyaBatch)->Arg(1 << 20);

void BM_PolyaBatchSerial(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    int64_t sink = 0;
    for (int i = 0; i < n; ++i) {
      RngStream rng(geohist::DeriveSeed(99, i));
      sink += geohist::noise::SamplePolya(0.001, 0.3678794411714423, rng);
    }
    benchmark::DoNotOptimize(sink);
  }
}
BENCHMARK(BM_PolyaBatchSerial)->Arg(1 << 20);

geohist::qtree::PrefixTree MakeAdaptiveTree(int max_depth, int splits,
                                            uint64_t seed) {
  geohist::qtree::PrefixTree tree(max_depth);
  RngStream rng(seed);
  for (int s = 0; s < splits; ++s) {
    const auto& layout = tree.layout();
    const auto node = layout[rng.NextBelow(layout.size())];
    tree = tree.Split(node);
  }
  return tree;
}

void BM_ProjectKernel(benchmark::State& state) {
  const auto tree = MakeAdaptiveTree(10, 120, 5);
  std::vector<double> counts(tree.NumSlots(), 3.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(geohist::qtree::ProjectToMap(tree, counts, 1024));
  }
}
BENCHMARK(BM_ProjectKernel);

void BM_ProjectSerial(benchmark::State& state) {
  const auto tree = MakeAdaptiveTree(10, 120, 5);
  std::vector<double> counts(tree.NumSlots(), 3.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        geohist::reference::ProjectToMapSerial(tree, counts, 1024));
  }
}
BENCHMARK(BM_ProjectSerial);

}  // namespace

BENCHMARK_MAIN();
