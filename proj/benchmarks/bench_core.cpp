// Microbenchmarks for the hot paths: weight construction, backprop, gossip
// mixing and a full local epoch.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dynaweight/dataset.hpp"
#include "dynaweight/graph.hpp"
#include "dynaweight/model.hpp"
#include "dynaweight/protocol.hpp"
#include "dynaweight/rng.hpp"
#include "dynaweight/weighting.hpp"

namespace {

using namespace dynaweight;

void bench_metropolis_weights(benchmark::State& state) {
  Graph g = build_static_exponential(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(metropolis_weights(g));
  }
}
BENCHMARK(bench_metropolis_weights)->Arg(8)->Arg(32);

void bench_dynaweight_weights(benchmark::State& state) {
  Graph g = build_static_exponential(static_cast<int>(state.range(0)));
  std::vector<double> centralities(g.n);
  auto rng = make_rng(1);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (double& p : centralities) p = u(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dynaweight_weights(g, centralities));
  }
}
BENCHMARK(bench_dynaweight_weights)->Arg(8)->Arg(32);

void bench_gradient(benchmark::State& state) {
  ModelSpec spec;
  spec.layer_sizes = {16, 32, 10};
  ParamVector params = init_params(spec, 7);
  Dataset batch = generate_blobs(10, 16, 2, 1.0, 3);  // 20 samples
  for (auto _ : state) {
    benchmark::DoNotOptimize(gradient(params, spec, batch));
  }
}
BENCHMARK(bench_gradient);

void bench_gossip_step(benchmark::State& state) {
  Graph g = build_ring(8);
  WeightMatrix w = metropolis_weights(g);
  ModelSpec spec;
  spec.layer_sizes = {16, 32, 10};
  std::vector<ServerState> servers(8);
  for (int i = 0; i < 8; ++i) {
    servers[i].id = i;
    servers[i].params = init_params(spec, 100 + i);
  }
  for (auto _ : state) {
    gossip_phase(servers, g, w, 1);
    benchmark::DoNotOptimize(servers[0].params.data());
  }
}
BENCHMARK(bench_gossip_step);

void bench_local_epoch(benchmark::State& state) {
  ModelSpec spec;
  spec.layer_sizes = {16, 32, 10};
  Dataset shard = generate_blobs(10, 16, 25, 1.0, 5);  // 250 samples
  ServerState server;
  server.id = 0;
  server.params = init_params(spec, 9);
  server.shard = &shard;
  server.opt.base_lr = 1e-4;
  int epoch = 0;
  for (auto _ : state) {
    local_epoch(server, spec, epoch++, 16, 42);
    benchmark::DoNotOptimize(server.params.data());
  }
}
BENCHMARK(bench_local_epoch);

}  // namespace

BENCHMARK_MAIN();
