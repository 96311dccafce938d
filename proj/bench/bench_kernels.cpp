// Serial against OpenMP versions of the hot kernels on one fixed instance.

#include <benchmark/benchmark.h>

#include "sobext/operators.hpp"

using namespace sobext;

namespace {

const Instance& instance() {
  static const Instance inst = Instance::build(random_tree({.arity = 2, .depth = 1, .epsilon = 0.005}, 0));
  return inst;
}

const PatchedInterpolant& interpolant() {
  static const PatchedInterpolant F = [] {
    const auto& inst = instance();
    const LeafFunction phi = random_leaf_data(inst.tree.leaf_count(), 1, 0);
    return planar_extend(inst, PlanarData::from_leaf_values(phi, inst.ps),
                         make_tree_backend(TreeBackend::Averaging, 1.5));
  }();
  return F;
}

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::Parallel : Exec::Serial; }

void BM_neighbors(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(instance().wd->build_neighbors(exec_of(st)));
}

void BM_assign_clusters(benchmark::State& st) {
  const auto& inst = instance();
  for (auto _ : st) benchmark::DoNotOptimize(assign_clusters(inst.ct, *inst.wd, exec_of(st)));
}

void BM_patching_sum(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(patching_sum(interpolant(), 1.5, exec_of(st)));
}

void BM_planar_seminorms(benchmark::State& st) {
  QuadOptions q;
  q.exec = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(planar_seminorms(interpolant(), {1.25, 1.5, 1.75}, q));
}

void BM_tabulated_seminorms(benchmark::State& st) {
  const auto& inst = instance();
  QuadOptions q;
  q.exec = exec_of(st);
  const VerticalFieldQuadrature vq(inst.wd, inst.as.cluster, static_cast<int>(inst.tree.size()), inst.tree.root(), q);
  NodeFunction Phi{std::vector<double>(inst.tree.size(), 0.0)};
  for (std::size_t i = 0; i < Phi.values.size(); ++i) Phi.values[i] = 0.1 * static_cast<double>(i);
  for (auto _ : st) benchmark::DoNotOptimize(vq.seminorms(Phi.values, {1.25, 1.5, 1.75}));
}

}  // namespace

BENCHMARK(BM_neighbors)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_assign_clusters)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_patching_sum)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_planar_seminorms)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_tabulated_seminorms)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
