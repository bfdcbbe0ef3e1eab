#include <benchmark/benchmark.h>

#include "strongenv/envelope.hpp"
#include "strongenv/instance.hpp"
#include "strongenv/oracle.hpp"

using namespace strongenv;

namespace {

Instance bench_instance(int depth, int branching)
{
    RandomInstanceSpec spec;
    spec.seed = 42;
    spec.depth = depth;
    spec.branching = branching;
    return make_random_instance(spec);
}

void bm_direct_recursion(benchmark::State& state)
{
    const Instance inst = bench_instance(static_cast<int>(state.range(0)), 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(direct_recursion(inst.tree, inst.grid, inst.obstacle));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(inst.tree.node_count()));
}

void bm_penalized_sweep(benchmark::State& state)
{
    const Instance inst = bench_instance(static_cast<int>(state.range(0)), 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(penalized_envelope(inst.tree, inst.grid, inst.obstacle, 1e6));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(inst.tree.node_count()));
}

void bm_strong_envelope(benchmark::State& state)
{
    const Instance inst = bench_instance(static_cast<int>(state.range(0)), 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(strong_envelope(inst.tree, inst.grid, inst.obstacle));
    }
}

void bm_doob_meyer(benchmark::State& state)
{
    const Instance inst = bench_instance(static_cast<int>(state.range(0)), 2);
    const AdaptedProcess u = direct_recursion(inst.tree, inst.grid, inst.obstacle);
    for (auto _ : state) {
        benchmark::DoNotOptimize(doob_meyer(inst.tree, u));
    }
}

void bm_enumeration_root_value(benchmark::State& state)
{
    const Instance inst = make_small_instance(7, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(root_value_by_enumeration(inst.tree, inst.grid, inst.obstacle));
    }
}

void bm_value_iteration(benchmark::State& state)
{
    const Instance inst = bench_instance(static_cast<int>(state.range(0)), 2);
    double start = 0.0;
    for (NodeId n = 0; n < static_cast<NodeId>(inst.tree.non_cemetery_count()); ++n)
        if (inst.grid.is_weighted(inst.tree.level(n)))
            start = std::max(start, inst.obstacle[n]);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            envelope_by_value_iteration(inst.tree, inst.grid, inst.obstacle, start));
    }
}

} // namespace

BENCHMARK(bm_direct_recursion)->Arg(6)->Arg(10)->Arg(14);
BENCHMARK(bm_penalized_sweep)->Arg(6)->Arg(10)->Arg(14);
BENCHMARK(bm_strong_envelope)->Arg(6)->Arg(10);
BENCHMARK(bm_doob_meyer)->Arg(6)->Arg(10)->Arg(14);
BENCHMARK(bm_enumeration_root_value)->Arg(8)->Arg(12);
BENCHMARK(bm_value_iteration)->Arg(6)->Arg(10);

BENCHMARK_MAIN();
