#include <benchmark/benchmark.h>

#include "repufed/dag.hpp"
#include "repufed/federation.hpp"
#include "repufed/privacy.hpp"
#include "repufed/rng.hpp"
#include "repufed/similarity.hpp"

using namespace repufed;

namespace {

TrajectorySegment random_segment(Rng& rng, int n) {
    TrajectorySegment seg;
    double x = 0, y = 0;
    for (int i = 0; i < n; ++i) {
        seg.push_back({i, x, y});
        x += rng.uniform(0.5, 1.5);
        y += rng.uniform(-0.3, 0.3);
    }
    return seg;
}

void BM_PairSimilarity(benchmark::State& state) {
    Rng rng(1);
    auto a = random_segment(rng, static_cast<int>(state.range(0)));
    auto b = random_segment(rng, static_cast<int>(state.range(0)));
    SimWeights w;
    for (auto _ : state)
        benchmark::DoNotOptimize(sim(a, b, w, 2.0));
}
BENCHMARK(BM_PairSimilarity)->Arg(32)->Arg(128)->Arg(512);

void BM_LaplacePerturb(benchmark::State& state) {
    std::vector<double> v(static_cast<std::size_t>(state.range(0)), 0.0);
    DpConfig cfg{0.5, 1.0, 7};
    for (auto _ : state)
        benchmark::DoNotOptimize(laplace_perturb(v, cfg));
}
BENCHMARK(BM_LaplacePerturb)->Arg(300)->Arg(10000);

void BM_GossipRound(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::vector<std::vector<int>> topo(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) topo[i].push_back(j);
    std::vector<LocalDag> dags(n, LocalDag::with_genesis());
    for (int v = 0; v < n; ++v)
        dags[v].append(TxKind::DataShareEvent, std::to_string(v), v, 0);
    std::uint64_t round = 0;
    for (auto _ : state) {
        auto copy = dags;
        gossip_round(copy, topo, 2, round++);
        benchmark::DoNotOptimize(copy);
    }
}
BENCHMARK(BM_GossipRound)->Arg(8)->Arg(20);

void BM_FederationSlot(benchmark::State& state) {
    WorldConfig cfg;
    cfg.synth.n_vehicles = static_cast<int>(state.range(0));
    cfg.synth.duration_frames = 80;
    cfg.tau = 4;
    cfg.t_f = 4;
    cfg.stride = 4;
    cfg.seed = 3;
    cfg.synth.seed = 3;
    FlConfig fl;
    fl.epochs_per_slot = 2;
    int slot = 0;
    World world = make_world(cfg);
    for (auto _ : state)
        benchmark::DoNotOptimize(run_slot(world, slot++, SlotMode::Afl, fl));
}
BENCHMARK(BM_FederationSlot)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
