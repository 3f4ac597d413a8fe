#include <benchmark/benchmark.h>

#include "crfdn/ccrf.hpp"
#include "crfdn/diffusion.hpp"
#include "crfdn/eval.hpp"
#include "crfdn/graph.hpp"

namespace {

using namespace crfdn;

DescriptorSet make_data(int n_per_manifold, double noise = 0.07, uint64_t seed = 1) {
    return synth_manifolds(n_per_manifold, noise, SynthShape::two_moons, seed).X;
}

void BM_BuildKnn(benchmark::State& state) {
    const int n_per = static_cast<int>(state.range(0)) / 2;
    const DescriptorSet X = make_data(n_per);
    for (auto _ : state) {
        KnnLists knn = build_knn(X, 10, 3.0, 1);
        benchmark::DoNotOptimize(knn.neighbors.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildKnn)->Arg(200)->Arg(400)->Arg(1000)->Complexity(benchmark::oNSquared);

void BM_WeightMatrix(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    const DescriptorSet X = make_data(std::max(200, L));
    const KnnLists knn = build_knn(X, L, 3.0, 1);
    const Clique clique = build_clique(X, knn, 0, L, 3.0);
    for (auto _ : state) {
        std::vector<double> w = weight_matrix(X, clique, 0.06, 3.5e-4);
        benchmark::DoNotOptimize(w.data());
    }
    state.SetComplexityN(L);
}
BENCHMARK(BM_WeightMatrix)->Arg(64)->Arg(128)->Arg(256)->Arg(512)->Complexity();

void BM_InferCg(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    const DescriptorSet X = make_data(std::max(200, L));
    const KnnLists knn = build_knn(X, L, 3.0, 1);
    const Clique clique = build_clique(X, knn, 0, L, 3.0);
    const std::vector<double> w = weight_matrix(X, clique, 0.06, 3.5e-4);
    const CcrfSystem sys = assemble_system(clique, w, 1.0, 0.1);
    for (auto _ : state) {
        std::vector<double> y = infer(sys, SolverKind::cg, 1e-6, 0);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_InferCg)->Arg(64)->Arg(128)->Arg(256)->Arg(512);

void BM_InferDirect(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    const DescriptorSet X = make_data(std::max(200, L));
    const KnnLists knn = build_knn(X, L, 3.0, 1);
    const Clique clique = build_clique(X, knn, 0, L, 3.0);
    const std::vector<double> w = weight_matrix(X, clique, 0.06, 3.5e-4);
    const CcrfSystem sys = assemble_system(clique, w, 1.0, 0.1);
    for (auto _ : state) {
        std::vector<double> y = infer(sys, SolverKind::direct, 1e-6, 0);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_InferDirect)->Arg(64)->Arg(128)->Arg(256);

void BM_DenoiseDatabase(benchmark::State& state) {
    const int n_per = static_cast<int>(state.range(0)) / 2;
    const DescriptorSet X = make_data(n_per);
    CcrfParams params;
    params.sigma_d = 0.06;
    params.sigma_r = 3.5e-4;
    params.L = 80;
    params.k_out = 10;
    params.gamma = 5.0;
    params.alpha = 1.0;
    params.beta = 10.0;
    for (auto _ : state) {
        SparseAffinity A = denoise_database(X, params);
        benchmark::DoNotOptimize(A.rows.data());
    }
}
BENCHMARK(BM_DenoiseDatabase)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_DiffuseClosedForm(benchmark::State& state) {
    const int n_per = static_cast<int>(state.range(0)) / 2;
    const DescriptorSet X = make_data(n_per);
    const KnnLists knn = build_knn(X, 10, 3.0, 1);
    const NormalizedAffinity S = symmetric_normalize(reciprocity_affinity(knn));
    std::vector<double> v0(static_cast<size_t>(S.n), 0.0);
    v0[0] = 1.0;
    for (auto _ : state) {
        std::vector<double> v = diffuse_closed_form(S, v0, 0.99, 1e-6);
        benchmark::DoNotOptimize(v.data());
    }
}
BENCHMARK(BM_DiffuseClosedForm)->Arg(200)->Arg(1000)->Arg(4000);

void BM_OfflinePrecompute(benchmark::State& state) {
    const int n_per = static_cast<int>(state.range(0)) / 2;
    const DescriptorSet X = make_data(n_per);
    const KnnLists knn = build_knn(X, 10, 3.0, 1);
    const NormalizedAffinity S = symmetric_normalize(reciprocity_affinity(knn));
    for (auto _ : state) {
        OfflineIndex index = offline_precompute(S, 0.99, 50, 1e-6, 1000, 1);
        benchmark::DoNotOptimize(index.columns.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_OfflinePrecompute)->Arg(200)->Arg(400)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
