#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "bubbleid/kernels/dense.hpp"
#include "bubbleid/kernels/edt.hpp"
#include "bubbleid/kernels/fusion.hpp"
#include "bubbleid/synthgen.hpp"

using namespace bubbleid;

namespace {

const LabelMap& scene_labels() {
    static const LabelMap labels = [] {
        SceneConfig cfg;
        cfg.width = cfg.height = 1024;
        cfg.target_alpha = 0.1;
        return compose_alpha_scene(cfg, 7).labels;
    }();
    return labels;
}

void BM_EdtSerial(benchmark::State& s) {
    for (auto _ : s) benchmark::DoNotOptimize(kernels::instance_sq_edt_serial(scene_labels()));
}
void BM_EdtOmp(benchmark::State& s) {
    for (auto _ : s) benchmark::DoNotOptimize(kernels::instance_sq_edt_omp(scene_labels()));
}

void BM_WeightMapSerial(benchmark::State& s) {
    for (auto _ : s) benchmark::DoNotOptimize(kernels::weight_map_serial(scene_labels(), 10.0, {}));
}
void BM_WeightMapOmp(benchmark::State& s) {
    for (auto _ : s) benchmark::DoNotOptimize(kernels::weight_map_omp(scene_labels(), 10.0, {}));
}

struct SeedProblem {
    std::vector<Pixel> targets;
    std::vector<int> group;
    std::vector<std::vector<kernels::SeedPixel>> candidates;
};

const SeedProblem& seed_problem() {
    static const SeedProblem p = [] {
        SeedProblem q;
        std::mt19937_64 rng(5);
        q.candidates.resize(16);
        for (auto& c : q.candidates) {
            for (int i = 0; i < 400; ++i) c.push_back({int(rng() % 512), int(rng() % 512), Label(1 + rng() % 8)});
        }
        for (int i = 0; i < 50000; ++i) {
            q.targets.push_back({int(rng() % 512), int(rng() % 512)});
            q.group.push_back(int(rng() % 16));
        }
        return q;
    }();
    return p;
}

void BM_NearestSeedSerial(benchmark::State& s) {
    const SeedProblem& p = seed_problem();
    for (auto _ : s) benchmark::DoNotOptimize(kernels::nearest_seed_serial(p.targets, p.group, p.candidates));
}
void BM_NearestSeedOmp(benchmark::State& s) {
    const SeedProblem& p = seed_problem();
    for (auto _ : s) benchmark::DoNotOptimize(kernels::nearest_seed_omp(p.targets, p.group, p.candidates));
}

struct Batch {
    Mlp net{{64, 64, 64, 64, 64}};
    std::vector<double> x, y, grad;
    std::vector<std::size_t> idx;
};

Batch& batch() {
    static Batch b = [] {
        Batch q;
        Rng rng(1);
        q.net.init_uniform(rng);
        std::mt19937_64 g(2);
        std::normal_distribution<double> N(0.0, 1.0);
        const std::size_t n = 4096;
        q.x.resize(n * 64);
        q.y.resize(n * 64);
        for (double& v : q.x) v = N(g);
        for (double& v : q.y) v = N(g);
        q.idx.resize(n);
        std::iota(q.idx.begin(), q.idx.end(), 0);
        q.grad.resize(q.net.parameter_count());
        return q;
    }();
    return b;
}

void BM_MseGradientSerial(benchmark::State& s) {
    Batch& b = batch();
    for (auto _ : s) {
        benchmark::DoNotOptimize(kernels::mse_gradient_serial(b.net, {b.x, 64}, {b.y, 64}, b.idx, b.grad));
    }
}
void BM_MseGradientOmp(benchmark::State& s) {
    Batch& b = batch();
    for (auto _ : s) {
        benchmark::DoNotOptimize(kernels::mse_gradient_omp(b.net, {b.x, 64}, {b.y, 64}, b.idx, b.grad));
    }
}

}  // namespace

BENCHMARK(BM_EdtSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EdtOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WeightMapSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WeightMapOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestSeedSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestSeedOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MseGradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MseGradientOmp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
