// Microbenchmarks: recurrent step latency (the inference-critical path),
// chunkwise training throughput as a function of chunk size, and the raw
// matmul kernel in both precisions.

#include <benchmark/benchmark.h>

#include <random>

#include <lf2w/backbone.hpp>
#include <lf2w/estimator.hpp>

using namespace lf2w;

namespace {

BackboneConfig bench_cfg(Variant variant, std::size_t chunk) {
    BackboneConfig cfg;
    cfg.n_layers = 2;
    cfg.d_model = 64;
    cfg.d_k = 16;
    cfg.d_v = 16;
    cfg.n_heads = 2;
    cfg.d_ff = 128;
    cfg.chunk_size = chunk;
    cfg.variant = variant;
    return cfg;
}

std::vector<Vector> random_tokens(std::size_t n, std::size_t d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vector> xs(n, Vector(d));
    for (auto& x : xs)
        for (std::size_t i = 0; i < d; ++i) x[i] = u(rng);
    return xs;
}

void bm_recurrent_step(benchmark::State& state, Variant variant) {
    const BackboneConfig cfg = bench_cfg(variant, 16);
    std::mt19937_64 rng(1);
    ParamStore ps;
    init_backbone_params(ps, cfg, rng);
    const std::vector<Vector> xs = random_tokens(64, cfg.d_model, rng);
    BackboneState st = zero_state(cfg);
    std::size_t t = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward_recurrent(st, xs[t++ % xs.size()], ps, cfg));
    }
    state.SetItemsProcessed(state.iterations());
}

void bm_chunkwise(benchmark::State& state, Variant variant) {
    const std::size_t chunk = std::size_t(state.range(0));
    const BackboneConfig cfg = bench_cfg(variant, chunk);
    std::mt19937_64 rng(2);
    ParamStore ps;
    init_backbone_params(ps, cfg, rng);
    const std::vector<Vector> xs = random_tokens(256, cfg.d_model, rng);
    const BackboneState st0 = zero_state(cfg);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward_chunkwise(st0, xs, ps, cfg));
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(xs.size()));
}

template <typename T>
void bm_matmul(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Mat<T> a(n, n), b(n, n);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a.data()[i] = T(u(rng));
        b.data()[i] = T(u(rng));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(matmul(a, b));
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(2 * n * n * n));
}

void bm_estimator_step(benchmark::State& state) {
    EstimatorConfig cfg;  // default desk-scale estimator
    std::mt19937_64 rng(4);
    ParamStore ps;
    init_estimator_params(ps, cfg, rng);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Observation obs{Vector(cfg.h_d), Vector(cfg.d_o)};
    for (std::size_t i = 0; i < cfg.h_d; ++i) obs.extero[i] = u(rng);
    for (std::size_t i = 0; i < cfg.d_o; ++i) obs.proprio[i] = u(rng);
    BackboneState st = zero_state(cfg.backbone);
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimator_step(st, obs, ps, cfg));
    }
    state.SetItemsProcessed(state.iterations());
}

} // namespace

BENCHMARK_CAPTURE(bm_recurrent_step, delta, Variant::DeltaRule);
BENCHMARK_CAPTURE(bm_recurrent_step, gated, Variant::GatedDelta);
BENCHMARK_CAPTURE(bm_recurrent_step, linear, Variant::LinearAttention);

BENCHMARK_CAPTURE(bm_chunkwise, delta, Variant::DeltaRule)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK_CAPTURE(bm_chunkwise, gated, Variant::GatedDelta)->Arg(16)->Arg(64);
BENCHMARK_CAPTURE(bm_chunkwise, linear, Variant::LinearAttention)->Arg(16)->Arg(64);

BENCHMARK_TEMPLATE(bm_matmul, float)->Arg(64)->Arg(128);
BENCHMARK_TEMPLATE(bm_matmul, double)->Arg(64)->Arg(128);

BENCHMARK(bm_estimator_step);

BENCHMARK_MAIN();
