// Serial reference vs OpenMP for the per-sample and per-node kernels.
// Arg(0) is ExecutionPolicy::serial, Arg(1) is ExecutionPolicy::parallel.

#include <benchmark/benchmark.h>

#include "nearcomm/field.hpp"
#include "nearcomm/generate.hpp"
#include "nearcomm/homotopy.hpp"

using namespace nearcomm;

namespace {

ExecutionPolicy policy_of(const benchmark::State& state) {
    return state.range(0) == 0 ? ExecutionPolicy::serial : ExecutionPolicy::parallel;
}

AlmostCommutingPair bench_pair(std::size_t dim) {
    GeneratorSpec spec;
    spec.seed = 11;
    spec.dim = dim;
    spec.target_delta = 1e-6;
    return gen_almost_commuting_pair(spec);
}

const HomotopyResult& bench_homotopy() {
    static const AlmostCommutingPair pair = bench_pair(16);
    static const HomotopyResult result = build_homotopy(pair.h, pair.u, 1e-6, 64);
    return result;
}

void BM_MeasureSamples(benchmark::State& state) {
    const auto& r = bench_homotopy();
    const ComplexMatrix h = bench_pair(16).h.matrix();
    for (auto _ : state) {
        auto metrics = measure_samples(r.retracted.samples, h, policy_of(state));
        benchmark::DoNotOptimize(metrics.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(r.retracted.samples.size()));
}
BENCHMARK(BM_MeasureSamples)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_VerifyCertificate(benchmark::State& state) {
    const auto& r = bench_homotopy();
    const AlmostCommutingPair pair = bench_pair(16);
    for (auto _ : state) {
        auto report = verify_certificate(r.retracted, pair.h, r.certificate, policy_of(state));
        benchmark::DoNotOptimize(report.passed);
    }
}
BENCHMARK(BM_VerifyCertificate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_StitchField(benchmark::State& state) {
    GeneratorSpec spec;
    spec.seed = 5;
    spec.n = 4;
    spec.p = 2;
    spec.shape = FieldShape::avoided_crossing;
    spec.crossing_gap = 0.05;
    spec.grid_size = 401;
    static const OperatorField field = gen_field(spec);
    StitchOptions opt;
    opt.policy = policy_of(state);
    for (auto _ : state) {
        auto f = stitch_field(field, 1e-2, opt);
        benchmark::DoNotOptimize(f.max_jump());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(field.grid.size()));
}
BENCHMARK(BM_StitchField)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
