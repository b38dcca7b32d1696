#include <benchmark/benchmark.h>

#include "twinhet/twinhet.hpp"

using namespace twinhet;

namespace {

KetState dtb(double l, cplx w, int n) {
    return displaced_twin_beams(DisplacedTwinBeamParams(TwinBeamParams(l), w), Truncation(n, 2));
}

void BM_TwinBeamKet(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(dtb(0.6, cplx(1.0, 0.5), n));
}
BENCHMARK(BM_TwinBeamKet)->Arg(16)->Arg(40);

// one real eigendecomposition per radius; the direct Tr[F rho] route
void BM_RadialPom(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    KetState psi = dtb(0.6, 1.0, n);
    DetectorParams det(0.6);
    for (auto _ : st) {
        RadialPom rp(1.0, det.delta_sq(), psi.truncation());
        benchmark::DoNotOptimize(rp.density(psi.amplitudes(), 0.3));
    }
}
BENCHMARK(BM_RadialPom)->Arg(12)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_FrameDensityGrid(benchmark::State& st) {
    KetState psi = dtb(0.6, 1.0, 20);
    DetectorParams det(0.6);
    CurrentFrame f(frame_cutoff_for(20, det.delta_sq()));
    FrameState s = FrameState::from_fock(f, psi);
    RVector xs = RVector::LinSpaced(st.range(0), -2, 4), ys = RVector::LinSpaced(st.range(0), -3, 3);
    for (auto _ : st) benchmark::DoNotOptimize(frame_density_grid(f, s, xs, ys, det.delta_sq()));
}
BENCHMARK(BM_FrameDensityGrid)->Arg(101)->Unit(benchmark::kMillisecond);

void BM_Sequence(benchmark::State& st) {
    KetState psi = dtb(0.6, 1.0, 20);
    DetectorParams det(0.6, st.range(1) ? 0.8 : 1.0);
    SamplerSpec spec;
    for (auto _ : st) benchmark::DoNotOptimize(run_sequence(psi, static_cast<int>(st.range(0)), det, spec));
}
BENCHMARK(BM_Sequence)->Args({5, 0})->Args({5, 1})->Unit(benchmark::kMillisecond);

void BM_Sensitivity(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(sensitivity_sweep({10, 20, 40}, 1.0));
}
BENCHMARK(BM_Sensitivity)->Unit(benchmark::kMillisecond);

void BM_InteractionUnitary(benchmark::State& st) {
    FourModeSystem sys(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(interaction_unitary(sys));
}
BENCHMARK(BM_InteractionUnitary)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_ResonantTerms(benchmark::State& st) {
    FrequencyPlan p = plan_frequencies(1, 3, 4.5);
    for (auto _ : st) benchmark::DoNotOptimize(enumerate_resonant_terms(p));
}
BENCHMARK(BM_ResonantTerms);

}  // namespace

BENCHMARK_MAIN();
