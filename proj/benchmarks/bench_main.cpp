/*
   Copyright 2026 The kmix Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/


#include <cstdint>

#include <benchmark/benchmark.h>

#include "kmix/dist.hpp"
#include "kmix/flow.hpp"
#include "kmix/lsv.hpp"
#include "kmix/random.hpp"
#include "kmix/stable.hpp"

namespace {

void BM_Philox(benchmark::State& state) {
    kmix::RandomStream rng(42, "bench", 0);
    for (auto _ : state) benchmark::DoNotOptimize(rng.uniform());
}
BENCHMARK(BM_Philox);

void BM_StableRho(benchmark::State& state) {
    kmix::StableDensity sd(0.75);
    double z = 0.3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sd.rho(z));
        z = z < 5.0 ? z * 1.01 : 0.3;
    }
}
BENCHMARK(BM_StableRho);

void BM_ConvolveFft(benchmark::State& state) {
    const auto n = static_cast<double>(state.range(0));
    auto model = kmix::TailModel::constant(0.5);
    auto d = kmix::discretize(model, 1.0, n, kmix::DiscretizeRule::MeanPreserving);
    for (auto _ : state) benchmark::DoNotOptimize(kmix::convolve(d, d, n, kmix::ConvolveMethod::Fft));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConvolveFft)->RangeMultiplier(4)->Range(1 << 12, 1 << 20)->Unit(benchmark::kMillisecond);

void BM_ConvolvePower(benchmark::State& state) {
    auto model = kmix::TailModel::constant(0.5);
    auto d = kmix::discretize(model, 16.0, 1 << 20, kmix::DiscretizeRule::MeanPreserving);
    for (auto _ : state)
        benchmark::DoNotOptimize(kmix::convolve_power(d, static_cast<std::uint64_t>(state.range(0))));
}
BENCHMARK(BM_ConvolvePower)->Arg(16)->Arg(256)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_InducedStep(benchmark::State& state) {
    kmix::LsvSystem sys(static_cast<double>(state.range(0)) / 2.0, 4096);
    kmix::InducedEngine engine(sys);
    double x = 0.7;
    for (auto _ : state) {
        auto s = engine.step(x);
        x = s.next;
        benchmark::DoNotOptimize(s.point_sum);
    }
}
BENCHMARK(BM_InducedStep)->Arg(3)->Arg(4);

void BM_CorrelationMc(benchmark::State& state) {
    auto law = kmix::RoofLaw::continuous(kmix::TailModel::constant(0.5));
    kmix::ProductSet a{0.0, std::numeric_limits<double>::infinity(), 0.0, 0.4};
    kmix::CorrelationOptions opt;
    opt.n_samples = 20000;
    for (auto _ : state) benchmark::DoNotOptimize(kmix::correlation_mc(law, a, a, 1000.0, opt));
    state.SetItemsProcessed(state.iterations() * 20000);
}
BENCHMARK(BM_CorrelationMc)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
