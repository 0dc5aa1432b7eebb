// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "thermotob/features.hpp"
#include "thermotob/kernels.hpp"
#include "thermotob/simulator.hpp"

using namespace thermotob;

namespace {

std::vector<double> uniform(std::size_t n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

const std::vector<kernels::MixtureTerm> kTerms = {
    {22.0, 2.0, std::log(0.5)}, {30.0, 1.0, std::log(0.3)}, {36.0, 0.5, std::log(0.2)}};

template <bool Parallel>
void BM_EStep(benchmark::State& state) {
  const auto x = uniform(static_cast<std::size_t>(state.range(0)), 15.0, 40.0, 1);
  for (auto _ : state) {
    auto s = Parallel ? kernels::parallel::estep(x, kTerms) : kernels::serial::estep(x, kTerms);
    benchmark::DoNotOptimize(s.log_likelihood);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Normalize(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::vector<std::uint16_t> raw(static_cast<std::size_t>(state.range(0)));
  for (auto& r : raw) r = static_cast<std::uint16_t>(rng() % 16384);
  std::vector<double> out(raw.size());
  const CalibrationMap cal;
  for (auto _ : state) {
    if (Parallel) {
      kernels::parallel::normalize(raw, cal, 30.0, 45.0, out);
    } else {
      kernels::serial::normalize(raw, cal, 30.0, 45.0, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Fir(benchmark::State& state) {
  const auto x = uniform(static_cast<std::size_t>(state.range(0)), 0.0, 1.0, 3);
  std::vector<double> out(x.size());
  for (auto _ : state) {
    if (Parallel) {
      kernels::parallel::fir_moving_average(x, 25, out);
    } else {
      kernels::serial::fir_moving_average(x, 25, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Features(benchmark::State& state) {
  constexpr std::uint32_t w = 84, h = 63;
  std::vector<std::vector<double>> frames;
  for (int f = 0; f < state.range(0); ++f) frames.push_back(uniform(std::size_t{w} * h, 0.0, 1.0, 10 + f));
  for (auto _ : state) {
    auto fv = Parallel ? kernels::parallel::frame_features(frames, w, h) : kernels::serial::frame_features(frames, w, h);
    benchmark::DoNotOptimize(fv.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Render(benchmark::State& state) {
  sim::SuiteConfig cfg;
  cfg.duration_s = static_cast<double>(state.range(0));
  const auto s = sim::scenario_suite(1, sim::RoomMix::DeliveryOnly, 4, cfg)[0];
  for (auto _ : state) {
    auto r = Parallel ? sim::render_scene(s) : sim::render_scene_serial(s);
    benchmark::DoNotOptimize(r.video.frames.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.frame_count()));
}

}  // namespace

BENCHMARK(BM_EStep<false>)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_EStep<true>)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_Normalize<false>)->Arg(84 * 63)->Arg(1 << 20);
BENCHMARK(BM_Normalize<true>)->Arg(84 * 63)->Arg(1 << 20);
BENCHMARK(BM_Fir<false>)->Arg(1500)->Arg(1 << 20);
BENCHMARK(BM_Fir<true>)->Arg(1500)->Arg(1 << 20);
BENCHMARK(BM_Features<false>)->Arg(64);
BENCHMARK(BM_Features<true>)->Arg(64);
BENCHMARK(BM_Render<false>)->Arg(30)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Render<true>)->Arg(30)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
