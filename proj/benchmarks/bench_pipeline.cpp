#include <benchmark/benchmark.h>

#include <random>

#include "sonifw/ambience.hpp"
#include "sonifw/detector.hpp"
#include "sonifw/divergence.hpp"
#include "sonifw/dsp.hpp"

using namespace sonifw;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, 0.05);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    return v;
}

std::vector<double> distribution(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(n);
    double s = 0;
    for (double& x : v) s += x = u(rng) + 1e-6;
    for (double& x : v) x /= s;
    return v;
}

}  // namespace

static void BM_StftFrame(benchmark::State& state) {
    dsp::PipelineConfig cfg;
    dsp::SpectrumAnalyzer analyzer(cfg);
    AudioFrame frame;
    frame.samples = noise(cfg.frame_size, 1);
    for (auto _ : state) benchmark::DoNotOptimize(analyzer.analyze(frame));
}
BENCHMARK(BM_StftFrame);

static void BM_PipelinePushHop(benchmark::State& state) {
    dsp::SpectralPipeline pipeline({}, 44100);
    const auto hop = noise(1024, 2);
    for (auto _ : state) benchmark::DoNotOptimize(pipeline.push(hop));
    state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_PipelinePushHop);

static void BM_JensenShannon(benchmark::State& state) {
    std::mt19937_64 rng(3);
    const auto p = distribution(186, rng);
    const auto q = distribution(186, rng);
    for (auto _ : state) benchmark::DoNotOptimize(jensen_shannon(p, q));
}
BENCHMARK(BM_JensenShannon);

static void BM_RebuildBackground(benchmark::State& state) {
    std::mt19937_64 rng(4);
    detect::SpectralRingBuffer buf(431, 186);
    for (int i = 0; i < 431; ++i) {
        dsp::SpectralFrame f;
        f.bins = distribution(186, rng);
        f.frame_index = i;
        buf.push(f);
    }
    for (auto _ : state) benchmark::DoNotOptimize(detect::rebuild_background(buf, 1e-6));
}
BENCHMARK(BM_RebuildBackground);

static void BM_DetectorStep(benchmark::State& state) {
    dsp::PipelineConfig pc;
    dsp::SpectralPipeline pipeline(pc, 44100);
    detect::Detector detector({}, pc, 44100, "bench");
    AmbienceGenerator amb{AmbienceConfig{}};
    std::vector<dsp::SpectralFrame> frames;
    std::vector<double> block(1024);
    while (frames.size() < 2000) {
        amb.generate_into(block);
        for (auto& f : pipeline.push(block)) frames.push_back(std::move(f));
    }
    std::size_t i = 0;
    for (auto _ : state) {
        auto& f = frames[i % frames.size()];
        f.frame_index = static_cast<std::int64_t>(i++);
        benchmark::DoNotOptimize(detector.process(f));
    }
}
BENCHMARK(BM_DetectorStep);
BENCHMARK_MAIN();
