#include <benchmark/benchmark.h>

#include <sstream>

#include "routefed/federate.hpp"
#include "routefed/model.hpp"
#include "routefed/network.hpp"
#include "routefed/synthlab.hpp"

using namespace routefed;

namespace {

synth::SyntheticData corridor(int n_ics, int n_days) {
  synth::Scenario sc;
  sc.n_ics = n_ics;
  sc.n_days = n_days;
  return synth::generate(sc);
}

void BM_ShortestRoute(benchmark::State& state) {
  const auto data = corridor(static_cast<int>(state.range(0)), 1);
  const auto& nodes = data.graph.nodes();
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& a = nodes[i % nodes.size()].id;
    const auto& b = nodes[(i * 7 + 3) % nodes.size()].id;
    if (a != b) benchmark::DoNotOptimize(shortest_route(data.graph, a, b));
    ++i;
  }
}
BENCHMARK(BM_ShortestRoute)->Arg(16)->Arg(64)->Arg(256);

void BM_AccumulateTimeSpecified(benchmark::State& state) {
  const auto data = corridor(16, 7);
  std::vector<SearchRecord> spec;
  for (const auto& r : data.searches) {
    if (classify(r) == SearchClass::kTimeSpecified) spec.push_back(r);
  }
  const TimeGrid grid{data.traffic.front().timestamp, 5, 7 * 288};
  for (auto _ : state) benchmark::DoNotOptimize(accumulate_time_specified(spec, data.graph, grid));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * spec.size()));
}
BENCHMARK(BM_AccumulateTimeSpecified)->Unit(benchmark::kMillisecond);

void BM_AccumulateUnspecified(benchmark::State& state) {
  const auto data = corridor(16, 14);
  std::vector<SearchRecord> unspec;
  for (const auto& r : data.searches) {
    if (classify(r) == SearchClass::kNonTimeSpecified) unspec.push_back(r);
  }
  const TimeGrid grid{data.traffic.front().timestamp, 60, 14 * 24};
  for (auto _ : state) benchmark::DoNotOptimize(accumulate_unspecified(unspec, data.graph, grid));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * unspec.size()));
}
BENCHMARK(BM_AccumulateUnspecified)->Unit(benchmark::kMillisecond);

// One day of 5-minute traffic into 24 hourly steps for `K` segments.
struct ModelFixture {
  ModelConfig config;
  Sample sample;

  explicit ModelFixture(std::size_t K, std::size_t hidden) {
    config.segments = K;
    config.pooled_len = 24;
    config.lstm_hidden = hidden;
    config.output_size = 24;
    config.groups.push_back({GroupName::kTraffic, 3, 288, 12, true});
    config.groups.push_back({GroupName::kCalendar, 3, 24, 1, false});
    config.groups.push_back({GroupName::kStatic, 2, 1, 1, false});
    sample.group_names = {GroupName::kTraffic, GroupName::kCalendar, GroupName::kStatic};
    sample.inputs = {Tensor3(K, 288, 3, 0.1), Tensor3(K, 24, 3, 0.5), Tensor3(K, 1, 2, -0.2)};
    sample.target.assign(K * 24, 0.3);
  }
};

void BM_Forward(benchmark::State& state) {
  const ModelFixture f(static_cast<std::size_t>(state.range(0)), 64);
  const ForecastModel model(f.config, 1100);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(f.sample));
}
BENCHMARK(BM_Forward)->Arg(2)->Arg(30)->Unit(benchmark::kMicrosecond);

void BM_ForwardBackward(benchmark::State& state) {
  const ModelFixture f(static_cast<std::size_t>(state.range(0)), 64);
  const ForecastModel model(f.config, 1100);
  const Sample* batch[] = {&f.sample};
  std::vector<double> grad;
  for (auto _ : state) benchmark::DoNotOptimize(model.loss_and_gradient(batch, grad));
}
BENCHMARK(BM_ForwardBackward)->Arg(2)->Arg(30)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
