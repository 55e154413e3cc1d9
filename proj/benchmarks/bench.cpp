// Microbenchmarks for the hot paths: the backbone forward/backward pass and
// the distribution-aware samplers.

#include <benchmark/benchmark.h>

#include "curec/model.hpp"
#include "curec/transfer.hpp"

using namespace curec;

namespace {

scenario::ScenarioBundle make_bundle() {
  scenario::GeneratorConfig cfg;
  cfg.users = 200;
  cfg.initial_items = 100;
  cfg.new_items = {20, 20};
  cfg.tasks = {
      {scenario::TaskKind::Item, "click", 100, false},
      {scenario::TaskKind::Item, "cart", 200, false},
      {scenario::TaskKind::Item, "buy", 300, false},
  };
  return scenario::generate_synthetic(cfg, 7);
}

model::ModelState make_model(const scenario::ScenarioBundle& bundle) {
  model::ArchConfig arch;
  return model::init_model(arch, bundle.num_items, bundle.tasks, bundle.attributes, 7);
}

void bm_forward(benchmark::State& state) {
  auto bundle = make_bundle();
  auto m = make_model(bundle);
  auto view = scenario::materialize(bundle, 1, 100);
  const auto& tokens = view.sequences.front().tokens;
  for (auto _ : state) {
    Mat ek = model::forward(m, tokens, 1);
    benchmark::DoNotOptimize(ek.v.data());
  }
}
BENCHMARK(bm_forward);

void bm_forward_backward(benchmark::State& state) {
  auto bundle = make_bundle();
  auto m = make_model(bundle);
  auto view = scenario::materialize(bundle, 1, 100);
  const auto& tokens = view.sequences.front().tokens;
  Mat d_ek(m.arch.n, m.arch.f);
  for (int c = 0; c < m.arch.f; ++c) d_ek.at(m.arch.n - 1, c) = 1.0;
  for (auto _ : state) {
    model::ForwardCache cache;
    Mat ek = model::forward(m, tokens, 1, &cache);
    model::GradientSet grads;
    model::backward(m, 1, cache, d_ek, grads);
    benchmark::DoNotOptimize(ek.v.data());
  }
}
BENCHMARK(bm_forward_backward);

void bm_build_plan(benchmark::State& state) {
  auto bundle = make_bundle();
  auto m = make_model(bundle);
  auto view = scenario::materialize(bundle, 2, 200);
  transfer::record_task_mean(m, 1, scenario::materialize(bundle, 1, 100).label_space);
  auto frozen = model::snapshot(m);
  Rng rng(7);
  for (auto _ : state) {
    auto plan = transfer::build_plan(m, frozen, bundle, 2, {1}, view, 10.0, false, rng);
    benchmark::DoNotOptimize(plan.task_i);
  }
}
BENCHMARK(bm_build_plan);

}  // namespace

BENCHMARK_MAIN();
