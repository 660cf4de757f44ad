#include <benchmark/benchmark.h>

#include "toolmotion/pipeline.hpp"
#include "toolmotion/synth.hpp"

using namespace toolmotion;

namespace {

void BM_PlaneTrack(benchmark::State& state) {
  const PlaneSweep sweep = generate_plane_sweep({8.0, 0.1}, 1.0, static_cast<double>(state.range(0)), 40.0, 5);
  HeadModel model;
  model.mode = HeadMode::Estimated1Dof;
  model.axis = sweep.axis;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_plane_track(sweep.tips, sweep.initial_plane, model));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sweep.tips.size()));
}
BENCHMARK(BM_PlaneTrack)->Arg(10)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_DetectStrokes(benchmark::State& state) {
  const GeneratedTrial g = generate_trial(default_novice_profile(), {}, 6);
  const TrialReport report = process_trial(g.trial, PipelineConfig{});
  const SubTrial& sub = report.subtrials.front().subtrial;
  const NoseRegistration& reg = report.registration;
  const StrokeConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(detect_strokes(sub.tip_trajectory, reg.plane, reg.basis, reg.nose_center, cfg));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sub.tip_trajectory.size()));
}
BENCHMARK(BM_DetectStrokes)->Unit(benchmark::kMicrosecond);

void BM_ProcessTrial(benchmark::State& state) {
  PipelineConfig cfg;
  cfg.head_mode = state.range(0) ? HeadModeChoice::Estimate : HeadModeChoice::Sensor;
  const GeneratedTrial g = generate_trial(default_expert_profile(), {}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(process_trial(g.trial, cfg));
}
BENCHMARK(BM_ProcessTrial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
