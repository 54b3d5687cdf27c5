#include "defgpa/bench.hpp"

#include "defgpa/errors.hpp"

namespace defgpa {

RunParams preset_params(const LiverLikePreset& preset) {
  RunParams params;
  params.kernel = KernelSpec::gaussian_scaled(preset.p);
  params.mu = preset.mu;
  params.tps = preset.tps;
  params.gpa.allow_degenerate = true;
  return params;
}

BenchWorld make_bench_world(const LiverLikePreset& preset) {
  if (preset.m_train < 4 || preset.m_train > preset.m_total)
    throw ValidationError("bench: invalid train split size");
  SynthConfig config;
  config.m = preset.m_total;
  config.n = preset.n;
  config.d = 3;
  config.shape = SynthConfig::Shape::SphereSamples;
  config.shape_scale = preset.shape_scale;
  config.deform = SynthConfig::DeformKind::GaussianBumps;
  config.bumps = preset.bumps;
  config.noise_sigma = preset.noise_sigma;
  config.drop_fraction = preset.drop_fraction;
  config.pose_model = SynthConfig::PoseModel::CircleTrajectory;
  config.seed = preset.seed;

  BenchWorld world;
  auto [dataset, truth] = generate(config);
  world.dataset = std::move(dataset);
  world.truth = std::move(truth);

  const Index stride = preset.m_total / preset.m_train;
  std::vector<char> is_train(static_cast<size_t>(preset.m_total), 0);
  for (Index i = 0; i < preset.m_train; ++i)
    is_train[static_cast<size_t>(i * stride)] = 1;
  for (Index i = 0; i < preset.m_total; ++i)
    (is_train[static_cast<size_t>(i)] ? world.train_ids : world.test_ids).push_back(i);
  return world;
}

std::vector<BenchRow> run_liver_like(const LiverLikePreset& preset) {
  BenchWorld world = make_bench_world(preset);
  DatasetSplit split = split_dataset(world.dataset, world.test_ids);
  RunParams params = preset_params(preset);

  std::vector<BenchRow> rows;
  for (Method method : {Method::Rigid, Method::Affine, Method::Tps, Method::Kernel}) {
    FittedModel model = fit(split.train, method, params);
    EvalReport report = evaluate_on_split(model, split);
    rows.push_back(BenchRow{method, report.stats, model.fit_runtime_ms + report.runtime_ms});
  }
  return rows;
}

std::vector<BenchRow> run_extrapolation(const LiverLikePreset& preset, double fraction) {
  BenchWorld world = make_bench_world(preset);
  DatasetSplit split = split_dataset(world.dataset, world.test_ids);
  RunParams params = preset_params(preset);

  // Hold out a spatially contiguous region of the train correspondences,
  // seeded at the train point farthest from the centroid.
  Matrix train_map = select_columns(world.truth.map, world.train_ids);
  Vector centroid = train_map.rowwise().mean();
  Index seed_point = 0;
  double best = -1;
  for (Index i = 0; i < train_map.cols(); ++i) {
    double dist = (train_map.col(i) - centroid).norm();
    if (dist > best) {
      best = dist;
      seed_point = i;
    }
  }
  std::vector<Index> region = contiguous_region(train_map, fraction, seed_point);

  std::vector<BenchRow> rows;
  for (Method method : {Method::Rigid, Method::Affine, Method::Tps, Method::Kernel}) {
    EvalReport report = leave_region_out(split.train, region, method, params);
    rows.push_back(BenchRow{method, report.stats, report.runtime_ms});
  }
  return rows;
}

}  // namespace defgpa
