#pragma once

#include "defgpa/evaluation.hpp"
#include "defgpa/synthetic.hpp"

namespace defgpa {

/// Desk-scale stand-in for the paper-style organ benchmark: a deforming
/// sphere-sampled surface observed from a circular trajectory, registered
/// from a strided subset of correspondences and scored on the rest.
struct LiverLikePreset {
  Index m_total = 1005;
  Index m_train = 201;  // every (m_total / m_train)-th point
  int n = 60;
  double shape_scale = 100.0;  // organ-sized: ~200 length units across
  double noise_sigma = 1.0;
  double drop_fraction = 0.3;
  GaussianBumpDeform bumps{90, 19.0, 44.0};
  double p = 0.25;
  double mu = 0.1;
  TpsGpaConfig tps{5, 0.01};
  uint64_t seed = 7;
};

struct BenchRow {
  Method method;
  Stats stats;
  double runtime_ms = 0;
};

/// Registers the train split with all four methods and reports the test
/// consistency statistics per method (rigid, affine, tps, kernel order).
std::vector<BenchRow> run_liver_like(const LiverLikePreset& preset);

/// Leave-region-out extrapolation on the train correspondences: a
/// contiguous 10% region is held out and scored per method.
std::vector<BenchRow> run_extrapolation(const LiverLikePreset& preset, double fraction = 0.1);

RunParams preset_params(const LiverLikePreset& preset);

/// The generated world plus the train/test id partition.
struct BenchWorld {
  Dataset dataset;  // full m_total dataset
  GroundTruth truth;
  std::vector<Index> train_ids;
  std::vector<Index> test_ids;
};
BenchWorld make_bench_world(const LiverLikePreset& preset);

}  // namespace defgpa
