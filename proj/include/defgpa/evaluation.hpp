#pragma once

#include "defgpa/geometry.hpp"
#include "defgpa/pipeline.hpp"

#include <string>
#include <vector>

namespace defgpa {

struct Stats {
  double min = 0;
  double max = 0;
  double mean = 0;
};

/// Consistency report over a set of test points. Points visible in no view
/// get a zero row in the mean map and are excluded from the statistics but
/// listed in zero_visibility.
struct EvalReport {
  Matrix mean_map;              // d x m_test
  Vector delta;                 // m_test, per-point RMS spread
  std::vector<int> visibility;  // per test point
  std::vector<Index> zero_visibility;
  Stats stats;
  std::vector<Index> test_ids;  // global 0-based ids of the test points
  std::string method;
  std::vector<std::pair<std::string, double>> params;  // echoed into report.json
  double runtime_ms = 0;
};

/// Visibility-weighted mean of the transformed test clouds.
Matrix mean_map(const std::vector<Matrix>& warped, const std::vector<Visibility>& vis,
                Index m_test);

/// Per-point RMS deviation (over the views that see the point) between the
/// transformed positions and the mean map.
Vector consistency(const std::vector<Matrix>& warped, const std::vector<Visibility>& vis,
                   const Matrix& mean);

Stats summarize(const Vector& delta);

/// Train/test partition of a dataset by global correspondence ids. Train
/// views are compacted to m_train; test points keep per-view coordinates
/// and visibility over m_test.
struct DatasetSplit {
  Dataset train;
  std::vector<Index> train_ids;  // global ids, ascending
  std::vector<Index> test_ids;   // global ids, ascending
  std::vector<Matrix> test_clouds;     // per view, d x (#test points seen)
  std::vector<Visibility> test_vis;    // per view, over m_test
};

DatasetSplit split_dataset(const Dataset& dataset, const std::vector<Index>& test_ids);

/// Per-view coordinates and visibility of a chosen id subset, without
/// touching the training side (used to score an existing solution).
struct TestViews {
  std::vector<Matrix> clouds;
  std::vector<Visibility> vis;
  std::vector<Index> ids;  // global, ascending
};
TestViews extract_test_views(const Dataset& dataset, const std::vector<Index>& test_ids);

/// Scores a fitted model on the extracted test points.
EvalReport evaluate_on_views(const FittedModel& model, const TestViews& views);

/// Applies a fitted model's warps to the split's test points and reports
/// mean map + consistency.
EvalReport evaluate_on_split(const FittedModel& model, const DatasetSplit& split);

/// Solves GPA on the complement of the region and evaluates consistency on
/// the held-out points. An empty region means in-sample evaluation (train
/// and test on everything). Holding out every id is an error.
EvalReport leave_region_out(const Dataset& dataset, const std::vector<Index>& region_ids,
                            Method method, const RunParams& params);

/// A spatially contiguous region: the seed point plus its nearest
/// neighbours (in the reference map) covering the requested fraction.
std::vector<Index> contiguous_region(const Matrix& reference_map, double fraction,
                                     Index seed_point);

}  // namespace defgpa
