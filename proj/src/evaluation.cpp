#include "defgpa/evaluation.hpp"

#include "defgpa/errors.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <string>

namespace defgpa {

Matrix mean_map(const std::vector<Matrix>& warped, const std::vector<Visibility>& vis,
                Index m_test) {
  if (warped.size() != vis.size())
    throw ValidationError("mean_map: one visibility per warped cloud required");
  if (warped.empty()) throw ValidationError("mean_map: no views");
  const Index d = warped.front().rows();
  Matrix sums = Matrix::Zero(d, m_test);
  Vector counts = Vector::Zero(m_test);
  for (size_t t = 0; t < warped.size(); ++t) {
    if (warped[t].cols() != vis[t].count())
      throw ValidationError("mean_map: warped cloud and visibility disagree");
    for (Index j = 0; j < vis[t].count(); ++j) {
      Index id = vis[t].ids[static_cast<size_t>(j)];
      sums.col(id) += warped[t].col(j);
      counts(id) += 1;
    }
  }
  for (Index i = 0; i < m_test; ++i)
    if (counts(i) > 0) sums.col(i) /= counts(i);
  return sums;
}

Vector consistency(const std::vector<Matrix>& warped, const std::vector<Visibility>& vis,
                   const Matrix& mean) {
  const Index m_test = mean.cols();
  Vector sq = Vector::Zero(m_test);
  Vector counts = Vector::Zero(m_test);
  for (size_t t = 0; t < warped.size(); ++t) {
    for (Index j = 0; j < vis[t].count(); ++j) {
      Index id = vis[t].ids[static_cast<size_t>(j)];
      sq(id) += (warped[t].col(j) - mean.col(id)).squaredNorm();
      counts(id) += 1;
    }
  }
  Vector delta = Vector::Zero(m_test);
  for (Index i = 0; i < m_test; ++i)
    if (counts(i) > 0) delta(i) = std::sqrt(sq(i) / counts(i));
  return delta;
}

Stats summarize(const Vector& delta) {
  if (delta.size() == 0) throw ValidationError("summarize: empty consistency vector");
  return Stats{delta.minCoeff(), delta.maxCoeff(), delta.mean()};
}

DatasetSplit split_dataset(const Dataset& dataset, const std::vector<Index>& test_ids) {
  dataset.validate();
  std::vector<char> is_test(static_cast<size_t>(dataset.m), 0);
  for (Index id : test_ids) {
    if (id < 0 || id >= dataset.m)
      throw ValidationError("split: test id " + std::to_string(id + 1) + " out of range");
    is_test[static_cast<size_t>(id)] = 1;
  }

  DatasetSplit split;
  std::vector<Index> train_index_of(static_cast<size_t>(dataset.m), -1);
  std::vector<Index> test_index_of(static_cast<size_t>(dataset.m), -1);
  for (Index i = 0; i < dataset.m; ++i) {
    if (is_test[static_cast<size_t>(i)]) {
      test_index_of[static_cast<size_t>(i)] = static_cast<Index>(split.test_ids.size());
      split.test_ids.push_back(i);
    } else {
      train_index_of[static_cast<size_t>(i)] = static_cast<Index>(split.train_ids.size());
      split.train_ids.push_back(i);
    }
  }
  if (split.train_ids.empty()) throw ValidationError("split: holding out every correspondence");

  split.train.d = dataset.d;
  split.train.m = static_cast<Index>(split.train_ids.size());
  const Index m_test = static_cast<Index>(split.test_ids.size());
  for (const View& view : dataset.views) {
    std::vector<Index> train_local, test_local;
    for (Index j = 0; j < view.count(); ++j) {
      Index id = view.vis.ids[static_cast<size_t>(j)];
      if (is_test[static_cast<size_t>(id)])
        test_local.push_back(j);
      else
        train_local.push_back(j);
    }
    if (train_local.empty())
      throw ValidationError("split: view " + std::to_string(view.id) +
                            " would lose all its training points");
    View train_view;
    train_view.id = view.id;
    train_view.cloud.data = select_columns(view.cloud.data, train_local);
    train_view.vis.m = split.train.m;
    for (Index j : train_local)
      train_view.vis.ids.push_back(
          train_index_of[static_cast<size_t>(view.vis.ids[static_cast<size_t>(j)])]);
    split.train.views.push_back(std::move(train_view));

    Matrix cloud(dataset.d, static_cast<Index>(test_local.size()));
    Visibility vis;
    vis.m = m_test;
    for (size_t j = 0; j < test_local.size(); ++j) {
      cloud.col(static_cast<Index>(j)) = view.cloud.data.col(test_local[j]);
      vis.ids.push_back(
          test_index_of[static_cast<size_t>(view.vis.ids[static_cast<size_t>(test_local[j])])]);
    }
    split.test_clouds.push_back(std::move(cloud));
    split.test_vis.push_back(std::move(vis));
  }
  return split;
}

TestViews extract_test_views(const Dataset& dataset, const std::vector<Index>& test_ids) {
  TestViews out;
  out.ids = test_ids;
  std::sort(out.ids.begin(), out.ids.end());
  out.ids.erase(std::unique(out.ids.begin(), out.ids.end()), out.ids.end());
  std::vector<Index> test_index_of(static_cast<size_t>(dataset.m), -1);
  for (size_t i = 0; i < out.ids.size(); ++i) {
    if (out.ids[i] < 0 || out.ids[i] >= dataset.m)
      throw ValidationError("test id " + std::to_string(out.ids[i] + 1) + " out of range");
    test_index_of[static_cast<size_t>(out.ids[i])] = static_cast<Index>(i);
  }
  const Index m_test = static_cast<Index>(out.ids.size());
  for (const View& view : dataset.views) {
    std::vector<Index> local;
    for (Index j = 0; j < view.count(); ++j)
      if (test_index_of[static_cast<size_t>(view.vis.ids[static_cast<size_t>(j)])] >= 0)
        local.push_back(j);
    Matrix cloud(dataset.d, static_cast<Index>(local.size()));
    Visibility vis;
    vis.m = m_test;
    for (size_t j = 0; j < local.size(); ++j) {
      cloud.col(static_cast<Index>(j)) = view.cloud.data.col(local[j]);
      vis.ids.push_back(
          test_index_of[static_cast<size_t>(view.vis.ids[static_cast<size_t>(local[j])])]);
    }
    out.clouds.push_back(std::move(cloud));
    out.vis.push_back(std::move(vis));
  }
  return out;
}

EvalReport evaluate_on_views(const FittedModel& model, const TestViews& views) {
  DatasetSplit shim;
  shim.test_ids = views.ids;
  shim.test_clouds = views.clouds;
  shim.test_vis = views.vis;
  return evaluate_on_split(model, shim);
}

EvalReport evaluate_on_split(const FittedModel& model, const DatasetSplit& split) {
  auto start = std::chrono::steady_clock::now();
  const Index m_test = static_cast<Index>(split.test_ids.size());
  if (m_test == 0) throw ValidationError("evaluate: no test points");

  std::vector<Matrix> warped(split.test_clouds.size());
  for_each_index(static_cast<Index>(split.test_clouds.size()), ExecutionPolicy::Parallel,
                 [&](Index t) {
                   const size_t i = static_cast<size_t>(t);
                   warped[i] = split.test_clouds[i].cols() > 0
                                   ? apply_warp(model.warps[i], split.test_clouds[i])
                                   : Matrix(split.test_clouds[i].rows(), 0);
                 });

  EvalReport report;
  report.method = method_name(model.method);
  report.mean_map = mean_map(warped, split.test_vis, m_test);
  report.delta = consistency(warped, split.test_vis, report.mean_map);
  report.test_ids = split.test_ids;

  Vector counts = Vector::Zero(m_test);
  for (const Visibility& vis : split.test_vis)
    for (Index id : vis.ids) counts(id) += 1;
  report.visibility.resize(static_cast<size_t>(m_test));
  std::vector<double> seen;
  seen.reserve(static_cast<size_t>(m_test));
  for (Index i = 0; i < m_test; ++i) {
    report.visibility[static_cast<size_t>(i)] = static_cast<int>(counts(i));
    if (counts(i) == 0)
      report.zero_visibility.push_back(i);
    else
      seen.push_back(report.delta(i));
  }
  if (seen.empty()) throw ValidationError("evaluate: every test point has zero visibility");
  Vector seen_v = Eigen::Map<Vector>(seen.data(), static_cast<Index>(seen.size()));
  report.stats = summarize(seen_v);
  report.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

EvalReport leave_region_out(const Dataset& dataset, const std::vector<Index>& region_ids,
                            Method method, const RunParams& params) {
  std::vector<Index> test = region_ids;
  if (test.empty()) {
    test.resize(static_cast<size_t>(dataset.m));
    std::iota(test.begin(), test.end(), Index{0});
    // In-sample: train on everything, evaluate on everything.
    DatasetSplit split;
    split.train = dataset;
    split.train_ids = test;
    split.test_ids = test;
    for (const View& view : dataset.views) {
      split.test_clouds.push_back(view.cloud.data);
      split.test_vis.push_back(view.vis);
    }
    FittedModel model = fit(split.train, method, params);
    EvalReport report = evaluate_on_split(model, split);
    report.runtime_ms += model.fit_runtime_ms;
    return report;
  }
  if (static_cast<Index>(test.size()) >= dataset.m)
    throw ValidationError("leave_region_out: the region covers every correspondence");
  DatasetSplit split = split_dataset(dataset, test);
  FittedModel model = fit(split.train, method, params);
  EvalReport report = evaluate_on_split(model, split);
  report.runtime_ms += model.fit_runtime_ms;
  return report;
}

std::vector<Index> contiguous_region(const Matrix& reference_map, double fraction,
                                     Index seed_point) {
  const Index m = reference_map.cols();
  if (seed_point < 0 || seed_point >= m)
    throw ValidationError("contiguous_region: seed point out of range");
  if (!(fraction > 0) || fraction >= 1)
    throw ValidationError("contiguous_region: fraction must be in (0, 1)");
  Index want = std::max<Index>(1, static_cast<Index>(std::lround(fraction * m)));
  std::vector<Index> order(static_cast<size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  Vector dist(m);
  for (Index i = 0; i < m; ++i)
    dist(i) = (reference_map.col(i) - reference_map.col(seed_point)).norm();
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return dist(a) < dist(b); });
  std::vector<Index> region(order.begin(), order.begin() + want);
  std::sort(region.begin(), region.end());
  return region;
}

}  // namespace defgpa
