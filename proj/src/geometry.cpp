#include "defgpa/geometry.hpp"

#include "defgpa/errors.hpp"

#include <string>

namespace defgpa {

PointCloud::PointCloud(Matrix pts) : data(std::move(pts)) { validate(); }

void PointCloud::validate() const {
  if (data.rows() != 2 && data.rows() != 3)
    throw ValidationError("point-cloud dimension must be 2 or 3, got " +
                          std::to_string(data.rows()));
  if (data.cols() < 1) throw ValidationError("point-cloud must contain at least one point");
  if (!data.allFinite()) throw ValidationError("point-cloud contains non-finite coordinates");
}

void Visibility::validate() const {
  if (m < 1) throw ValidationError("visibility: total correspondence count must be positive");
  if (ids.empty()) throw ValidationError("visibility: a view must observe at least one point");
  Index prev = -1;
  for (Index id : ids) {
    if (id < 0 || id >= m)
      throw ValidationError("visibility: index " + std::to_string(id + 1) +
                            " outside [1, " + std::to_string(m) + "]");
    if (id <= prev) throw ValidationError("visibility: indices must be strictly increasing");
    prev = id;
  }
}

void View::validate() const {
  cloud.validate();
  vis.validate();
  if (cloud.count() != vis.count())
    throw ValidationError("view " + std::to_string(id) + ": cloud has " +
                          std::to_string(cloud.count()) + " points but visibility lists " +
                          std::to_string(vis.count()));
}

void Dataset::validate() const {
  if (views.empty()) throw ValidationError("dataset has no views");
  if (d != 2 && d != 3) throw ValidationError("dataset dimension must be 2 or 3");
  std::vector<int> seen(static_cast<size_t>(m), 0);
  for (const View& v : views) {
    v.validate();
    if (v.cloud.dim() != d)
      throw ValidationError("view " + std::to_string(v.id) + " has dimension " +
                            std::to_string(v.cloud.dim()) + ", dataset declares " +
                            std::to_string(d));
    if (v.vis.m != m)
      throw ValidationError("view " + std::to_string(v.id) +
                            " disagrees on the global correspondence count");
    for (Index id : v.vis.ids) seen[static_cast<size_t>(id)] = 1;
  }
  for (Index i = 0; i < m; ++i)
    if (!seen[static_cast<size_t>(i)])
      throw ValidationError("correspondence " + std::to_string(i + 1) +
                            " is not visible in any view");
}

Matrix visibility_matrix(const Visibility& vis) {
  vis.validate();
  Matrix gamma = Matrix::Zero(vis.m, vis.count());
  for (Index j = 0; j < vis.count(); ++j) gamma(vis.ids[static_cast<size_t>(j)], j) = 1.0;
  return gamma;
}

std::pair<PointCloud, Vector> center(const PointCloud& cloud) {
  Vector centroid = cloud.data.rowwise().mean();
  PointCloud centered;
  centered.data = cloud.data.colwise() - centroid;
  return {std::move(centered), std::move(centroid)};
}

Matrix covariance(const PointCloud& cloud) {
  Matrix centered = cloud.data.colwise() - cloud.data.rowwise().mean().eval();
  Matrix cov = centered * centered.transpose();
  return 0.5 * (cov + cov.transpose());
}

Matrix select_columns(const Matrix& map, const std::vector<Index>& ids) {
  Matrix out(map.rows(), static_cast<Index>(ids.size()));
  for (size_t j = 0; j < ids.size(); ++j) out.col(static_cast<Index>(j)) = map.col(ids[j]);
  return out;
}

void scatter_add(Matrix& target, const Matrix& block, const std::vector<Index>& ids) {
  const Index k = static_cast<Index>(ids.size());
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < k; ++i)
      target(ids[static_cast<size_t>(i)], ids[static_cast<size_t>(j)]) += block(i, j);
}

std::vector<int> visibility_counts(const Dataset& dataset) {
  std::vector<int> counts(static_cast<size_t>(dataset.m), 0);
  for (const View& v : dataset.views)
    for (Index id : v.vis.ids) ++counts[static_cast<size_t>(id)];
  return counts;
}

}  // namespace defgpa
