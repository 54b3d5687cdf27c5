#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace defgpa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// A d x k matrix of landmark coordinates, one point per column.
/// d is 2 or 3 and every entry is finite.
struct PointCloud {
  Matrix data;

  PointCloud() = default;
  explicit PointCloud(Matrix pts);  // validates

  Index dim() const { return data.rows(); }
  Index count() const { return data.cols(); }
  void validate() const;
};

/// The correspondences a view observes, as sorted 0-based global indices
/// into [0, m). Files and diagnostics use 1-based ids; the conversion
/// happens at the IO boundary.
struct Visibility {
  Index m = 0;
  std::vector<Index> ids;

  Index count() const { return static_cast<Index>(ids.size()); }
  void validate() const;
};

struct View {
  PointCloud cloud;
  Visibility vis;
  int id = 0;

  Index count() const { return cloud.count(); }
  void validate() const;
};

struct Dataset {
  std::vector<View> views;
  Index m = 0;
  int d = 0;

  Index view_count() const { return static_cast<Index>(views.size()); }
  void validate() const;
};

/// Dense m x m_t selection matrix; column j is the standard basis vector
/// of the j-th visible index.
Matrix visibility_matrix(const Visibility& vis);

/// Splits a cloud into its zero-centered part and centroid, so that
/// centered + centroid * 1^T reproduces the input exactly.
std::pair<PointCloud, Vector> center(const PointCloud& cloud);

/// Point-cloud covariance Mbar * Mbar^T of the zero-centered cloud.
Matrix covariance(const PointCloud& cloud);

/// M * Gamma_t without materializing Gamma_t: picks the listed columns.
Matrix select_columns(const Matrix& map, const std::vector<Index>& ids);

/// Accumulates target(ids, ids) += block (the Gamma * B * Gamma^T scatter).
void scatter_add(Matrix& target, const Matrix& block, const std::vector<Index>& ids);

/// Per-correspondence visibility counts over all views.
std::vector<int> visibility_counts(const Dataset& dataset);

}  // namespace defgpa
