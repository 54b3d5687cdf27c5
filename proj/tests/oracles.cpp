#include "oracles.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace defgpa::oracle {

Matrix pinv(const Matrix& a, double rel_tol) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  double tol = rel_tol * static_cast<double>(std::max(a.rows(), a.cols())) *
               (sv.size() ? sv(0) : 0.0);
  Vector inv = Vector::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix q_from_delta(const View& view, const Matrix& kernel_matrix, double mu) {
  const Index d = view.cloud.dim();
  const Index mt = view.count();
  Matrix ptilde(d + 1, mt);
  ptilde.topRows(d) = view.cloud.data;
  ptilde.row(d).setOnes();

  const Index nd = d + 1 + mt;
  Matrix delta(nd, nd);
  delta.topLeftCorner(d + 1, d + 1) = ptilde * ptilde.transpose();
  delta.topRightCorner(d + 1, mt) = ptilde * kernel_matrix;
  delta.bottomLeftCorner(mt, d + 1) = kernel_matrix * ptilde.transpose();
  delta.bottomRightCorner(mt, mt) =
      kernel_matrix * kernel_matrix + mu * kernel_matrix;

  Matrix stack(nd, mt);  // [Ptilde; K]
  stack.topRows(d + 1) = ptilde;
  stack.bottomRows(mt) = kernel_matrix;

  return Matrix::Identity(mt, mt) - stack.transpose() * pinv(delta) * stack;
}

Matrix random_feasible_basis(Index m, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Matrix x(m, d);
  for (Index i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = gauss(rng);
  Vector ones = Vector::Ones(m);
  for (int j = 0; j < d; ++j) x.col(j) -= (x.col(j).dot(ones) / m) * ones;
  Eigen::HouseholderQR<Matrix> qr(x);
  Matrix q = qr.householderQ() * Matrix::Identity(m, d);
  // Re-project: QR can reintroduce tiny 1-components.
  for (int j = 0; j < d; ++j) q.col(j) -= (q.col(j).dot(ones) / m) * ones;
  Eigen::HouseholderQR<Matrix> qr2(q);
  return qr2.householderQ() * Matrix::Identity(m, d);
}

double shape_distance(const Matrix& a, const Matrix& b) {
  Matrix ac = a.colwise() - a.rowwise().mean().eval();
  Matrix bc = b.colwise() - b.rowwise().mean().eval();
  Eigen::JacobiSVD<Matrix> svd(bc * ac.transpose(),
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix r = svd.matrixU() * svd.matrixV().transpose();  // best in O(d)
  return (r * ac - bc).norm();
}

Matrix random_rotation(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  if (d == 2) {
    double th = gauss(rng);
    Matrix r(2, 2);
    r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    return r;
  }
  Vector q(4);
  for (int i = 0; i < 4; ++i) q(i) = gauss(rng);
  q /= q.norm();
  double w = q(0), x = q(1), y = q(2), z = q(3);
  Matrix r(3, 3);
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

View random_view(int d, Index m_t, std::mt19937_64& rng, double extent) {
  std::uniform_real_distribution<double> uni(-extent, extent);
  View view;
  view.id = 1;
  view.cloud.data.resize(d, m_t);
  for (Index j = 0; j < m_t; ++j)
    for (int i = 0; i < d; ++i) view.cloud.data(i, j) = uni(rng);
  view.vis.m = m_t;
  view.vis.ids.resize(static_cast<size_t>(m_t));
  std::iota(view.vis.ids.begin(), view.vis.ids.end(), Index{0});
  return view;
}

Dataset random_dataset(int d, Index m, int n, std::mt19937_64& rng, double drop,
                       double deform, double noise) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::normal_distribution<double> gauss;
  Matrix map(d, m);
  for (Index j = 0; j < m; ++j)
    for (int i = 0; i < d; ++i) map(i, j) = uni(rng);

  Dataset dataset;
  dataset.d = d;
  dataset.m = m;
  std::vector<char> seen(static_cast<size_t>(m), 0);
  for (int t = 0; t < n; ++t) {
    Visibility vis;
    vis.m = m;
    for (Index i = 0; i < m; ++i)
      if (uni(rng) * 0.5 + 0.5 >= drop || t == 0) {
        vis.ids.push_back(i);
        seen[static_cast<size_t>(i)] = 1;
      }
    while (vis.count() < d + 2) {  // keep views usable
      Index extra = static_cast<Index>((uni(rng) * 0.5 + 0.5) * (m - 1));
      if (!std::binary_search(vis.ids.begin(), vis.ids.end(), extra)) {
        vis.ids.insert(std::upper_bound(vis.ids.begin(), vis.ids.end(), extra), extra);
        seen[static_cast<size_t>(extra)] = 1;
      }
    }
    Matrix pts = select_columns(map, vis.ids);
    // smooth low-order distortion + noise, then a random rigid motion
    Vector center(d);
    for (int i = 0; i < d; ++i) center(i) = uni(rng);
    for (Index j = 0; j < pts.cols(); ++j) {
      Vector p = pts.col(j);
      pts.col(j) += deform * std::sin(2.0 * (p - center).squaredNorm()) * (p - center);
      for (int i = 0; i < d; ++i) pts(i, j) += noise * gauss(rng);
    }
    Matrix rot = random_rotation(d, rng);
    Vector tr(d);
    for (int i = 0; i < d; ++i) tr(i) = uni(rng);
    View view;
    view.id = t + 1;
    view.cloud.data = (rot * pts).colwise() + tr;
    view.vis = std::move(vis);
    dataset.views.push_back(std::move(view));
  }
  // ensure every id is seen (view 0 sees all by construction above)
  dataset.validate();
  return dataset;
}

}  // namespace defgpa::oracle
