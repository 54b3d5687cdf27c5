#include "defgpa/warps.hpp"

#include "defgpa/errors.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace defgpa {

double tps_rho(double r, int dim) {
  if (dim == 2) return r > 0 ? r * r * std::log(r) : 0.0;
  return r;
}

Vector TpsBasis::eval(const Vector& p) const {
  const Index l = control_count();
  Vector q = (p - center) / scale;
  Vector lifted(l + dim + 1);
  for (Index i = 0; i < l; ++i)
    lifted(i) = tps_rho(((controls.col(i) - center) / scale - q).norm(), dim);
  lifted.segment(l, dim) = q;
  lifted(l + dim) = 1.0;
  return lift.transpose() * lifted;
}

Matrix TpsBasis::eval(const Matrix& points) const {
  const Index l = control_count();
  const Index k = points.cols();
  Matrix normalized_controls = (controls.colwise() - center) / scale;
  Matrix lifted(l + dim + 1, k);
  for (Index j = 0; j < k; ++j) {
    Vector q = (points.col(j) - center) / scale;
    for (Index i = 0; i < l; ++i)
      lifted(i, j) = tps_rho((normalized_controls.col(i) - q).norm(), dim);
    lifted.block(l, j, dim, 1) = q;
    lifted(l + dim, j) = 1.0;
  }
  return lift.transpose() * lifted;
}

Matrix affine_basis(const PointCloud& cloud) {
  Matrix b(cloud.dim() + 1, cloud.count());
  b.topRows(cloud.dim()) = cloud.data;
  b.row(cloud.dim()).setOnes();
  return b;
}

namespace {

// Full TPS system [[K, Ctilde^T], [Ctilde, 0]] and its inverse.
Matrix tps_system_inverse(const Matrix& controls) {
  const int d = static_cast<int>(controls.rows());
  const Index l = controls.cols();
  if (l < d + 1)
    throw ValidationError("tps: need at least d+1 control points, got " + std::to_string(l));
  const Index n = l + d + 1;
  Matrix system = Matrix::Zero(n, n);
  for (Index i = 0; i < l; ++i)
    for (Index j = 0; j < l; ++j)
      system(i, j) = tps_rho((controls.col(i) - controls.col(j)).norm(), d);
  for (Index j = 0; j < l; ++j) {
    system.block(0, l, l, d).row(j) = controls.col(j).transpose();
    system(j, n - 1) = 1.0;
  }
  system.block(l, 0, d + 1, l) = system.block(0, l, l, d + 1).transpose();
  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible())
    throw NumericalError("tps: degenerate control points, TPS system is singular");
  return lu.inverse();
}

}  // namespace

TpsBasis make_tps_basis(const Matrix& control_points) {
  TpsBasis basis;
  basis.controls = control_points;
  basis.dim = static_cast<int>(control_points.rows());
  basis.center = control_points.rowwise().mean();
  Matrix centered = control_points.colwise() - basis.center;
  basis.scale = std::sqrt(centered.squaredNorm() / static_cast<double>(centered.cols()));
  if (!(basis.scale > 0)) basis.scale = 1.0;
  basis.lift = tps_system_inverse(centered / basis.scale).leftCols(control_points.cols());
  return basis;
}

Matrix tps_bending_energy(const TpsBasis& basis) {
  const Index l = basis.control_count();
  // Bookstein's bending-energy matrix: the upper-left l x l block of the
  // inverted TPS system, expressed in control-value coordinates. The r
  // kernel in 3D is conditionally negative, so the block needs a sign flip
  // there; r^2 log r in 2D is conditionally positive.
  Matrix normalized = (basis.controls.colwise() - basis.center) / basis.scale;
  Matrix block = tps_system_inverse(normalized).topLeftCorner(l, l);
  if (basis.dim == 3) block = -block;
  return 0.5 * (block + block.transpose());
}

TpsBasisResult tps_basis(const PointCloud& cloud, const LbwSpec& spec) {
  if (spec.kind != LbwSpec::Kind::Tps) throw ValidationError("tps_basis: spec is not tps");
  if (spec.control_points.rows() != cloud.dim())
    throw ValidationError("tps_basis: control points and cloud disagree on dimension");
  TpsBasisResult out;
  out.basis = make_tps_basis(spec.control_points);
  out.basis_eval = out.basis.eval(cloud.data);
  out.bending_energy = tps_bending_energy(out.basis);
  return out;
}

ControlGrid place_control_grid(const PointCloud& cloud, int per_axis) {
  if (per_axis < 2) throw ValidationError("control grid: per_axis must be at least 2");
  const int d = static_cast<int>(cloud.dim());

  Vector centroid = cloud.data.rowwise().mean();
  Matrix centered = cloud.data.colwise() - centroid;
  Eigen::SelfAdjointEigenSolver<Matrix> es(centered * centered.transpose());
  if (es.info() != Eigen::Success) throw NumericalError("control grid: covariance eigen failed");
  Matrix axes = es.eigenvectors();  // columns = principal axes
  Matrix local = axes.transpose() * centered;

  Vector lo = local.rowwise().minCoeff();
  Vector hi = local.rowwise().maxCoeff();
  ControlGrid grid;
  for (int a = 0; a < d; ++a) {
    double extent = hi(a) - lo(a);
    if (extent <= 0) {
      grid.degenerate_axes.push_back(a);
    } else {
      lo(a) -= 0.05 * extent;
      hi(a) += 0.05 * extent;
    }
  }

  Index total = 1;
  for (int a = 0; a < d; ++a) total *= per_axis;
  grid.points.resize(d, total);
  std::vector<int> idx(static_cast<size_t>(d), 0);
  for (Index j = 0; j < total; ++j) {
    Vector p(d);
    for (int a = 0; a < d; ++a) {
      double f = static_cast<double>(idx[static_cast<size_t>(a)]) / (per_axis - 1);
      p(a) = lo(a) + f * (hi(a) - lo(a));
    }
    grid.points.col(j) = axes * p + centroid;
    for (int a = 0; a < d; ++a) {
      if (++idx[static_cast<size_t>(a)] < per_axis) break;
      idx[static_cast<size_t>(a)] = 0;
    }
  }
  return grid;
}

}  // namespace defgpa
