#include "defgpa/warp_field.hpp"

#include "defgpa/kernels.hpp"

namespace defgpa {

namespace {

struct PointVisitor {
  const Vector& p;
  Vector operator()(const RigidWarp& w) const { return w.rotation * p + w.translation; }
  Vector operator()(const KbtWarp& w) const {
    PointCloud basis;
    basis.data = w.basis_points;
    return w.linear * p + w.offset + w.kernel_coeff.transpose() * kernel_vector(basis, w.sigma, p);
  }
  Vector operator()(const AffineLbwWarp& w) const {
    const Index d = p.size();
    return w.coeff.topRows(d).transpose() * p + w.coeff.row(d).transpose();
  }
  Vector operator()(const TpsLbwWarp& w) const { return w.coeff.transpose() * w.basis.eval(p); }
};

}  // namespace

Vector apply_warp(const Warp& warp, const Vector& point) {
  return std::visit(PointVisitor{point}, warp);
}

Matrix apply_warp(const Warp& warp, const Matrix& points) {
  Matrix out(points.rows(), points.cols());
  for (Index j = 0; j < points.cols(); ++j)
    out.col(j) = apply_warp(warp, Vector(points.col(j)));
  return out;
}

}  // namespace defgpa
