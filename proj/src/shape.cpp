#include "defgpa/shape.hpp"

#include "defgpa/errors.hpp"

#include <Eigen/Eigenvalues>

#include <string>

namespace defgpa {

ShapeSolution solve_shape(const Matrix& q_global, Index n_views, int d) {
  const Index m = q_global.rows();
  if (q_global.cols() != m) throw ValidationError("solve_shape: Q must be square");
  if (m < d + 1)
    throw ValidationError("solve_shape: need at least d+1 correspondences, got " +
                          std::to_string(m));
  const double norm = q_global.norm();
  if ((q_global - q_global.transpose()).norm() > 1e-8 * std::max(1.0, norm))
    throw ValidationError("solve_shape: Q is not symmetric");
  if ((q_global * Vector::Ones(m)).cwiseAbs().maxCoeff() > 1e-6 * std::max(1.0, norm))
    throw ValidationError("solve_shape: Q does not annihilate the all-one vector");

  Matrix shifted = q_global;
  shifted.array() += static_cast<double>(n_views);

  Eigen::SelfAdjointEigenSolver<Matrix> es(shifted);
  if (es.info() != Eigen::Success) throw NumericalError("solve_shape: eigen-solver failed");

  ShapeSolution out;
  out.basis = es.eigenvectors().leftCols(d);
  out.eigenvalues = es.eigenvalues().head(d);
  out.bottom_gap = es.eigenvalues()(d) - es.eigenvalues()(d - 1);
  out.degenerate_spectrum = out.bottom_gap < 1e-10 * norm;

  for (Index k = 0; k < d; ++k) {
    Index imax = 0;
    out.basis.col(k).cwiseAbs().maxCoeff(&imax);
    if (out.basis(imax, k) < 0) out.basis.col(k) = -out.basis.col(k);
  }

  if ((out.basis.transpose() * Vector::Ones(m)).norm() > 1e-8)
    throw NumericalError("solve_shape: eigenvectors lost orthogonality to the all-one vector");
  return out;
}

}  // namespace defgpa
