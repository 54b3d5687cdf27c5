#pragma once

#include "defgpa/geometry.hpp"

namespace defgpa {

/// Polyharmonic TPS kernel: r^2 log r in 2D, r in 3D.
double tps_rho(double r, int dim);

/// Thin-plate spline basis lifted from l control points. beta(p) is the
/// l-vector E^T [rho(||c_1 - p||), ..., rho(||c_l - p||), p, 1] so that
/// W^T beta(p) is the TPS warp sending control j toward row j of W. E is
/// the first l columns of the inverse of the standard TPS system matrix
/// [[K, Ctilde^T], [Ctilde, 0]]; with this choice W is expressed directly
/// in control-point target coordinates and the basis reproduces affine
/// maps exactly.
///
/// The system is assembled in normalized coordinates (controls centered
/// and scaled to unit RMS radius, Hartley style) for conditioning. The
/// basis values are invariant to this, but the bending-energy matrix
/// follows the normalized scale, which fixes the meaning of the
/// regularization strength mu across datasets of different physical size.
struct TpsBasis {
  Matrix controls;  // d x l, in input coordinates
  Matrix lift;      // (l + d + 1) x l, the E above (normalized frame)
  Vector center;    // normalization offset
  double scale = 1; // normalization radius
  int dim = 0;

  Index control_count() const { return controls.cols(); }
  Vector eval(const Vector& p) const;
  Matrix eval(const Matrix& points) const;  // l x k
};

struct LbwSpec {
  enum class Kind { Affine, Tps };
  Kind kind = Kind::Tps;
  Matrix control_points;  // d x l, tps only
  double mu = 0.01;       // regularizer strength
};

/// B = [P; 1^T], the (d+1) x k affine basis evaluation.
Matrix affine_basis(const PointCloud& cloud);

struct TpsBasisResult {
  TpsBasis basis;
  Matrix basis_eval;      // l x k, basis evaluated on the cloud
  Matrix bending_energy;  // l x l symmetric PSD, zero on affine warps
};

/// Builds the TPS lift and bending-energy matrix from spec.control_points
/// and evaluates the basis on the cloud. Degenerate control configurations
/// (singular TPS system) raise NumericalError.
TpsBasisResult tps_basis(const PointCloud& cloud, const LbwSpec& spec);

TpsBasis make_tps_basis(const Matrix& control_points);
Matrix tps_bending_energy(const TpsBasis& basis);

struct ControlGrid {
  Matrix points;                    // d x per_axis^d
  std::vector<int> degenerate_axes; // principal axes with zero extent
};

/// Regular per_axis^d grid over the cloud's principal-axis bounding box,
/// padded 5% per side, expressed back in the input frame.
ControlGrid place_control_grid(const PointCloud& cloud, int per_axis);

}  // namespace defgpa
