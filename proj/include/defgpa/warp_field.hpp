#pragma once

#include "defgpa/geometry.hpp"
#include "defgpa/warps.hpp"

#include <variant>

namespace defgpa {

struct RigidPose {
  Matrix rotation;     // d x d, SO(d)
  Vector translation;  // d
};

struct RigidWarp {
  Matrix rotation;
  Vector translation;
};

/// Kernel-based transformation y(p) = A p + a + Omega^T k(p), where k(p)
/// evaluates the Gaussian kernel against the view's registration points.
struct KbtWarp {
  Matrix linear;        // A, d x d
  Vector offset;        // a, d
  Matrix kernel_coeff;  // Omega, m_t x d
  Matrix basis_points;  // d x m_t, the view's registration cloud
  double sigma = 0;
};

/// Linear basis warp with the affine basis: y(p) = W^T [p; 1].
struct AffineLbwWarp {
  Matrix coeff;  // W, (d+1) x d
};

/// Linear basis warp with the TPS basis: y(p) = W^T beta(p).
struct TpsLbwWarp {
  Matrix coeff;  // W, l x d
  TpsBasis basis;
};

using Warp = std::variant<RigidWarp, KbtWarp, AffineLbwWarp, TpsLbwWarp>;

Vector apply_warp(const Warp& warp, const Vector& point);
Matrix apply_warp(const Warp& warp, const Matrix& points);

}  // namespace defgpa
