#pragma once

#include "defgpa/kernel_gpa.hpp"
#include "defgpa/warps.hpp"

namespace defgpa {

/// One view's linear-basis evaluation and regularizer for LBW-GPA.
struct LbwViewBasis {
  Matrix basis_eval;   // l x m_t, the basis evaluated on the view's cloud
  Matrix regularizer;  // l x l, bending energy (zero for the affine basis)
  bool is_affine = false;
  TpsBasis tps;  // valid when !is_affine
};

struct LbwGpaSolution {
  Matrix map;
  Vector lambda;
  Matrix gauge;
  ShapeSolution shape;
  ScaleEstimate scale;
  DegeneracyReport degeneracy;
  std::vector<Matrix> coefficients;  // W_t, l x d
  std::vector<LbwViewBasis> bases;
  std::vector<RigidPose> poses;
  double mu = 0;
  double cost = 0;

  Warp warp(Index t) const;
};

/// Closed-form GPA with a linear basis warp: per view
/// Q_t = I - B^T (B B^T + mu Xi)^{-1} B, then the shared canonical solve.
/// The basis must contain the constant function so that Q 1 = 0.
LbwGpaSolution lbw_gpa(const Dataset& dataset, std::vector<LbwViewBasis> bases, double mu,
                       const GpaOptions& options);

/// The mu -> infinity limit: Q_t = I - projector, Omega = 0. Uses the
/// pseudo-inverse projector route, so rank-deficient views are tolerated.
LbwGpaSolution affine_gpa(const Dataset& dataset, const GpaOptions& options);

struct TpsGpaConfig {
  int per_axis = 5;  // control grid resolution per principal axis
  double mu = 0.01;
};

/// TPS-GPA with per-view control grids placed over each cloud's principal
/// axes.
LbwGpaSolution tps_gpa(const Dataset& dataset, const TpsGpaConfig& config,
                       const GpaOptions& options);

struct RigidGpaOptions {
  int max_iterations = 500;
  double tolerance = 1e-12;
  ExecutionPolicy policy = ExecutionPolicy::Parallel;
};

struct RigidGpaSolution {
  std::vector<RigidPose> poses;
  Matrix map;  // visibility-weighted mean of the transformed clouds
  double cost = 0;
  int iterations = 0;

  Warp warp(Index t) const;
};

/// Classic rigid GPA by alternating minimization: closed-form map update
/// and per-view special orthogonal Procrustes, initialized by sequential
/// Procrustes over the view-overlap graph.
RigidGpaSolution rigid_gpa(const Dataset& dataset, const RigidGpaOptions& options);

}  // namespace defgpa
