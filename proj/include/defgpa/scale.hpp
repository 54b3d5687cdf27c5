#pragma once

#include "defgpa/geometry.hpp"
#include "defgpa/shape.hpp"
#include "defgpa/warp_field.hpp"

namespace defgpa {

struct ScaleOptions {
  bool refine = true;
  int max_iterations = 100;
  double tolerance = 1e-10;
};

/// Result of resolving the d global scale ambiguities by rigidity
/// maximization. The canonical map is map = sqrt(lambda) * gauge * X^T.
struct ScaleEstimate {
  Vector lambda;  // d, non-ascending, >= 0
  Matrix gauge;   // R_g, d x d orthonormal
  std::vector<RigidPose> poses;
  Vector eta;    // signed scales after refinement
  Vector flips;  // sign(eta), the column flips applied to the gauge
  int refine_iterations = 0;
  double final_cost = 0;
  std::vector<double> cost_trace;  // cost after each accepted step
  std::vector<int> skipped_views;  // excluded from the closed-form average
};

/// Special orthogonal Procrustes: the R in SO(d) minimizing
/// ||R * source - target||_F (determinant-corrected SVD solution).
Matrix special_orthogonal_procrustes(const Matrix& source, const Matrix& target);

/// Closed-form Lambda and R_g from the eigendecomposition of
/// L = mean_t (Pbar_t Gbar_t^+)^T (Pbar_t Gbar_t^+), with Lambda sorted
/// non-ascending. Views whose centered G_t is row-rank-deficient are
/// skipped; if every view is skipped the scales are unresolvable.
struct ClosedFormScale {
  Vector lambda;
  Matrix gauge;
  std::vector<int> skipped_views;
};
ClosedFormScale closed_form_scale(const Dataset& dataset, const Matrix& basis);

/// Per-view rigid poses aligning each cloud with sqrt(Lambda) R_g G_t.
std::vector<RigidPose> init_poses(const Dataset& dataset, const Matrix& basis,
                                  const Vector& lambda, const Matrix& gauge);

/// Levenberg-damped refinement of sum_t ||R_t Pbar_t - diag(eta) Gbar_t||^2
/// over SO(d) poses and unconstrained eta, followed by the sign fix that
/// restores non-negative scales. Accepted steps never increase the cost.
ScaleEstimate refine_scale(const Dataset& dataset, const Matrix& basis,
                           const ScaleEstimate& init, const ScaleOptions& options);

/// Full scale pipeline: closed form, pose initialization, optional
/// refinement.
ScaleEstimate resolve_scale(const Dataset& dataset, const Matrix& basis,
                            const ScaleOptions& options);

struct DegeneracyReport {
  bool zero_deformation = false;  // >= d+1 eigenvalues of Q below tau0
  int near_zero_eigenvalues = 0;
  double tau0 = 0;
  std::vector<int> flat_views;  // views whose homogenized cloud has rank <= d
  Vector bottom_spectrum;       // smallest d+2 eigenvalues of Q, ascending
  bool spectrum_gap_degenerate = false;
};

DegeneracyReport detect_degeneracy(const Matrix& q_global, const ShapeSolution& shape,
                                   const Dataset& dataset);

/// Shared back end of every closed-form GPA flavour: eigen-solve for X,
/// scale/gauge resolution, and assembly of the canonical map.
struct CanonicalSolve {
  ShapeSolution shape;
  ScaleEstimate scale;
  Matrix map;       // d x m
  double cost = 0;  // tr(map Q map^T)
};
CanonicalSolve solve_canonical_map(const Dataset& dataset, const Matrix& q_global,
                                   const ScaleOptions& options);

}  // namespace defgpa
