#pragma once

#include "defgpa/execution.hpp"
#include "defgpa/geometry.hpp"
#include "defgpa/kernels.hpp"
#include "defgpa/scale.hpp"
#include "defgpa/shape.hpp"
#include "defgpa/warp_field.hpp"

#include <vector>

namespace defgpa {

/// Per-view operators of the reduced problem. With IP = I - projector:
///   S = K IP K + mu K,   H = IP K S^{-1},   Q = IP - IP K S^{-1} K IP.
/// Q and H are symmetric, Q = mu H, 0 <= Q <= IP <= I, and Q 1 = 0.
struct ViewOperators {
  Matrix projector;    // m_t x m_t orthogonal projector onto range(Ptilde^T)
  Matrix ptilde_pinv;  // m_t x (d+1)
  Matrix s;            // S_t
  Matrix h;            // H_t
  Matrix q;            // Q_t
  double mu = 0;
  Index ptilde_rank = 0;
};

struct ProjectorResult {
  Matrix projector;  // m_t x m_t
  Matrix pinv;       // m_t x (d+1), pseudo-inverse of [P; 1^T]
  Index rank = 0;
};

/// Orthogonal projector onto the row space of the homogenized cloud
/// [P; 1^T]; rank deficiency (flat clouds) is absorbed by the SVD.
ProjectorResult projector(const View& view);

ViewOperators view_operators(const View& view, const GramMatrix& gram_matrix, double mu);

/// Q = sum_t Gamma_t Q_t Gamma_t^T, accumulated in fixed view order and
/// symmetrized.
Matrix assemble_q(const Dataset& dataset, const std::vector<ViewOperators>& operators);

std::vector<GramMatrix> build_grams(const Dataset& dataset, const KernelSpec& spec,
                                    ExecutionPolicy policy);
std::vector<ViewOperators> build_view_operators(const Dataset& dataset,
                                                const std::vector<GramMatrix>& grams,
                                                double mu, ExecutionPolicy policy);

/// Optimal KBT parameters of one view given the canonical map.
struct KbtParams {
  Matrix linear;        // A, d x d
  Vector offset;        // a, d
  Matrix kernel_coeff;  // Omega, m_t x d
};

KbtParams recover_transform(const Matrix& map, const View& view, const ViewOperators& ops,
                            const GramMatrix& gram_matrix);

struct GpaOptions {
  ExecutionPolicy policy = ExecutionPolicy::Parallel;
  bool allow_degenerate = false;  // accept views with rank(Ptilde) <= d
  ScaleOptions scale;
};

struct KernelGpaSolution {
  Matrix map;    // d x m, M = sqrt(lambda) * gauge * X^T
  Vector lambda; // d, non-ascending
  Matrix gauge;  // R_g
  ShapeSolution shape;
  ScaleEstimate scale;
  DegeneracyReport degeneracy;
  std::vector<KbtParams> transforms;
  std::vector<GramMatrix> grams;
  std::vector<ViewOperators> operators;
  std::vector<RigidPose> poses;
  double mu = 0;
  double cost = 0;  // tr(M Q M^T)

  /// Ready-to-apply warp of view t (needs the dataset for basis points).
  Warp warp(const Dataset& dataset, Index t) const;
};

KernelGpaSolution register_kernel_gpa(const Dataset& dataset, const KernelSpec& spec,
                                      double mu, const GpaOptions& options);

/// The full objective sum_t ||y_t(P_t) - M Gamma_t||^2 + mu tr(Omega^T K Omega),
/// evaluated from the recovered transforms. Equals tr(M Q M^T) at the optimum.
double kernel_gpa_objective(const Dataset& dataset, const KernelGpaSolution& solution);

}  // namespace defgpa
