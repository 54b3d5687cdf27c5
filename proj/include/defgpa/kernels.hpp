#pragma once

#include "defgpa/geometry.hpp"

namespace defgpa {

/// Positive-definite kernel choice plus bandwidth. The bandwidth is either
/// explicit (sigma, in scene length units) or the rule sigma_t = p * mean
/// pairwise distance of the view's points.
struct KernelSpec {
  enum class Kind { Gaussian };
  Kind kind = Kind::Gaussian;
  double sigma = 0.0;  // used when explicit_sigma
  double p = 0.25;     // used otherwise
  bool explicit_sigma = false;

  static KernelSpec gaussian_scaled(double p);
  static KernelSpec gaussian_fixed(double sigma);
  void validate() const;
};

struct GramMatrix {
  Matrix matrix;              // m_t x m_t, jitter included
  double jitter_applied = 0;  // tau added to the diagonal (0 when none)
  double sigma = 0;           // resolved bandwidth
};

/// exp(-||xi - xj||^2 / (2 sigma^2)).
double gaussian(const Vector& xi, const Vector& xj, double sigma);

/// p times the mean pairwise Euclidean distance (each unordered pair once).
/// Requires at least two points.
double bandwidth(const PointCloud& cloud, double p);

/// Resolved sigma for this cloud under the spec's bandwidth rule.
double resolve_sigma(const KernelSpec& spec, const PointCloud& cloud);

/// Kernel matrix of the cloud against itself. If the smallest eigenvalue
/// falls at or below 1e-10 * m_t, a diagonal jitter from the tiers
/// {1e-10, 1e-8, 1e-6} * trace/m_t is added (smallest tier that restores
/// positive definiteness) and recorded. Unrecoverable matrices raise
/// NumericalError.
GramMatrix gram(const PointCloud& cloud, const KernelSpec& spec);

/// k_t(query): kernel evaluations of the cloud's points against a query
/// point. No jitter is involved.
Vector kernel_vector(const PointCloud& cloud, double sigma, const Vector& query);

}  // namespace defgpa
