#include "defgpa/kernels.hpp"

#include "defgpa/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace defgpa {

KernelSpec KernelSpec::gaussian_scaled(double p) {
  KernelSpec s;
  s.p = p;
  s.explicit_sigma = false;
  s.validate();
  return s;
}

KernelSpec KernelSpec::gaussian_fixed(double sigma) {
  KernelSpec s;
  s.sigma = sigma;
  s.explicit_sigma = true;
  s.validate();
  return s;
}

void KernelSpec::validate() const {
  if (explicit_sigma) {
    if (!(sigma > 0)) throw ValidationError("kernel: explicit sigma must be positive");
  } else {
    if (!(p > 0)) throw ValidationError("kernel: bandwidth factor p must be positive");
  }
}

double gaussian(const Vector& xi, const Vector& xj, double sigma) {
  double r2 = (xi - xj).squaredNorm();
  return std::exp(-r2 / (2.0 * sigma * sigma));
}

double bandwidth(const PointCloud& cloud, double p) {
  if (!(p > 0)) throw ValidationError("bandwidth: factor p must be positive");
  const Index k = cloud.count();
  if (k < 2) throw ValidationError("bandwidth undefined: fewer than 2 points");
  double sum = 0.0;
  for (Index i = 0; i < k; ++i)
    for (Index j = i + 1; j < k; ++j) sum += (cloud.data.col(i) - cloud.data.col(j)).norm();
  double pairs = 0.5 * static_cast<double>(k) * static_cast<double>(k - 1);
  return p * sum / pairs;
}

double resolve_sigma(const KernelSpec& spec, const PointCloud& cloud) {
  spec.validate();
  return spec.explicit_sigma ? spec.sigma : bandwidth(cloud, spec.p);
}

GramMatrix gram(const PointCloud& cloud, const KernelSpec& spec) {
  if (cloud.count() < 1) throw ValidationError("gram: empty point-cloud");
  const Index k = cloud.count();
  GramMatrix out;
  out.sigma = (k == 1 && !spec.explicit_sigma) ? 1.0 : resolve_sigma(spec, cloud);
  out.matrix.resize(k, k);
  const double inv2s2 = 1.0 / (2.0 * out.sigma * out.sigma);
  for (Index i = 0; i < k; ++i) {
    out.matrix(i, i) = 1.0;
    for (Index j = i + 1; j < k; ++j) {
      double v = std::exp(-(cloud.data.col(i) - cloud.data.col(j)).squaredNorm() * inv2s2);
      out.matrix(i, j) = v;
      out.matrix(j, i) = v;
    }
  }

  const double eps_pd = 1e-10 * static_cast<double>(k);
  Eigen::SelfAdjointEigenSolver<Matrix> es(out.matrix, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("gram: eigenvalue computation failed");
  double min_eig = es.eigenvalues().minCoeff();
  if (min_eig > eps_pd) return out;

  const double unit = out.matrix.trace() / static_cast<double>(k);
  for (double tier : {1e-10, 1e-8, 1e-6}) {
    double tau = tier * unit;
    if (min_eig + tau > eps_pd) {
      out.matrix.diagonal().array() += tau;
      out.jitter_applied = tau;
      return out;
    }
  }
  throw NumericalError(
      "gram: kernel matrix is degenerate beyond the jitter tiers "
      "(duplicated points at a pathological bandwidth?)");
}

Vector kernel_vector(const PointCloud& cloud, double sigma, const Vector& query) {
  const Index k = cloud.count();
  Vector out(k);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  for (Index i = 0; i < k; ++i)
    out(i) = std::exp(-(cloud.data.col(i) - query).squaredNorm() * inv2s2);
  return out;
}

}  // namespace defgpa
