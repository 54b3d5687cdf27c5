#include "defgpa/scale.hpp"

#include "defgpa/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace defgpa {

namespace {

Matrix centered_rows(const Matrix& a) {
  return a.colwise() - a.rowwise().mean().eval();
}

// Moore-Penrose pseudo-inverse with the singular-value threshold
// eps * max-dimension * sigma_max; reports the numerical rank.
Matrix pseudo_inverse(const Matrix& a, Index* rank_out = nullptr) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  double tol = 1e-12 * static_cast<double>(std::max(a.rows(), a.cols())) *
               (sv.size() > 0 ? sv(0) : 0.0);
  Index rank = 0;
  Vector inv = Vector::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) {
      inv(i) = 1.0 / sv(i);
      ++rank;
    }
  }
  if (rank_out) *rank_out = rank;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix skew3(const Vector& w) {
  Matrix s(3, 3);
  s << 0, -w(2), w(1), w(2), 0, -w(0), -w(1), w(0), 0;
  return s;
}

Matrix rotation_exp(const Vector& w) {
  if (w.size() == 1) {
    double c = std::cos(w(0)), s = std::sin(w(0));
    Matrix r(2, 2);
    r << c, -s, s, c;
    return r;
  }
  double theta = w.norm();
  Matrix s = skew3(w);
  if (theta < 1e-12) return Matrix::Identity(3, 3) + s + 0.5 * s * s;
  return Matrix::Identity(3, 3) + (std::sin(theta) / theta) * s +
         ((1.0 - std::cos(theta)) / (theta * theta)) * s * s;
}

double alignment_cost(const std::vector<Matrix>& rotations, const std::vector<Matrix>& pbar,
                      const std::vector<Matrix>& target) {
  double cost = 0;
  for (size_t t = 0; t < pbar.size(); ++t)
    cost += (rotations[t] * pbar[t] - target[t]).squaredNorm();
  return cost;
}

}  // namespace

Matrix special_orthogonal_procrustes(const Matrix& source, const Matrix& target) {
  Matrix c = target * source.transpose();
  Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix u = svd.matrixU();
  Matrix v = svd.matrixV();
  Vector d = Vector::Ones(c.rows());
  if ((u * v.transpose()).determinant() < 0) d(c.rows() - 1) = -1.0;
  return u * d.asDiagonal() * v.transpose();
}

ClosedFormScale closed_form_scale(const Dataset& dataset, const Matrix& basis) {
  const int d = dataset.d;
  ClosedFormScale out;
  Matrix big_l = Matrix::Zero(d, d);
  int used = 0;
  for (size_t t = 0; t < dataset.views.size(); ++t) {
    const View& view = dataset.views[t];
    Matrix g = select_columns(basis.transpose(), view.vis.ids);  // d x m_t
    Matrix gbar = centered_rows(g);
    Index rank = 0;
    Matrix gbar_pinv = pseudo_inverse(gbar, &rank);
    if (rank < d) {
      out.skipped_views.push_back(static_cast<int>(t));
      continue;
    }
    Matrix dt = centered_rows(view.cloud.data) * gbar_pinv;
    big_l += dt.transpose() * dt;
    ++used;
  }
  if (used == 0)
    throw NumericalError("scale unresolvable: every view was skipped (rank-deficient G_t)");
  big_l /= static_cast<double>(used);
  big_l = 0.5 * (big_l + big_l.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> es(big_l);
  if (es.info() != Eigen::Success) throw NumericalError("scale: eigendecomposition of L failed");

  out.lambda.resize(d);
  out.gauge.resize(d, d);
  for (int k = 0; k < d; ++k) {
    out.lambda(k) = std::max(es.eigenvalues()(d - 1 - k), 0.0);
    out.gauge.row(k) = es.eigenvectors().col(d - 1 - k).transpose();
  }
  // Sign-canonicalize against the gauge-resolved basis rows (R_g X^T) so a
  // column flip of X, or an eigenvector sign flip of L, is absorbed here
  // and everything downstream runs identically.
  Matrix resolved = out.gauge * basis.transpose();
  for (int k = 0; k < d; ++k) {
    Index imax = 0;
    resolved.row(k).cwiseAbs().maxCoeff(&imax);
    if (resolved(k, imax) < 0) out.gauge.row(k) = -out.gauge.row(k);
  }
  return out;
}

std::vector<RigidPose> init_poses(const Dataset& dataset, const Matrix& basis,
                                  const Vector& lambda, const Matrix& gauge) {
  Matrix scale_gauge = lambda.cwiseSqrt().asDiagonal() * gauge;
  std::vector<RigidPose> poses;
  poses.reserve(dataset.views.size());
  for (const View& view : dataset.views) {
    Matrix g = select_columns(basis.transpose(), view.vis.ids);
    Matrix target = scale_gauge * g;
    RigidPose pose;
    pose.rotation = special_orthogonal_procrustes(centered_rows(view.cloud.data),
                                                  centered_rows(target));
    pose.translation = -(pose.rotation * view.cloud.data - target).rowwise().mean();
    poses.push_back(std::move(pose));
  }
  return poses;
}

ScaleEstimate refine_scale(const Dataset& dataset, const Matrix& basis,
                           const ScaleEstimate& init, const ScaleOptions& options) {
  const int d = dataset.d;
  const int n = static_cast<int>(dataset.views.size());
  const int q = d * (d - 1) / 2;  // rotation tangent dimension
  const int dof = n * q + d;

  std::vector<Matrix> pbar(static_cast<size_t>(n)), ghat(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) {
    const View& view = dataset.views[static_cast<size_t>(t)];
    pbar[static_cast<size_t>(t)] = centered_rows(view.cloud.data);
    Matrix g = select_columns(basis.transpose(), view.vis.ids);
    ghat[static_cast<size_t>(t)] = init.gauge * centered_rows(g);
  }

  std::vector<Matrix> target(static_cast<size_t>(n));
  auto refresh_target = [&](const Vector& e) {
    for (int t = 0; t < n; ++t)
      target[static_cast<size_t>(t)] = e.asDiagonal() * ghat[static_cast<size_t>(t)];
  };

  // Reflections: the eigenvector signs fix an arbitrary orientation, and
  // the data may live in the opposite handedness class. Sign patterns of
  // even parity are absorbed exactly by the SO(d) poses, so only the two
  // determinant classes are distinct: start from the better of "no flip"
  // and "last axis flipped".
  Vector eta = init.lambda.cwiseSqrt();
  std::vector<Matrix> rotations(static_cast<size_t>(n));
  double cost = std::numeric_limits<double>::infinity();
  for (int pattern = 0; pattern < 2; ++pattern) {
    Vector candidate = init.lambda.cwiseSqrt();
    if (pattern == 1) candidate(d - 1) = -candidate(d - 1);
    refresh_target(candidate);
    std::vector<Matrix> trial(static_cast<size_t>(n));
    for (int t = 0; t < n; ++t)
      trial[static_cast<size_t>(t)] = special_orthogonal_procrustes(
          pbar[static_cast<size_t>(t)], target[static_cast<size_t>(t)]);
    double trial_cost = alignment_cost(trial, pbar, target);
    if (trial_cost < cost) {
      cost = trial_cost;
      eta = candidate;
      rotations = std::move(trial);
    }
  }
  refresh_target(eta);
  if (!std::isfinite(cost)) throw NumericalError("scale refinement: non-finite initial cost");
  std::vector<double> trace{cost};

  double data_scale = 0;
  for (const Matrix& pb : pbar) data_scale += pb.squaredNorm();

  double damping = 1e-4;
  int accepted = 0;
  Matrix jtj(dof, dof);
  Vector grad(dof);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (cost <= 1e-24 * data_scale) break;  // already at machine-noise level
    jtj.setZero();
    grad.setZero();
    for (int t = 0; t < n; ++t) {
      const Matrix& pb = pbar[static_cast<size_t>(t)];
      const Matrix& gh = ghat[static_cast<size_t>(t)];
      Matrix y = rotations[static_cast<size_t>(t)] * pb;
      Matrix resid = y - eta.asDiagonal() * gh;
      const int row = t * q;
      if (d == 3) {
        for (Index j = 0; j < y.cols(); ++j) {
          Vector yj = y.col(j);
          jtj.block(row, row, 3, 3) +=
              yj.squaredNorm() * Matrix::Identity(3, 3) - yj * yj.transpose();
          Matrix sk = skew3(yj);
          // d r / d omega = -[y]x; d r / d eta_k = -G(k,j) e_k
          jtj.block(row, n * q, 3, 3) -= sk * gh.col(j).asDiagonal();
          grad.segment(row, 3) += sk * resid.col(j);
        }
      } else {
        Matrix j2(2, 2);
        j2 << 0, -1, 1, 0;
        for (Index j = 0; j < y.cols(); ++j) {
          Vector w = j2 * y.col(j);
          jtj(row, row) += w.squaredNorm();
          jtj.block(row, n * q, 1, 2) -= (w.cwiseProduct(gh.col(j))).transpose();
          grad(row) += w.dot(resid.col(j));
        }
      }
      for (int k = 0; k < d; ++k) {
        jtj(n * q + k, n * q + k) += gh.row(k).squaredNorm();
        grad(n * q + k) -= gh.row(k).dot(resid.row(k));
      }
    }
    jtj.triangularView<Eigen::StrictlyLower>() =
        jtj.triangularView<Eigen::StrictlyUpper>().transpose();

    double diag_floor = 1e-12 * std::max(jtj.diagonal().maxCoeff(), 1.0);
    bool stepped = false;
    for (int attempt = 0; attempt < 25; ++attempt) {
      Matrix damped = jtj;
      for (int i = 0; i < dof; ++i)
        damped(i, i) += damping * std::max(jtj(i, i), diag_floor);
      Eigen::LDLT<Matrix> ldlt(damped);
      if (ldlt.info() != Eigen::Success) {
        damping *= 10.0;
        continue;
      }
      Vector delta = ldlt.solve(-grad);

      std::vector<Matrix> trial_r = rotations;
      for (int t = 0; t < n; ++t)
        trial_r[static_cast<size_t>(t)] =
            rotation_exp(delta.segment(t * q, q)) * rotations[static_cast<size_t>(t)];
      Vector trial_eta = eta + delta.tail(d);
      refresh_target(trial_eta);
      double trial_cost = alignment_cost(trial_r, pbar, target);
      if (!std::isfinite(trial_cost)) throw NumericalError("scale refinement diverged");

      if (trial_cost < cost) {
        double drop = cost - trial_cost;
        rotations = std::move(trial_r);
        eta = trial_eta;
        cost = trial_cost;
        trace.push_back(cost);
        damping = std::max(damping * 0.1, 1e-15);
        ++accepted;
        stepped = true;
        if (drop < options.tolerance * std::max(cost, 1e-300)) iter = options.max_iterations;
        break;
      }
      damping *= 10.0;
      if (damping > 1e15) break;
    }
    if (!stepped) break;
  }

  // Reflection fix and non-ascending reordering. The signed permutation is
  // chosen with determinant +1 so the poses stay in SO(d).
  std::vector<int> order(static_cast<size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(eta(a)) > std::abs(eta(b));
  });
  Matrix perm = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) perm(i, order[static_cast<size_t>(i)]) = 1.0;
  if (perm.determinant() < 0) perm.row(0) = -perm.row(0);

  ScaleEstimate out;
  out.skipped_views = init.skipped_views;
  out.refine_iterations = accepted;
  out.final_cost = cost;
  out.cost_trace = std::move(trace);
  out.eta.resize(d);
  for (int i = 0; i < d; ++i) out.eta(i) = eta(order[static_cast<size_t>(i)]);
  out.flips.resize(d);
  for (int i = 0; i < d; ++i) out.flips(i) = out.eta(i) < 0 ? -1.0 : 1.0;
  out.lambda = out.eta.cwiseAbs2();
  out.gauge = out.flips.asDiagonal() * perm * init.gauge;

  Matrix map = out.lambda.cwiseSqrt().asDiagonal() * out.gauge * basis.transpose();
  out.poses.resize(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) {
    const View& view = dataset.views[static_cast<size_t>(t)];
    RigidPose& pose = out.poses[static_cast<size_t>(t)];
    pose.rotation = perm * rotations[static_cast<size_t>(t)];
    pose.translation =
        -(pose.rotation * view.cloud.data - select_columns(map, view.vis.ids)).rowwise().mean();
  }
  return out;
}

ScaleEstimate resolve_scale(const Dataset& dataset, const Matrix& basis,
                            const ScaleOptions& options) {
  ClosedFormScale cf = closed_form_scale(dataset, basis);
  ScaleEstimate init;
  init.lambda = cf.lambda;
  init.gauge = cf.gauge;
  init.skipped_views = cf.skipped_views;
  init.poses = init_poses(dataset, basis, cf.lambda, cf.gauge);
  init.eta = cf.lambda.cwiseSqrt();
  init.flips = Vector::Ones(dataset.d);

  if (options.refine) return refine_scale(dataset, basis, init, options);

  double cost = 0;
  Matrix scale_gauge = init.lambda.cwiseSqrt().asDiagonal() * init.gauge;
  for (size_t t = 0; t < dataset.views.size(); ++t) {
    const View& view = dataset.views[t];
    Matrix g = select_columns(basis.transpose(), view.vis.ids);
    cost += (init.poses[t].rotation * centered_rows(view.cloud.data) -
             scale_gauge * centered_rows(g))
                .squaredNorm();
  }
  init.final_cost = cost;
  return init;
}

DegeneracyReport detect_degeneracy(const Matrix& q_global, const ShapeSolution& shape,
                                   const Dataset& dataset) {
  const Index m = q_global.rows();
  const int d = dataset.d;
  DegeneracyReport report;
  report.tau0 = 1e-8 * q_global.trace() / static_cast<double>(m);
  report.spectrum_gap_degenerate = shape.degenerate_spectrum;

  Eigen::SelfAdjointEigenSolver<Matrix> es(q_global, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericalError("degeneracy detection: eigen-solver failed");
  const Vector& ev = es.eigenvalues();
  for (Index i = 0; i < m; ++i)
    if (ev(i) < report.tau0) ++report.near_zero_eigenvalues;
  report.zero_deformation = report.near_zero_eigenvalues >= d + 1;
  report.bottom_spectrum = ev.head(std::min<Index>(m, d + 2));

  for (size_t t = 0; t < dataset.views.size(); ++t) {
    const View& view = dataset.views[t];
    Matrix ptilde(d + 1, view.count());
    ptilde.topRows(d) = view.cloud.data;
    ptilde.row(d).setOnes();
    Eigen::JacobiSVD<Matrix> svd(ptilde);
    const Vector& sv = svd.singularValues();
    double tol = 1e-12 * static_cast<double>(std::max(ptilde.rows(), ptilde.cols())) * sv(0);
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i)
      if (sv(i) > tol) ++rank;
    if (rank <= d) report.flat_views.push_back(static_cast<int>(t));
  }
  return report;
}

CanonicalSolve solve_canonical_map(const Dataset& dataset, const Matrix& q_global,
                                   const ScaleOptions& options) {
  CanonicalSolve out;
  out.shape = solve_shape(q_global, dataset.view_count(), dataset.d);
  out.scale = resolve_scale(dataset, out.shape.basis, options);
  out.map = out.scale.lambda.cwiseSqrt().asDiagonal() * out.scale.gauge *
            out.shape.basis.transpose();
  out.cost = (out.map * q_global).cwiseProduct(out.map).sum();
  return out;
}

}  // namespace defgpa
