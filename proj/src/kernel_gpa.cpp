#include "defgpa/kernel_gpa.hpp"

#include "defgpa/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <string>
#include <utility>

namespace defgpa {

ProjectorResult projector(const View& view) {
  const Index d = view.cloud.dim();
  const Index mt = view.count();
  Matrix ptilde(d + 1, mt);
  ptilde.topRows(d) = view.cloud.data;
  ptilde.row(d).setOnes();

  Eigen::JacobiSVD<Matrix> svd(ptilde.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  double tol = 1e-12 * static_cast<double>(std::max(mt, d + 1)) * sv(0);

  ProjectorResult out;
  out.rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++out.rank;
  Matrix u = svd.matrixU().leftCols(out.rank);  // m_t x r
  out.projector = u * u.transpose();
  out.projector = 0.5 * (out.projector + out.projector.transpose()).eval();
  // pinv(Ptilde) = pinv(A^T) with A = Ptilde^T = U S V^T, so pinv = U S^-1 V^T.
  Vector inv = sv.head(out.rank).cwiseInverse();
  out.pinv = u * inv.asDiagonal() * svd.matrixV().leftCols(out.rank).transpose();
  return out;
}

ViewOperators view_operators(const View& view, const GramMatrix& gram_matrix, double mu) {
  if (!(mu > 0)) throw ValidationError("view_operators: mu must be positive");
  const Index mt = view.count();
  const Matrix& k = gram_matrix.matrix;
  if (k.rows() != mt)
    throw ValidationError("view_operators: Gram matrix size does not match the view");

  ViewOperators ops;
  ops.mu = mu;
  ProjectorResult proj = projector(view);
  ops.projector = std::move(proj.projector);
  ops.ptilde_pinv = std::move(proj.pinv);
  ops.ptilde_rank = proj.rank;

  Matrix ip = Matrix::Identity(mt, mt) - ops.projector;
  Matrix ipk = ip * k;  // (I - P) K
  // K (I-P) K = K (I-P)(I-P) K since the projector is idempotent; the Gram
  // form keeps S symmetric PSD before the mu K shift.
  ops.s = ipk.transpose() * ipk;
  ops.s += mu * k;
  ops.s = 0.5 * (ops.s + ops.s.transpose()).eval();

  Eigen::LLT<Matrix> llt(ops.s);
  if (llt.info() != Eigen::Success)
    throw NumericalError("ill-conditioned view: S_t factorization failed (mu too small or "
                         "near-singular kernel matrix)");

  Matrix ht = llt.solve(ipk.transpose());  // S^-1 K (I-P) = H^T
  ops.h = ht.transpose();
  ops.h = 0.5 * (ops.h + ops.h.transpose()).eval();
  ops.q = ip - ipk * ht;
  ops.q = 0.5 * (ops.q + ops.q.transpose()).eval();
  return ops;
}

Matrix assemble_q(const Dataset& dataset, const std::vector<ViewOperators>& operators) {
  if (operators.size() != dataset.views.size())
    throw ValidationError("assemble_q: need one ViewOperators per view");
  Matrix q = Matrix::Zero(dataset.m, dataset.m);
  for (size_t t = 0; t < operators.size(); ++t)
    scatter_add(q, operators[t].q, dataset.views[t].vis.ids);
  q = 0.5 * (q + q.transpose()).eval();
  return q;
}

std::vector<GramMatrix> build_grams(const Dataset& dataset, const KernelSpec& spec,
                                    ExecutionPolicy policy) {
  std::vector<GramMatrix> grams(dataset.views.size());
  for_each_index(dataset.view_count(), policy, [&](Index t) {
    grams[static_cast<size_t>(t)] = gram(dataset.views[static_cast<size_t>(t)].cloud, spec);
  });
  return grams;
}

std::vector<ViewOperators> build_view_operators(const Dataset& dataset,
                                                const std::vector<GramMatrix>& grams,
                                                double mu, ExecutionPolicy policy) {
  if (grams.size() != dataset.views.size())
    throw ValidationError("build_view_operators: need one Gram matrix per view");
  std::vector<ViewOperators> ops(dataset.views.size());
  for_each_index(dataset.view_count(), policy, [&](Index t) {
    size_t i = static_cast<size_t>(t);
    ops[i] = view_operators(dataset.views[i], grams[i], mu);
  });
  return ops;
}

KbtParams recover_transform(const Matrix& map, const View& view, const ViewOperators& ops,
                            const GramMatrix& gram_matrix) {
  const Index d = map.rows();
  Matrix map_t = select_columns(map, view.vis.ids);  // M Gamma_t, d x m_t
  KbtParams params;
  params.kernel_coeff = (map_t * ops.h).transpose();  // Omega = (M Gamma H)^T
  Matrix affine = map_t * (Matrix::Identity(view.count(), view.count()) -
                           ops.h * gram_matrix.matrix) *
                  ops.ptilde_pinv;  // [A, a], d x (d+1)
  params.linear = affine.leftCols(d);
  params.offset = affine.col(d);
  return params;
}

Warp KernelGpaSolution::warp(const Dataset& dataset, Index t) const {
  const size_t i = static_cast<size_t>(t);
  KbtWarp w;
  w.linear = transforms[i].linear;
  w.offset = transforms[i].offset;
  w.kernel_coeff = transforms[i].kernel_coeff;
  w.basis_points = dataset.views[i].cloud.data;
  w.sigma = grams[i].sigma;
  return w;
}

KernelGpaSolution register_kernel_gpa(const Dataset& dataset, const KernelSpec& spec,
                                      double mu, const GpaOptions& options) {
  dataset.validate();
  const int d = dataset.d;
  for (const View& view : dataset.views) {
    if (view.count() < d + 2)
      throw ValidationError("view " + std::to_string(view.id) + " has only " +
                            std::to_string(view.count()) + " points; kernel GPA needs at least " +
                            std::to_string(d + 2));
  }

  KernelGpaSolution sol;
  sol.mu = mu;
  sol.grams = build_grams(dataset, spec, options.policy);
  sol.operators = build_view_operators(dataset, sol.grams, mu, options.policy);

  for (size_t t = 0; t < sol.operators.size(); ++t) {
    if (sol.operators[t].ptilde_rank <= d && !options.allow_degenerate)
      throw ValidationError("view " + std::to_string(dataset.views[t].id) +
                            " is flat (rank-deficient homogenized cloud); rerun with "
                            "allow_degenerate to accept it");
  }

  Matrix q_global = assemble_q(dataset, sol.operators);
  CanonicalSolve canonical = solve_canonical_map(dataset, q_global, options.scale);
  sol.shape = std::move(canonical.shape);
  sol.scale = std::move(canonical.scale);
  sol.map = std::move(canonical.map);
  sol.lambda = sol.scale.lambda;
  sol.gauge = sol.scale.gauge;
  sol.poses = sol.scale.poses;
  sol.cost = canonical.cost;
  sol.degeneracy = detect_degeneracy(q_global, sol.shape, dataset);

  sol.transforms.resize(dataset.views.size());
  for_each_index(dataset.view_count(), options.policy, [&](Index t) {
    size_t i = static_cast<size_t>(t);
    sol.transforms[i] =
        recover_transform(sol.map, dataset.views[i], sol.operators[i], sol.grams[i]);
  });
  return sol;
}

double kernel_gpa_objective(const Dataset& dataset, const KernelGpaSolution& solution) {
  double total = 0;
  for (size_t t = 0; t < dataset.views.size(); ++t) {
    const View& view = dataset.views[t];
    const KbtParams& params = solution.transforms[t];
    const Matrix& k = solution.grams[t].matrix;
    Matrix warped = params.linear * view.cloud.data;
    warped.colwise() += params.offset;
    warped += params.kernel_coeff.transpose() * k;
    total += (warped - select_columns(solution.map, view.vis.ids)).squaredNorm();
    total += solution.mu *
             (params.kernel_coeff.transpose() * k * params.kernel_coeff).trace();
  }
  return total;
}

}  // namespace defgpa
