#include "defgpa/baselines.hpp"

#include "defgpa/errors.hpp"

#include <Eigen/Cholesky>

#include <deque>
#include <string>
#include <utility>

namespace defgpa {

Warp LbwGpaSolution::warp(Index t) const {
  const LbwViewBasis& basis = bases[static_cast<size_t>(t)];
  if (basis.is_affine) return AffineLbwWarp{coefficients[static_cast<size_t>(t)]};
  return TpsLbwWarp{coefficients[static_cast<size_t>(t)], basis.tps};
}

Warp RigidGpaSolution::warp(Index t) const {
  return RigidWarp{poses[static_cast<size_t>(t)].rotation,
                   poses[static_cast<size_t>(t)].translation};
}

LbwGpaSolution lbw_gpa(const Dataset& dataset, std::vector<LbwViewBasis> bases, double mu,
                       const GpaOptions& options) {
  dataset.validate();
  if (bases.size() != dataset.views.size())
    throw ValidationError("lbw_gpa: need one basis evaluation per view");

  const Index n = dataset.view_count();
  std::vector<Matrix> q_views(static_cast<size_t>(n));
  std::vector<Eigen::LDLT<Matrix>> factors(static_cast<size_t>(n));
  for_each_index(n, options.policy, [&](Index t) {
    const size_t i = static_cast<size_t>(t);
    const Matrix& b = bases[i].basis_eval;
    if (b.cols() != dataset.views[i].count())
      throw ValidationError("lbw_gpa: basis evaluation does not match view size");
    Matrix normal = b * b.transpose() + mu * bases[i].regularizer;
    factors[i].compute(0.5 * (normal + normal.transpose()));
    if (factors[i].info() != Eigen::Success || !factors[i].isPositive())
      throw NumericalError("ill-conditioned view " + std::to_string(dataset.views[i].id) +
                           ": LBW normal matrix is singular");
    Matrix q = -b.transpose() * factors[i].solve(b);
    q.diagonal().array() += 1.0;
    q_views[i] = 0.5 * (q + q.transpose());
  });

  Matrix q_global = Matrix::Zero(dataset.m, dataset.m);
  for (size_t t = 0; t < q_views.size(); ++t)
    scatter_add(q_global, q_views[t], dataset.views[t].vis.ids);
  q_global = 0.5 * (q_global + q_global.transpose()).eval();

  CanonicalSolve canonical = solve_canonical_map(dataset, q_global, options.scale);

  LbwGpaSolution sol;
  sol.mu = mu;
  sol.shape = std::move(canonical.shape);
  sol.scale = std::move(canonical.scale);
  sol.map = std::move(canonical.map);
  sol.lambda = sol.scale.lambda;
  sol.gauge = sol.scale.gauge;
  sol.poses = sol.scale.poses;
  sol.cost = canonical.cost;
  sol.degeneracy = detect_degeneracy(q_global, sol.shape, dataset);
  sol.coefficients.resize(static_cast<size_t>(n));
  for (Index t = 0; t < n; ++t) {
    const size_t i = static_cast<size_t>(t);
    Matrix map_t = select_columns(sol.map, dataset.views[i].vis.ids);
    sol.coefficients[i] = factors[i].solve(bases[i].basis_eval * map_t.transpose());
  }
  sol.bases = std::move(bases);
  return sol;
}

LbwGpaSolution affine_gpa(const Dataset& dataset, const GpaOptions& options) {
  dataset.validate();
  const int d = dataset.d;
  const Index n = dataset.view_count();

  std::vector<ProjectorResult> projs(static_cast<size_t>(n));
  for_each_index(n, options.policy, [&](Index t) {
    projs[static_cast<size_t>(t)] = projector(dataset.views[static_cast<size_t>(t)]);
  });

  Matrix q_global = Matrix::Zero(dataset.m, dataset.m);
  for (Index t = 0; t < n; ++t) {
    const size_t i = static_cast<size_t>(t);
    Matrix q = -projs[i].projector;
    q.diagonal().array() += 1.0;
    scatter_add(q_global, q, dataset.views[i].vis.ids);
  }
  q_global = 0.5 * (q_global + q_global.transpose()).eval();

  CanonicalSolve canonical = solve_canonical_map(dataset, q_global, options.scale);

  LbwGpaSolution sol;
  sol.mu = 0;
  sol.shape = std::move(canonical.shape);
  sol.scale = std::move(canonical.scale);
  sol.map = std::move(canonical.map);
  sol.lambda = sol.scale.lambda;
  sol.gauge = sol.scale.gauge;
  sol.poses = sol.scale.poses;
  sol.cost = canonical.cost;
  sol.degeneracy = detect_degeneracy(q_global, sol.shape, dataset);
  sol.coefficients.resize(static_cast<size_t>(n));
  sol.bases.resize(static_cast<size_t>(n));
  for (Index t = 0; t < n; ++t) {
    const size_t i = static_cast<size_t>(t);
    const View& view = dataset.views[i];
    Matrix map_t = select_columns(sol.map, view.vis.ids);
    // [A, a] = M Gamma Ptilde^+, stored as W = [A, a]^T
    sol.coefficients[i] = (map_t * projs[i].pinv).transpose();
    sol.bases[i].basis_eval = affine_basis(view.cloud);
    sol.bases[i].regularizer = Matrix::Zero(d + 1, d + 1);
    sol.bases[i].is_affine = true;
  }
  return sol;
}

LbwGpaSolution tps_gpa(const Dataset& dataset, const TpsGpaConfig& config,
                       const GpaOptions& options) {
  dataset.validate();
  const Index n = dataset.view_count();
  std::vector<LbwViewBasis> bases(static_cast<size_t>(n));
  for_each_index(n, options.policy, [&](Index t) {
    const size_t i = static_cast<size_t>(t);
    const View& view = dataset.views[i];
    ControlGrid grid = place_control_grid(view.cloud, config.per_axis);
    LbwSpec spec;
    spec.kind = LbwSpec::Kind::Tps;
    spec.control_points = grid.points;
    spec.mu = config.mu;
    TpsBasisResult tps = tps_basis(view.cloud, spec);
    bases[i].basis_eval = std::move(tps.basis_eval);
    bases[i].regularizer = std::move(tps.bending_energy);
    bases[i].is_affine = false;
    bases[i].tps = std::move(tps.basis);
  });
  return lbw_gpa(dataset, std::move(bases), config.mu, options);
}

namespace {

// BFS order over the view-overlap graph rooted at view 0. Two views are
// adjacent when they share at least d correspondences.
std::vector<Index> registration_order(const Dataset& dataset) {
  const Index n = dataset.view_count();
  std::vector<std::vector<Index>> seen_by(static_cast<size_t>(dataset.m));
  for (Index t = 0; t < n; ++t)
    for (Index id : dataset.views[static_cast<size_t>(t)].vis.ids)
      seen_by[static_cast<size_t>(id)].push_back(t);

  Matrix shared = Matrix::Zero(n, n);
  for (const auto& users : seen_by)
    for (size_t a = 0; a < users.size(); ++a)
      for (size_t b = a + 1; b < users.size(); ++b) {
        shared(users[a], users[b]) += 1;
        shared(users[b], users[a]) += 1;
      }

  std::vector<Index> order;
  std::vector<bool> visited(static_cast<size_t>(n), false);
  std::deque<Index> frontier{0};
  visited[0] = true;
  while (!frontier.empty()) {
    Index t = frontier.front();
    frontier.pop_front();
    order.push_back(t);
    for (Index u = 0; u < n; ++u) {
      if (!visited[static_cast<size_t>(u)] && shared(t, u) >= dataset.d) {
        visited[static_cast<size_t>(u)] = true;
        frontier.push_back(u);
      }
    }
  }
  if (static_cast<Index>(order.size()) != n)
    throw ValidationError("dataset is unregistrable: the view-overlap graph is disconnected");
  return order;
}

double rigid_cost(const Dataset& dataset, const std::vector<RigidPose>& poses,
                  const Matrix& map) {
  double cost = 0;
  for (size_t t = 0; t < dataset.views.size(); ++t) {
    const View& view = dataset.views[t];
    Matrix warped = poses[t].rotation * view.cloud.data;
    warped.colwise() += poses[t].translation;
    cost += (warped - select_columns(map, view.vis.ids)).squaredNorm();
  }
  return cost;
}

}  // namespace

RigidGpaSolution rigid_gpa(const Dataset& dataset, const RigidGpaOptions& options) {
  dataset.validate();
  const Index n = dataset.view_count();
  if (n < 2) throw ValidationError("rigid_gpa: need at least two views");
  const int d = dataset.d;

  std::vector<Index> order = registration_order(dataset);

  // Sequential Procrustes initialization against the accumulating mean map.
  Matrix sums = Matrix::Zero(d, dataset.m);
  Vector counts = Vector::Zero(dataset.m);
  std::vector<RigidPose> poses(static_cast<size_t>(n));
  for (size_t step = 0; step < order.size(); ++step) {
    const Index t = order[step];
    const View& view = dataset.views[static_cast<size_t>(t)];
    RigidPose& pose = poses[static_cast<size_t>(t)];
    if (step == 0) {
      pose.rotation = Matrix::Identity(d, d);
      pose.translation = Vector::Zero(d);
    } else {
      std::vector<Index> shared_local, shared_global;
      for (Index j = 0; j < view.count(); ++j) {
        Index id = view.vis.ids[static_cast<size_t>(j)];
        if (counts(id) > 0) {
          shared_local.push_back(j);
          shared_global.push_back(id);
        }
      }
      Matrix src = select_columns(view.cloud.data, shared_local);
      Matrix dst = select_columns(sums, shared_global);
      for (size_t j = 0; j < shared_global.size(); ++j)
        dst.col(static_cast<Index>(j)) /= counts(shared_global[j]);
      Vector src_mean = src.rowwise().mean();
      Vector dst_mean = dst.rowwise().mean();
      pose.rotation = special_orthogonal_procrustes(src.colwise() - src_mean,
                                                    dst.colwise() - dst_mean);
      pose.translation = dst_mean - pose.rotation * src_mean;
    }
    Matrix warped = pose.rotation * view.cloud.data;
    warped.colwise() += pose.translation;
    for (Index j = 0; j < view.count(); ++j) {
      Index id = view.vis.ids[static_cast<size_t>(j)];
      sums.col(id) += warped.col(j);
      counts(id) += 1;
    }
  }

  auto mean_map_of = [&](const std::vector<RigidPose>& p) {
    Matrix acc = Matrix::Zero(d, dataset.m);
    for (size_t t = 0; t < dataset.views.size(); ++t) {
      const View& view = dataset.views[t];
      Matrix warped = p[t].rotation * view.cloud.data;
      warped.colwise() += p[t].translation;
      for (Index j = 0; j < view.count(); ++j)
        acc.col(view.vis.ids[static_cast<size_t>(j)]) += warped.col(j);
    }
    std::vector<int> vis_counts = visibility_counts(dataset);
    for (Index i = 0; i < dataset.m; ++i) acc.col(i) /= vis_counts[static_cast<size_t>(i)];
    return acc;
  };

  Matrix map = mean_map_of(poses);
  double cost = rigid_cost(dataset, poses, map);
  int iterations = 0;
  for (; iterations < options.max_iterations; ++iterations) {
    for_each_index(n, options.policy, [&](Index t) {
      const View& view = dataset.views[static_cast<size_t>(t)];
      Matrix target = select_columns(map, view.vis.ids);
      Vector src_mean = view.cloud.data.rowwise().mean();
      Vector dst_mean = target.rowwise().mean();
      RigidPose& pose = poses[static_cast<size_t>(t)];
      pose.rotation = special_orthogonal_procrustes(view.cloud.data.colwise() - src_mean,
                                                    target.colwise() - dst_mean);
      pose.translation = dst_mean - pose.rotation * src_mean;
    });
    map = mean_map_of(poses);
    double next = rigid_cost(dataset, poses, map);
    double drop = cost - next;
    cost = next;
    if (drop < options.tolerance * std::max(cost, 1e-300)) {
      ++iterations;
      break;
    }
  }

  RigidGpaSolution sol;
  sol.poses = std::move(poses);
  sol.map = std::move(map);
  sol.cost = cost;
  sol.iterations = iterations;
  return sol;
}

}  // namespace defgpa
