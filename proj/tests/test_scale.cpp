#include "defgpa/errors.hpp"
#include "defgpa/kernel_gpa.hpp"
#include "defgpa/scale.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace defgpa;

namespace {

// Dataset constructed as P_t = R*_t (sqrtLambda* Rg* G_t) + t* 1^T from a
// known feasible basis; the scale pipeline must recover Lambda*.
struct RigidWorld {
  Dataset dataset;
  Matrix basis;    // m x d
  Vector lambda;   // ground truth, non-ascending
  Matrix gauge;    // ground truth R_g
};

RigidWorld make_rigid_world(int d, Index m, int n, std::mt19937_64& rng,
                            double drop = 0.25) {
  RigidWorld world;
  world.basis = oracle::random_feasible_basis(m, d, rng);
  std::uniform_real_distribution<double> uni(0.5, 4.0);
  world.lambda.resize(d);
  for (int k = 0; k < d; ++k) world.lambda(k) = uni(rng);
  std::sort(world.lambda.data(), world.lambda.data() + d, std::greater<double>());
  world.gauge = oracle::random_rotation(d, rng);

  Matrix map = world.lambda.cwiseSqrt().asDiagonal() * world.gauge * world.basis.transpose();
  world.dataset.d = d;
  world.dataset.m = m;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int t = 0; t < n; ++t) {
    Visibility vis;
    vis.m = m;
    for (Index i = 0; i < m; ++i)
      if (t == 0 || coin(rng) >= drop) vis.ids.push_back(i);
    Matrix rot = oracle::random_rotation(d, rng);
    Vector tr = Vector::Random(d) * 2.0;
    View view;
    view.id = t + 1;
    view.vis = vis;
    view.cloud.data = (rot * select_columns(map, vis.ids)).colwise() + tr;
    world.dataset.views.push_back(std::move(view));
  }
  return world;
}

}  // namespace

TEST_CASE("special orthogonal Procrustes") {
  std::mt19937_64 rng(151);
  Matrix cloud = Matrix::Random(3, 10);
  cloud = cloud.colwise() - cloud.rowwise().mean().eval();

  // target equal to source
  CHECK((special_orthogonal_procrustes(cloud, cloud) - Matrix::Identity(3, 3)).norm() < 1e-12);

  // known rotation is recovered
  Matrix rot = oracle::random_rotation(3, rng);
  Matrix recovered = special_orthogonal_procrustes(cloud, rot * cloud);
  CHECK((recovered - rot).norm() < 1e-9);

  // reflected target still yields a proper rotation with nonzero residual
  Matrix reflect = Matrix::Identity(3, 3);
  reflect(2, 2) = -1.0;
  Matrix best = special_orthogonal_procrustes(cloud, reflect * cloud);
  CHECK(best.determinant() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK((best * cloud - reflect * cloud).norm() > 1e-3);
}

TEST_CASE("closed-form scale recovers the generating Lambda") {
  std::mt19937_64 rng(157);
  for (int trial = 0; trial < 10; ++trial) {
    int d = trial % 2 ? 2 : 3;
    RigidWorld world = make_rigid_world(d, 16, 6, rng);
    ClosedFormScale cf = closed_form_scale(world.dataset, world.basis);
    CHECK(cf.skipped_views.empty());
    for (int k = 0; k < d; ++k)
      CHECK(cf.lambda(k) == doctest::Approx(world.lambda(k)).epsilon(1e-8));
    // sqrtLambda Rg matches up to per-row sign
    Matrix expected = world.lambda.cwiseSqrt().asDiagonal() * world.gauge;
    Matrix got = cf.lambda.cwiseSqrt().asDiagonal() * cf.gauge;
    for (int r = 0; r < d; ++r) {
      double same = (got.row(r) - expected.row(r)).norm();
      double flipped = (got.row(r) + expected.row(r)).norm();
      CHECK(std::min(same, flipped) < 1e-7);
    }
  }
}

TEST_CASE("closed-form scale is quadratic under isotropic scaling") {
  std::mt19937_64 rng(163);
  RigidWorld world = make_rigid_world(3, 14, 5, rng);
  ClosedFormScale base = closed_form_scale(world.dataset, world.basis);
  Dataset scaled = world.dataset;
  const double s = 3.7;
  for (View& view : scaled.views) view.cloud.data *= s;
  ClosedFormScale after = closed_form_scale(scaled, world.basis);
  for (int k = 0; k < 3; ++k)
    CHECK(after.lambda(k) == doctest::Approx(s * s * base.lambda(k)).epsilon(1e-12));
}

TEST_CASE("init poses align clouds with the scaled basis") {
  std::mt19937_64 rng(167);
  RigidWorld world = make_rigid_world(3, 14, 5, rng, 0.0);
  std::vector<RigidPose> poses =
      init_poses(world.dataset, world.basis, world.lambda, world.gauge);
  Matrix map = world.lambda.cwiseSqrt().asDiagonal() * world.gauge * world.basis.transpose();
  for (size_t t = 0; t < world.dataset.views.size(); ++t) {
    const View& view = world.dataset.views[t];
    Matrix aligned = (poses[t].rotation * view.cloud.data).colwise() + poses[t].translation;
    CHECK((aligned - select_columns(map, view.vis.ids)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(poses[t].rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("refinement terminates immediately on exact data") {
  std::mt19937_64 rng(173);
  RigidWorld world = make_rigid_world(3, 15, 6, rng);
  ScaleOptions options;
  ScaleEstimate est = resolve_scale(world.dataset, world.basis, options);
  CHECK(est.refine_iterations <= 1);
  CHECK(est.final_cost < 1e-12);
  for (int k = 0; k < 3; ++k)
    CHECK(est.lambda(k) == doctest::Approx(world.lambda(k)).epsilon(1e-7));
  for (const RigidPose& pose : est.poses)
    CHECK(pose.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("flip equivariance: negating a basis column changes nothing after the sign fix") {
  std::mt19937_64 rng(179);
  Dataset dataset = oracle::random_dataset(3, 18, 5, rng, 0.1, 0.08, 0.02);
  Matrix basis = oracle::random_feasible_basis(18, 3, rng);
  ScaleOptions options;

  ScaleEstimate plain = resolve_scale(dataset, basis, options);
  Matrix flipped_basis = basis;
  flipped_basis.col(1) = -flipped_basis.col(1);
  ScaleEstimate flipped = resolve_scale(dataset, flipped_basis, options);

  Matrix map_plain =
      plain.lambda.cwiseSqrt().asDiagonal() * plain.gauge * basis.transpose();
  Matrix map_flipped = flipped.lambda.cwiseSqrt().asDiagonal() * flipped.gauge *
                       flipped_basis.transpose();
  CHECK((map_plain - map_flipped).norm() <= 1e-9 * std::max(1.0, map_plain.norm()));
  CHECK(flipped.final_cost == doctest::Approx(plain.final_cost).epsilon(1e-9));
  CHECK(plain.lambda.minCoeff() >= 0.0);
  CHECK((plain.gauge * plain.gauge.transpose() - Matrix::Identity(3, 3)).norm() < 1e-10);
}

TEST_CASE("refinement never increases the alignment cost") {
  std::mt19937_64 rng(181);
  for (int trial = 0; trial < 5; ++trial) {
    // pure-noise data: nothing rigid to find, the contract still holds
    Dataset dataset = oracle::random_dataset(2, 12, 4, rng, 0.0, 0.0, 0.5);
    Matrix basis = oracle::random_feasible_basis(12, 2, rng);
    ClosedFormScale cf = closed_form_scale(dataset, basis);
    ScaleEstimate init;
    init.lambda = cf.lambda;
    init.gauge = cf.gauge;
    init.skipped_views = cf.skipped_views;
    init.poses = init_poses(dataset, basis, cf.lambda, cf.gauge);

    double init_cost = 0;
    Matrix scale_gauge = cf.lambda.cwiseSqrt().asDiagonal() * cf.gauge;
    for (size_t t = 0; t < dataset.views.size(); ++t) {
      const View& view = dataset.views[t];
      Matrix g = select_columns(basis.transpose(), view.vis.ids);
      Matrix pbar = view.cloud.data.colwise() - view.cloud.data.rowwise().mean().eval();
      Matrix gbar = g.colwise() - g.rowwise().mean().eval();
      init_cost += (init.poses[t].rotation * pbar - scale_gauge * gbar).squaredNorm();
    }

    ScaleOptions options;
    ScaleEstimate refined = refine_scale(dataset, basis, init, options);
    CHECK(refined.final_cost <= init_cost + 1e-12);
  }
}

TEST_CASE("degeneracy detection distinguishes the three regimes") {
  std::mt19937_64 rng(191);

  // (a) zero deformation, noise free: d+1 near-zero eigenvalues
  {
    RigidWorld world = make_rigid_world(3, 14, 6, rng, 0.0);
    GpaOptions dummy;
    // build Q through the kernel path
    auto grams = build_grams(world.dataset, KernelSpec::gaussian_scaled(0.25),
                             ExecutionPolicy::Serial);
    auto ops = build_view_operators(world.dataset, grams, 0.1, ExecutionPolicy::Serial);
    Matrix q = assemble_q(world.dataset, ops);
    ShapeSolution shape = solve_shape(q, world.dataset.view_count(), 3);
    DegeneracyReport report = detect_degeneracy(q, shape, world.dataset);
    CHECK(report.zero_deformation);
    CHECK(report.near_zero_eigenvalues >= 4);
    CHECK(report.flat_views.empty());
    (void)dummy;
  }

  // (b) flat views flagged per view
  {
    Dataset dataset;
    dataset.d = 3;
    dataset.m = 10;
    for (int t = 0; t < 3; ++t) {
      View v = oracle::random_view(3, 10, rng);
      v.id = t + 1;
      v.cloud.data.row(2).setConstant(static_cast<double>(t));
      dataset.views.push_back(std::move(v));
    }
    auto grams =
        build_grams(dataset, KernelSpec::gaussian_scaled(0.25), ExecutionPolicy::Serial);
    auto ops = build_view_operators(dataset, grams, 0.1, ExecutionPolicy::Serial);
    Matrix q = assemble_q(dataset, ops);
    ShapeSolution shape = solve_shape(q, 3, 3);
    DegeneracyReport report = detect_degeneracy(q, shape, dataset);
    CHECK(report.flat_views.size() == 3);
  }

  // (c) generic noisy deformed data: no flags
  {
    Dataset dataset = oracle::random_dataset(3, 16, 5, rng, 0.1, 0.15, 0.05);
    auto grams =
        build_grams(dataset, KernelSpec::gaussian_scaled(0.25), ExecutionPolicy::Serial);
    auto ops = build_view_operators(dataset, grams, 0.1, ExecutionPolicy::Serial);
    Matrix q = assemble_q(dataset, ops);
    ShapeSolution shape = solve_shape(q, 5, 3);
    DegeneracyReport report = detect_degeneracy(q, shape, dataset);
    CHECK_FALSE(report.zero_deformation);
    CHECK(report.flat_views.empty());
  }
}

TEST_CASE("all-flat data drives the last scale to zero") {
  std::mt19937_64 rng(193);
  // planar map observed rigidly in 3D with in-plane distortions
  Index m = 20;
  Matrix map = Matrix::Zero(3, m);
  map.topRows(2) = Matrix::Random(2, m) * 2.0;
  Dataset dataset;
  dataset.d = 3;
  dataset.m = m;
  std::normal_distribution<double> gauss;
  for (int t = 0; t < 6; ++t) {
    View view;
    view.id = t + 1;
    view.vis.m = m;
    view.vis.ids.resize(static_cast<size_t>(m));
    std::iota(view.vis.ids.begin(), view.vis.ids.end(), Index{0});
    Matrix pts = map;
    for (Index j = 0; j < m; ++j) {  // small in-plane warp, z stays 0
      pts(0, j) += 0.03 * std::sin(map(1, j) + t);
      pts(1, j) += 0.03 * std::cos(map(0, j) - t);
    }
    Matrix rot = oracle::random_rotation(3, rng);
    Vector tr = Vector::Random(3);
    view.cloud.data = (rot * pts).colwise() + tr;
    dataset.views.push_back(std::move(view));
  }

  GpaOptions options;
  options.policy = ExecutionPolicy::Serial;
  options.allow_degenerate = true;
  KernelGpaSolution sol =
      register_kernel_gpa(dataset, KernelSpec::gaussian_scaled(0.25), 0.1, options);
  CHECK(sol.degeneracy.flat_views.size() == 6);
  CHECK(sol.lambda(2) <= 1e-8 * sol.lambda(0));
}

TEST_CASE("scale resolution fails cleanly when every view is skipped") {
  // a basis whose selected rows are rank deficient for every view
  Dataset dataset;
  dataset.d = 2;
  dataset.m = 6;
  View v;
  v.id = 1;
  v.vis.m = 6;
  v.vis.ids = {0, 1, 2, 3, 4, 5};
  v.cloud.data = Matrix::Random(2, 6);
  dataset.views.push_back(v);
  Matrix basis = Matrix::Zero(6, 2);
  basis.col(0).setConstant(1.0 / std::sqrt(6.0));  // rank 1 after centering: zero
  basis.col(1).setConstant(-1.0 / std::sqrt(6.0));
  CHECK_THROWS_AS(closed_form_scale(dataset, basis), NumericalError);
}
