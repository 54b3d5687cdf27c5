// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures.

#include "defgpa/baselines.hpp"
#include "defgpa/bench.hpp"
#include "defgpa/dataset_io.hpp"
#include "defgpa/execution.hpp"
#include "defgpa/kernel_gpa.hpp"
#include "defgpa/synthetic.hpp"

#include "oracles.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

using namespace defgpa;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

GpaOptions serial_options() {
  GpaOptions options;
  options.policy = ExecutionPolicy::Serial;
  return options;
}

// ---------------------------------------------------------------- 1
Outcome operator_invariants() {
  auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> size(6, 30);
  double worst_q1 = 0, worst_eig = 0, worst_gap = 0, worst_qh = 0, worst_sym = 0;
  for (int trial = 0; trial < 200; ++trial) {
    int d = trial % 2 ? 2 : 3;
    Index mt = size(rng);
    View view = oracle::random_view(d, mt, rng);
    GramMatrix g = gram(view.cloud, KernelSpec::gaussian_scaled(0.25));
    double mu = 0.02 + 0.05 * (trial % 7);
    ViewOperators ops = view_operators(view, g, mu);

    worst_sym = std::max(worst_sym, (ops.q - ops.q.transpose()).norm());
    worst_q1 = std::max(worst_q1, (ops.q * Vector::Ones(mt)).cwiseAbs().maxCoeff() /
                                      static_cast<double>(mt));
    Eigen::SelfAdjointEigenSolver<Matrix> es_q(ops.q, Eigen::EigenvaluesOnly);
    worst_eig = std::max(worst_eig, -es_q.eigenvalues().minCoeff());
    Matrix gap = Matrix::Identity(mt, mt) - ops.projector - ops.q;
    Eigen::SelfAdjointEigenSolver<Matrix> es_gap(0.5 * (gap + gap.transpose()),
                                                 Eigen::EigenvaluesOnly);
    worst_gap = std::max(worst_gap, -es_gap.eigenvalues().minCoeff());
    worst_qh = std::max(worst_qh, (ops.q - mu * ops.h).norm() / ops.q.norm());
  }
  double elapsed = seconds_since(start);
  Outcome out;
  out.pass = worst_sym == 0.0 && worst_q1 <= 1e-9 && worst_eig <= 1e-9 &&
             worst_gap <= 1e-9 && worst_qh <= 1e-9 && elapsed < 10.0;
  std::ostringstream ss;
  ss << "200 instances, worst |Q1|/m_t " << worst_q1 << ", min-eig(Q) >= -" << worst_eig
     << ", min-eig(I-P-Q) >= -" << worst_gap << ", |Q-muH|/|Q| " << worst_qh << ", "
     << elapsed << " s";
  out.detail = ss.str();
  return out;
}

// ---------------------------------------------------------------- 2
Outcome closed_form_equivalence() {
  std::mt19937_64 rng(1002);
  std::uniform_int_distribution<int> size(6, 12);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int d = trial % 2 ? 2 : 3;
    View view = oracle::random_view(d, size(rng), rng);
    GramMatrix g = gram(view.cloud, KernelSpec::gaussian_scaled(0.3));
    double mu = 0.02 + 0.07 * (trial % 5);
    ViewOperators ops = view_operators(view, g, mu);
    Matrix reference = oracle::q_from_delta(view, g.matrix, mu);
    worst = std::max(worst, (ops.q - reference).norm() / reference.norm());
  }
  Outcome out;
  out.pass = worst <= 1e-8;
  out.detail = "100 instances, worst relative Frobenius gap " + std::to_string(worst);
  return out;
}

// ---------------------------------------------------------------- 3
Outcome global_optimality() {
  const int problems = 50;
  const int samples = 100000;
  int failures = 0;
  double worst_margin = -1e300;
#pragma omp parallel for schedule(dynamic) reduction(+ : failures) \
    reduction(max : worst_margin)
  for (int trial = 0; trial < problems; ++trial) {
    std::mt19937_64 rng(2000 + static_cast<uint64_t>(trial));
    Index m = 5 + trial % 4;  // 5..8
    int d = (trial % 2) ? 2 : 3;
    Matrix x_gen = oracle::random_feasible_basis(m, static_cast<int>(m - 1), rng);
    std::uniform_real_distribution<double> uni(0.05, 2.0);
    Matrix q = Matrix::Zero(m, m);
    for (Index k = 0; k < m - 1; ++k) q += uni(rng) * x_gen.col(k) * x_gen.col(k).transpose();
    q = 0.5 * (q + q.transpose());

    Vector lambda(d);
    for (int k = 0; k < d; ++k) lambda(k) = uni(rng);
    std::sort(lambda.data(), lambda.data() + d, std::greater<double>());

    ShapeSolution sol = solve_shape(q, 3, d);
    double cost = (sol.basis.transpose() * q * sol.basis * lambda.asDiagonal()).trace();

    double best_sampled = 1e300;
    for (int s = 0; s < samples; ++s) {
      Matrix y = oracle::random_feasible_basis(m, d, rng);
      best_sampled =
          std::min(best_sampled, (y.transpose() * q * y * lambda.asDiagonal()).trace());
    }
    if (cost > best_sampled + 1e-10) ++failures;
    worst_margin = std::max(worst_margin, cost - best_sampled);
  }
  Outcome out;
  out.pass = failures == 0;
  std::ostringstream ss;
  ss << problems << " problems x " << samples << " samples, worst (solver - sampled min) = "
     << worst_margin << " (<= 0 means never exceeded)";
  out.detail = ss.str();
  return out;
}

// ---------------------------------------------------------------- 4
Outcome coordinate_invariance() {
  std::mt19937_64 rng(1004);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    int d = trial % 2 ? 2 : 3;
    Dataset dataset = oracle::random_dataset(d, 20, 5, rng, 0.15, 0.1, 0.01);
    KernelSpec spec = KernelSpec::gaussian_scaled(0.25);
    KernelGpaSolution base = register_kernel_gpa(dataset, spec, 0.1, serial_options());

    Dataset moved = dataset;
    for (View& view : moved.views) {
      Matrix rot = oracle::random_rotation(d, rng);
      Vector tr = Vector::Random(d) * 4.0;
      view.cloud.data = (rot * view.cloud.data).colwise() + tr;
    }
    KernelGpaSolution after = register_kernel_gpa(moved, spec, 0.1, serial_options());

    Matrix ma = after.map;
    for (int r = 0; r < d; ++r)
      if (base.map.row(r).dot(ma.row(r)) < 0) ma.row(r) = -ma.row(r);
    worst = std::max(worst, (base.map - ma).norm());
  }
  Outcome out;
  out.pass = worst <= 1e-6;
  out.detail = "20 trials, worst map change " + std::to_string(worst) + " Frobenius";
  return out;
}

// ---------------------------------------------------------------- 5
Outcome affine_limit() {
  std::mt19937_64 rng(1005);
  double worst_map = 0, worst_cost = 0;
  for (int trial = 0; trial < 10; ++trial) {
    int d = trial % 2 ? 2 : 3;
    Dataset dataset = oracle::random_dataset(d, 18, 5, rng, 0.15, 0.1, 0.02);
    KernelGpaSolution kernel =
        register_kernel_gpa(dataset, KernelSpec::gaussian_scaled(0.25), 1e12, serial_options());
    LbwGpaSolution affine = affine_gpa(dataset, serial_options());

    Matrix mk = kernel.map;
    for (int r = 0; r < d; ++r)
      if (affine.map.row(r).dot(mk.row(r)) < 0) mk.row(r) = -mk.row(r);
    worst_map = std::max(worst_map, (mk - affine.map).norm() / affine.map.norm());
    worst_cost = std::max(worst_cost,
                          std::abs(kernel.cost - affine.cost) / std::max(affine.cost, 1e-12));
  }
  Outcome out;
  out.pass = worst_map <= 1e-4 && worst_cost <= 1e-4;
  out.detail = "10 trials, worst relative gap: map " + std::to_string(worst_map) + ", cost " +
               std::to_string(worst_cost);
  return out;
}

// ---------------------------------------------------------------- 6
Outcome exact_fit_degeneracy() {
  std::mt19937_64 rng(1006);
  SynthConfig config;
  config.m = 50;
  config.n = 10;
  config.d = 3;
  config.shape = SynthConfig::Shape::SphereSamples;
  config.shape_scale = 1.0;  // unit scale: absolute and relative tolerances agree
  config.deform = SynthConfig::DeformKind::None;
  config.noise_sigma = 0.0;
  config.drop_fraction = 0.0;
  config.pose_model = SynthConfig::PoseModel::RandomRigid;
  config.seed = 99;
  auto [dataset, truth] = generate(config);

  auto grams = build_grams(dataset, KernelSpec::gaussian_scaled(0.25), ExecutionPolicy::Serial);
  auto ops = build_view_operators(dataset, grams, 0.1, ExecutionPolicy::Serial);
  Matrix q = assemble_q(dataset, ops);
  Eigen::SelfAdjointEigenSolver<Matrix> es(q, Eigen::EigenvaluesOnly);
  double tau0 = 1e-8 * q.trace() / static_cast<double>(dataset.m);
  int below = 0;
  for (Index i = 0; i < dataset.m; ++i)
    if (es.eigenvalues()(i) < tau0) ++below;

  KernelGpaSolution sol =
      register_kernel_gpa(dataset, KernelSpec::gaussian_scaled(0.25), 0.1, serial_options());
  double shape_gap = oracle::shape_distance(sol.map, truth.map);
  double rel = shape_gap / truth.map.norm();

  Outcome out;
  out.pass = below >= 4 && sol.degeneracy.zero_deformation && rel <= 1e-6;
  std::ostringstream ss;
  ss << below << " eigenvalues below tau0, flag "
     << (sol.degeneracy.zero_deformation ? "raised" : "missing") << ", shape gap " << rel
     << " (relative)";
  out.detail = ss.str();
  return out;
}

// ---------------------------------------------------------------- 7
Outcome flat_view_degeneracy() {
  std::mt19937_64 rng(1007);
  Index m = 40;
  Matrix map = Matrix::Zero(3, m);
  map.topRows(2) = Matrix::Random(2, m) * 2.0;
  Dataset dataset;
  dataset.d = 3;
  dataset.m = m;
  for (int t = 0; t < 8; ++t) {
    View view;
    view.id = t + 1;
    view.vis.m = m;
    view.vis.ids.resize(static_cast<size_t>(m));
    std::iota(view.vis.ids.begin(), view.vis.ids.end(), Index{0});
    Matrix pts = map;
    for (Index j = 0; j < m; ++j) {  // in-plane deformation keeps the views flat
      pts(0, j) += 0.05 * std::sin(1.7 * map(1, j) + t);
      pts(1, j) += 0.05 * std::cos(1.3 * map(0, j) - t);
    }
    Matrix rot = oracle::random_rotation(3, rng);
    view.cloud.data = (rot * pts).colwise() + Vector::Random(3);
    dataset.views.push_back(std::move(view));
  }
  GpaOptions options = serial_options();
  options.allow_degenerate = true;
  KernelGpaSolution sol =
      register_kernel_gpa(dataset, KernelSpec::gaussian_scaled(0.25), 0.1, options);
  Outcome out;
  double ratio = sol.lambda(2) / sol.lambda(0);
  out.pass = sol.degeneracy.flat_views.size() == dataset.views.size() && ratio <= 1e-6;
  out.detail = std::to_string(sol.degeneracy.flat_views.size()) +
               " flat views flagged, lambda3/lambda1 = " + std::to_string(ratio);
  return out;
}

// ---------------------------------------------------------------- 8
Outcome scale_recovery() {
  std::mt19937_64 rng(1008);
  double worst_lambda = 0, worst_flip = 0;
  bool monotone = true;
  for (int trial = 0; trial < 50; ++trial) {
    int d = trial % 2 ? 2 : 3;
    Index m = 14 + trial % 5;
    Matrix basis = oracle::random_feasible_basis(m, d, rng);
    std::uniform_real_distribution<double> uni(0.5, 4.0);
    Vector lambda_true(d);
    for (int k = 0; k < d; ++k) lambda_true(k) = uni(rng);
    std::sort(lambda_true.data(), lambda_true.data() + d, std::greater<double>());
    Matrix gauge_true = oracle::random_rotation(d, rng);
    Matrix map = lambda_true.cwiseSqrt().asDiagonal() * gauge_true * basis.transpose();

    Dataset dataset;
    dataset.d = d;
    dataset.m = m;
    std::uniform_real_distribution<double> coin(0, 1);
    for (int t = 0; t < 6; ++t) {
      Visibility vis;
      vis.m = m;
      for (Index i = 0; i < m; ++i)
        if (t == 0 || coin(rng) > 0.2) vis.ids.push_back(i);
      View view;
      view.id = t + 1;
      view.vis = vis;
      view.cloud.data = (oracle::random_rotation(d, rng) * select_columns(map, vis.ids))
                            .colwise() +
                        Vector::Random(d);
      dataset.views.push_back(std::move(view));
    }

    ScaleOptions options;
    ScaleEstimate est = resolve_scale(dataset, basis, options);
    for (int k = 0; k < d; ++k)
      worst_lambda = std::max(
          worst_lambda, std::abs(est.lambda(k) - lambda_true(k)) / lambda_true(k));
    for (size_t i = 1; i < est.cost_trace.size(); ++i)
      if (est.cost_trace[i] > est.cost_trace[i - 1]) monotone = false;

    // flip-equivariance
    Matrix flipped_basis = basis;
    flipped_basis.col(d - 1) = -flipped_basis.col(d - 1);
    ScaleEstimate flipped = resolve_scale(dataset, flipped_basis, options);
    Matrix map_a = est.lambda.cwiseSqrt().asDiagonal() * est.gauge * basis.transpose();
    Matrix map_b =
        flipped.lambda.cwiseSqrt().asDiagonal() * flipped.gauge * flipped_basis.transpose();
    worst_flip = std::max(worst_flip, (map_a - map_b).norm());
  }
  Outcome out;
  out.pass = worst_lambda <= 1e-6 && monotone && worst_flip <= 1e-9;
  std::ostringstream ss;
  ss << "50 trials, worst lambda error " << worst_lambda << " rel, cost trace "
     << (monotone ? "monotone" : "NOT monotone") << ", flip gap " << worst_flip;
  out.detail = ss.str();
  return out;
}

// ---------------------------------------------------------------- 9
Outcome table_trend() {
  int wins = 0;
  double slowest = 0;
  for (int run = 0; run < 20; ++run) {
    auto start = std::chrono::steady_clock::now();
    LiverLikePreset preset;
    preset.seed = 500 + static_cast<uint64_t>(run);
    std::vector<BenchRow> rows = run_liver_like(preset);
    double rigid = rows[0].stats.mean, affine = rows[1].stats.mean,
           tps = rows[2].stats.mean, kernel = rows[3].stats.mean;
    if (kernel <= tps && tps < affine && affine < rigid) ++wins;
    slowest = std::max(slowest, seconds_since(start));
  }
  Outcome out;
  out.pass = wins >= 18 && slowest < 60.0;
  out.detail = "ordering kernel <= tps < affine < rigid in " + std::to_string(wins) +
               "/20 runs, slowest run " + std::to_string(slowest) + " s";
  return out;
}

// ---------------------------------------------------------------- 10
Outcome extrapolation_protocol() {
  int wins = 0;
  for (int run = 0; run < 20; ++run) {
    LiverLikePreset preset;
    preset.seed = 900 + static_cast<uint64_t>(run);
    std::vector<BenchRow> rows = run_extrapolation(preset, 0.1);
    double rigid = rows[0].stats.mean, tps = rows[2].stats.mean,
           kernel = rows[3].stats.mean;
    if (kernel <= 0.5 * rigid && tps <= 0.5 * rigid) ++wins;
  }
  Outcome out;
  out.pass = wins >= 18;
  out.detail = "kernel and tps both <= 50% of rigid in " + std::to_string(wins) + "/20 runs";
  return out;
}

// ---------------------------------------------------------------- 11
Outcome cross_path() {
  std::mt19937_64 rng(1011);
  double worst_map = 0, worst_cost = 0, worst_q1 = 0;
  for (int trial = 0; trial < 5; ++trial) {
    int d = trial % 2 ? 2 : 3;
    Dataset dataset = oracle::random_dataset(d, 16, 5, rng, 0.2, 0.1, 0.02);
    LbwGpaSolution direct = affine_gpa(dataset, serial_options());

    std::vector<LbwViewBasis> bases(dataset.views.size());
    for (size_t t = 0; t < dataset.views.size(); ++t) {
      bases[t].basis_eval = affine_basis(dataset.views[t].cloud);
      bases[t].regularizer = Matrix::Zero(d + 1, d + 1);
      bases[t].is_affine = true;
    }
    LbwGpaSolution via = lbw_gpa(dataset, std::move(bases), 1.0, serial_options());
    worst_map = std::max(worst_map,
                         (direct.map - via.map).norm() / std::max(1.0, direct.map.norm()));
    worst_cost =
        std::max(worst_cost, std::abs(direct.cost - via.cost) / std::max(direct.cost, 1e-12));

    // Q 1 = 0 for the affine and TPS basis forms
    for (int which = 0; which < 2; ++which) {
      Matrix q_global = Matrix::Zero(dataset.m, dataset.m);
      for (const View& view : dataset.views) {
        Matrix b, xi;
        if (which == 0) {
          b = affine_basis(view.cloud);
          xi = Matrix::Zero(d + 1, d + 1);
        } else {
          LbwSpec spec;
          spec.kind = LbwSpec::Kind::Tps;
          ControlGrid grid = place_control_grid(view.cloud, 3);
          spec.control_points = grid.points;
          TpsBasisResult r = tps_basis(view.cloud, spec);
          b = r.basis_eval;
          xi = r.bending_energy;
        }
        Matrix normal = b * b.transpose() + 0.01 * xi;
        Matrix q = -b.transpose() * normal.ldlt().solve(b);
        q.diagonal().array() += 1.0;
        scatter_add(q_global, q, view.vis.ids);
      }
      worst_q1 =
          std::max(worst_q1, (q_global * Vector::Ones(dataset.m)).cwiseAbs().maxCoeff());
    }
  }
  Outcome out;
  out.pass = worst_map <= 1e-10 && worst_cost <= 1e-10 && worst_q1 <= 1e-8;
  std::ostringstream ss;
  ss << "worst map gap " << worst_map << ", cost gap " << worst_cost << ", |Q1| " << worst_q1;
  out.detail = ss.str();
  return out;
}

// ---------------------------------------------------------------- 12
Outcome persistence() {
  fs::path root = fs::temp_directory_path() / "defgpa_acceptance_persistence";
  fs::remove_all(root);

  auto pipeline = [&](const std::string& tag) {
    fs::path dir = root / tag;
    SynthConfig config;
    config.m = 60;
    config.n = 8;
    config.noise_sigma = 0.5;
    config.seed = 4321;
    auto [dataset, truth] = generate(config);
    save_dataset(dataset, (dir / "ds").string(), "mm", &truth);
    Dataset loaded = load_dataset((dir / "ds").string());

    bool bits_ok = true;
    for (size_t t = 0; t < dataset.views.size(); ++t)
      bits_ok = bits_ok && (loaded.views[t].cloud.data - dataset.views[t].cloud.data)
                                   .cwiseAbs()
                                   .maxCoeff() == 0.0;

    RunParams params;
    FittedModel model = fit(loaded, Method::Kernel, params);
    save_solution(model, params, (dir / "res").string());
    FittedModel reloaded = load_solution((dir / "res").string(), loaded);

    std::vector<Index> ids(static_cast<size_t>(loaded.m));
    std::iota(ids.begin(), ids.end(), Index{0});
    TestViews views = extract_test_views(loaded, ids);
    EvalReport report = evaluate_on_views(reloaded, views);
    save_report(report, (dir / "report.json").string());
    EvalReport final_report = load_report((dir / "report.json").string());
    return std::make_pair(bits_ok, final_report);
  };

  auto [bits_a, report_a] = pipeline("a");
  auto [bits_b, report_b] = pipeline("b");

  bool identical = report_a.delta.size() == report_b.delta.size() &&
                   (report_a.delta - report_b.delta).cwiseAbs().maxCoeff() == 0.0 &&
                   report_a.stats.min == report_b.stats.min &&
                   report_a.stats.max == report_b.stats.max &&
                   report_a.stats.mean == report_b.stats.mean;
  fs::remove_all(root);

  Outcome out;
  out.pass = bits_a && bits_b && identical;
  out.detail = std::string("coordinates ") + (bits_a && bits_b ? "bit-stable" : "CHANGED") +
               ", repeated pipeline reports " + (identical ? "identical" : "DIFFER");
  return out;
}

}  // namespace

int main() {
  apply_thread_cap();
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"1 operator invariants", operator_invariants},
      {"2 closed-form equivalence oracle", closed_form_equivalence},
      {"3 global optimality", global_optimality},
      {"4 coordinate-transform invariance", coordinate_invariance},
      {"5 infinite-mu affine limit", affine_limit},
      {"6 exact-fit degeneracy", exact_fit_degeneracy},
      {"7 flat-view degeneracy", flat_view_degeneracy},
      {"8 scale resolution", scale_recovery},
      {"9 benchmark trend", table_trend},
      {"10 extrapolation protocol", extrapolation_protocol},
      {"11 affine cross-path check", cross_path},
      {"12 persistence", persistence},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    Outcome outcome;
    std::string detail;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    if (!outcome.pass) ++failures;
    std::printf("%s  criterion %s: %s\n", outcome.pass ? "PASS" : "FAIL", criterion.name,
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/12 criteria passed\n", 12 - failures);
  return failures;
}
