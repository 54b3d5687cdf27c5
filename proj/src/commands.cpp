#include "defgpa/commands.hpp"

#include "defgpa/bench.hpp"
#include "defgpa/dataset_io.hpp"
#include "defgpa/errors.hpp"
#include "defgpa/execution.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

namespace defgpa {

using nlohmann::json;

namespace {

int guarded(const char* what, int (*body)(const void*), const void* args) {
  try {
    return body(args);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "%s: %s\n", what, e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "%s: numerical failure: %s\n", what, e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: %s\n", what, e.what());
    return 1;
  }
}

template <typename F>
int guard(const char* what, F&& f) {
  auto body = [](const void* fn) { return (*static_cast<const F*>(fn))(); };
  return guarded(what, body, &f);
}

json load_json_or_empty(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return j;
}

SynthConfig parse_synth_config(const json& j) {
  SynthConfig config;
  config.m = j.value("m", config.m);
  config.n = j.value("n", config.n);
  config.d = j.value("d", config.d);
  std::string shape = j.value("shape", "sphere_samples");
  if (shape == "grid3d")
    config.shape = SynthConfig::Shape::Grid3d;
  else if (shape == "sphere_samples")
    config.shape = SynthConfig::Shape::SphereSamples;
  else if (shape == "loaded_cloud")
    config.shape = SynthConfig::Shape::LoadedCloud;
  else
    throw ValidationError("synth config: unknown shape '" + shape + "'");
  config.cloud_path = j.value("cloud_path", "");
  config.shape_scale = j.value("shape_scale", config.shape_scale);
  if (j.contains("deform")) {
    const json& dj = j.at("deform");
    std::string kind = dj.value("kind", "gaussian_bumps");
    if (kind == "none") {
      config.deform = SynthConfig::DeformKind::None;
    } else if (kind == "gaussian_bumps") {
      config.deform = SynthConfig::DeformKind::GaussianBumps;
      config.bumps.count = dj.value("count", config.bumps.count);
      config.bumps.amplitude = dj.value("amplitude", config.bumps.amplitude);
      config.bumps.width = dj.value("width", config.bumps.width);
    } else if (kind == "tps_random") {
      config.deform = SynthConfig::DeformKind::TpsRandom;
      config.tps.controls = dj.value("controls", config.tps.controls);
      config.tps.amplitude = dj.value("amplitude", config.tps.amplitude);
    } else {
      throw ValidationError("synth config: unknown deform kind '" + kind + "'");
    }
  }
  config.noise_sigma = j.value("noise_sigma", config.noise_sigma);
  config.drop_fraction = j.value("drop_fraction", config.drop_fraction);
  std::string pose = j.value("pose_model", "circle_trajectory");
  if (pose == "circle_trajectory")
    config.pose_model = SynthConfig::PoseModel::CircleTrajectory;
  else if (pose == "random_rigid")
    config.pose_model = SynthConfig::PoseModel::RandomRigid;
  else
    throw ValidationError("synth config: unknown pose model '" + pose + "'");
  config.seed = j.value("seed", config.seed);
  return config;
}

}  // namespace

int cmd_synth(const SynthArgs& args) {
  return guard("synth", [&]() {
    apply_thread_cap();
    SynthConfig config = parse_synth_config(load_json_or_empty(args.config_path));
    if (args.seed >= 0) config.seed = static_cast<uint64_t>(args.seed);
    if (config.shape == SynthConfig::Shape::LoadedCloud && !config.cloud_path.empty()) {
      config.loaded_points = load_points_csv(config.cloud_path);
      config.d = static_cast<int>(config.loaded_points.rows());
      config.m = config.loaded_points.cols();
    }
    auto [dataset, truth] = generate(config);
    save_dataset(dataset, args.out_dir, "mm", &truth);
    std::printf("synth: wrote %d views, m=%ld, d=%d to %s\n",
                static_cast<int>(dataset.views.size()), static_cast<long>(dataset.m),
                dataset.d, args.out_dir.c_str());
    return 0;
  });
}

int cmd_register(const RegisterArgs& args) {
  return guard("register", [&]() {
    apply_thread_cap();
    Dataset dataset = load_dataset(args.dataset_dir);

    json config = load_json_or_empty(args.config_path);
    RunParams params;
    std::string method_name_str = config.value("method", "kernel");
    if (config.contains("kernel")) {
      const json& kj = config.at("kernel");
      if (kj.value("kind", "gaussian") != "gaussian")
        throw ValidationError("run config: only the gaussian kernel is implemented");
      if (kj.contains("sigma"))
        params.kernel = KernelSpec::gaussian_fixed(kj.at("sigma").get<double>());
      else
        params.kernel = KernelSpec::gaussian_scaled(kj.value("p", 0.25));
    }
    params.mu = config.value("mu", params.mu);
    if (config.contains("warp")) {
      const json& wj = config.at("warp");
      params.tps.per_axis = wj.value("per_axis", params.tps.per_axis);
      params.tps.mu = wj.value("mu", params.tps.mu);
    }
    if (config.contains("scale")) {
      const json& sj = config.at("scale");
      params.gpa.scale.refine = sj.value("refine", true);
      params.gpa.scale.max_iterations = sj.value("max_iters", 100);
      params.gpa.scale.tolerance = sj.value("tol", 1e-10);
    }

    if (args.method) method_name_str = *args.method;
    if (args.sigma) params.kernel = KernelSpec::gaussian_fixed(*args.sigma);
    else if (args.p) params.kernel = KernelSpec::gaussian_scaled(*args.p);
    if (args.mu) params.mu = *args.mu;
    if (args.tps_per_axis) params.tps.per_axis = *args.tps_per_axis;
    if (args.tps_mu) params.tps.mu = *args.tps_mu;
    if (args.refine) params.gpa.scale.refine = *args.refine;
    params.gpa.allow_degenerate = !args.strict_rank;
    if (args.serial) {
      params.gpa.policy = ExecutionPolicy::Serial;
      params.rigid.policy = ExecutionPolicy::Serial;
    }

    Method method = parse_method(method_name_str);
    FittedModel model = fit(dataset, method, params);

    const DegeneracyReport* degeneracy = nullptr;
    if (const auto* lbw = std::get_if<LbwGpaSolution>(&model.solution))
      degeneracy = &lbw->degeneracy;
    else if (const auto* kernel = std::get_if<KernelGpaSolution>(&model.solution))
      degeneracy = &kernel->degeneracy;
    if (degeneracy) {
      for (int t : degeneracy->flat_views)
        std::fprintf(stderr, "warning: view %d is flat (rank-deficient homogenized cloud)\n",
                     t + 1);
      if (degeneracy->zero_deformation)
        std::fprintf(stderr,
                     "warning: %d+1 near-zero eigenvalues: zero-deformation degeneracy, "
                     "gauge resolved through R_g\n",
                     dataset.d);
    }

    save_solution(model, params, args.out_dir);
    std::printf("register: method=%s fit in %.1f ms, results in %s\n",
                method_name(method).c_str(), model.fit_runtime_ms, args.out_dir.c_str());
    return 0;
  });
}

int cmd_eval(const EvalArgs& args) {
  return guard("eval", [&]() {
    apply_thread_cap();
    Dataset dataset = load_dataset(args.dataset_dir);
    FittedModel model = load_solution(args.results_dir, dataset);

    std::vector<Index> ids;
    if (!args.split_path.empty()) {
      ids = load_split(args.split_path);
      if (static_cast<Index>(ids.size()) >= dataset.m && ids.size() > 1)
        throw ValidationError("eval: the split holds out every correspondence");
    } else {
      ids.resize(static_cast<size_t>(dataset.m));
      std::iota(ids.begin(), ids.end(), Index{0});
    }
    if (ids.empty()) throw ValidationError("eval: empty test split");

    TestViews views = extract_test_views(dataset, ids);
    EvalReport report = evaluate_on_views(model, views);
    save_report(report, args.out_path);
    std::printf("eval: method=%s delta min/mean/max = %.6g / %.6g / %.6g -> %s\n",
                report.method.c_str(), report.stats.min, report.stats.mean, report.stats.max,
                args.out_path.c_str());
    return 0;
  });
}

int cmd_check(const CheckArgs& args) {
  return guard("check", [&]() {
    apply_thread_cap();
    Dataset dataset = load_dataset(args.dataset_dir);
    std::printf("dataset: n=%d views, m=%ld correspondences, d=%d\n",
                static_cast<int>(dataset.views.size()), static_cast<long>(dataset.m),
                dataset.d);

    std::vector<int> counts = visibility_counts(dataset);
    int min_vis = counts.empty() ? 0 : *std::min_element(counts.begin(), counts.end());
    std::printf("visibility: min per-point count %d\n", min_vis);

    KernelSpec spec = KernelSpec::gaussian_scaled(args.p);
    std::vector<GramMatrix> grams = build_grams(dataset, spec, ExecutionPolicy::Parallel);
    std::vector<ViewOperators> ops =
        build_view_operators(dataset, grams, args.mu, ExecutionPolicy::Parallel);
    for (size_t t = 0; t < ops.size(); ++t) {
      std::printf("view %3d: m_t=%4ld sigma=%.4g rank(Ptilde)=%ld%s%s\n",
                  dataset.views[t].id, static_cast<long>(dataset.views[t].count()),
                  grams[t].sigma, static_cast<long>(ops[t].ptilde_rank),
                  ops[t].ptilde_rank <= dataset.d ? "  FLAT" : "",
                  grams[t].jitter_applied > 0 ? "  (jitter applied)" : "");
    }

    Matrix q_global = assemble_q(dataset, ops);
    ShapeSolution shape = solve_shape(q_global, dataset.view_count(), dataset.d);
    DegeneracyReport report = detect_degeneracy(q_global, shape, dataset);
    std::printf("bottom spectrum of Q:");
    for (Index i = 0; i < report.bottom_spectrum.size(); ++i)
      std::printf(" %.3e", report.bottom_spectrum(i));
    std::printf("\n");
    std::printf("near-zero eigenvalues (tau0=%.3e): %d\n", report.tau0,
                report.near_zero_eigenvalues);
    if (report.zero_deformation)
      std::printf("diagnosis: d+1 near-zero eigenvalues -> zero-deformation/noise-free "
                  "degeneracy; gauge U_g resolved through R_g\n");
    if (!report.flat_views.empty()) {
      std::printf("flat views:");
      for (int t : report.flat_views) std::printf(" %d", t + 1);
      std::printf("\n");
    }
    if (!report.zero_deformation && report.flat_views.empty())
      std::printf("diagnosis: no degeneracies detected\n");
    return 0;
  });
}

int cmd_bench(const BenchArgs& args) {
  return guard("bench", [&]() {
    apply_thread_cap();
    if (args.preset != "liver-like")
      throw ValidationError("bench: unknown preset '" + args.preset + "' (have: liver-like)");
    if (args.runs < 1) throw ValidationError("bench: runs must be >= 1");

    std::string csv = "method,run,min,max,mean,runtime_ms\n";
    for (int run = 0; run < args.runs; ++run) {
      LiverLikePreset preset;
      preset.seed = args.seed + static_cast<uint64_t>(run);
      std::vector<BenchRow> rows = run_liver_like(preset);
      for (const BenchRow& row : rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%.6f,%.1f\n",
                      method_name(row.method).c_str(), run, row.stats.min, row.stats.max,
                      row.stats.mean, row.runtime_ms);
        csv += buf;
        std::printf("%s", buf);
      }
    }
    std::ofstream out(args.out_path);
    if (!out) throw ValidationError("cannot write " + args.out_path);
    out << csv;
    return 0;
  });
}

}  // namespace defgpa
