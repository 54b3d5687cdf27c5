#include "defgpa/dataset_io.hpp"

#include "defgpa/errors.hpp"

#include <json.hpp>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace defgpa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw ValidationError(what + ": expected a 2D array");
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(j.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    const json& row = j[static_cast<size_t>(i)];
    if (static_cast<Index>(row.size()) != m.cols())
      throw ValidationError(what + ": ragged rows");
    for (Index c = 0; c < m.cols(); ++c) m(i, c) = row[static_cast<size_t>(c)].get<double>();
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<size_t>(i)].get<double>();
  return v;
}

json load_json_file(const std::string& path) {
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

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
  if (!out) throw ValidationError("write failed for " + path);
}

std::string view_file_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%03d.csv", id);
  return buf;
}

json pose_to_json(const RigidPose& pose) {
  return json{{"rotation", matrix_to_json(pose.rotation)},
              {"translation", vector_to_json(pose.translation)}};
}

RigidPose pose_from_json(const json& j) {
  return RigidPose{matrix_from_json(j.at("rotation"), "pose rotation"),
                   vector_from_json(j.at("translation"), "pose translation")};
}

}  // namespace

Dataset load_dataset(const std::string& dir, DatasetManifest* manifest_out) {
  const std::string manifest_path = (fs::path(dir) / "dataset.json").string();
  json manifest = load_json_file(manifest_path);

  DatasetManifest mf;
  try {
    mf.version = manifest.at("version").get<int>();
    mf.d = manifest.at("d").get<int>();
    mf.m = manifest.at("m").get<Index>();
    mf.n = manifest.at("n").get<int>();
    mf.units = manifest.value("units", "mm");
    for (const json& v : manifest.at("views")) mf.view_files.push_back(v.at("file"));
    mf.ground_truth_file = manifest.value("ground_truth", "");
  } catch (const json::exception& e) {
    throw ValidationError(manifest_path + ": " + e.what());
  }
  if (mf.version != 1)
    throw ValidationError(manifest_path + ": unsupported version " + std::to_string(mf.version));
  if (static_cast<int>(mf.view_files.size()) != mf.n)
    throw ValidationError(manifest_path + ": declared n=" + std::to_string(mf.n) + " but " +
                          std::to_string(mf.view_files.size()) + " view files are listed");

  Dataset dataset;
  dataset.d = mf.d;
  dataset.m = mf.m;
  for (size_t t = 0; t < mf.view_files.size(); ++t) {
    const std::string path = (fs::path(dir) / mf.view_files[t]).string();
    std::ifstream in(path);
    if (!in) throw ValidationError("missing view file " + path);

    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
    const int expected_cols = mf.d + 1;

    View view;
    view.id = static_cast<int>(t) + 1;
    view.vis.m = mf.m;
    std::vector<Vector> points;
    std::vector<Index> raw_ids;
    std::vector<char> seen(static_cast<size_t>(mf.m), 0);
    int line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string field;
      std::vector<std::string> fields;
      while (std::getline(ss, field, ',')) fields.push_back(field);
      if (static_cast<int>(fields.size()) != expected_cols)
        throw ValidationError(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(expected_cols) + " columns, got " +
                              std::to_string(fields.size()));
      errno = 0;
      char* end = nullptr;
      long id = std::strtol(fields[0].c_str(), &end, 10);
      if (errno || end == fields[0].c_str() || *end != '\0')
        throw ValidationError(path + ":" + std::to_string(line_no) + ": bad corr_id '" +
                              fields[0] + "'");
      if (id < 1 || id > static_cast<long>(mf.m))
        throw ValidationError(path + ":" + std::to_string(line_no) + ": corr_id " +
                              std::to_string(id) + " outside [1, " + std::to_string(mf.m) + "]");
      if (seen[static_cast<size_t>(id - 1)])
        throw ValidationError(path + ":" + std::to_string(line_no) + ": duplicate corr_id " +
                              std::to_string(id));
      seen[static_cast<size_t>(id - 1)] = 1;

      Vector p(mf.d);
      for (int c = 0; c < mf.d; ++c) {
        errno = 0;
        end = nullptr;
        double v = std::strtod(fields[static_cast<size_t>(c + 1)].c_str(), &end);
        if (errno || end == fields[static_cast<size_t>(c + 1)].c_str() || *end != '\0' ||
            !std::isfinite(v))
          throw ValidationError(path + ":" + std::to_string(line_no) +
                                ": non-finite or malformed coordinate '" +
                                fields[static_cast<size_t>(c + 1)] + "'");
        p(c) = v;
      }
      raw_ids.push_back(static_cast<Index>(id - 1));
      points.push_back(std::move(p));
    }
    if (points.empty()) throw ValidationError(path + ": view has no points");

    // sort by id
    std::vector<size_t> order(points.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return raw_ids[a] < raw_ids[b]; });
    view.cloud.data.resize(mf.d, static_cast<Index>(points.size()));
    for (size_t i = 0; i < order.size(); ++i) {
      view.vis.ids.push_back(raw_ids[order[i]]);
      view.cloud.data.col(static_cast<Index>(i)) = points[order[i]];
    }
    dataset.views.push_back(std::move(view));
  }
  dataset.validate();
  if (manifest_out) *manifest_out = std::move(mf);
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::string& dir, const std::string& units,
                  const GroundTruth* truth) {
  fs::create_directories(dir);
  json manifest;
  manifest["version"] = 1;
  manifest["d"] = dataset.d;
  manifest["m"] = dataset.m;
  manifest["n"] = static_cast<int>(dataset.views.size());
  manifest["units"] = units;
  json views = json::array();
  for (const View& view : dataset.views) {
    const std::string name = view_file_name(view.id);
    views.push_back(json{{"id", view.id}, {"file", name}});

    std::string csv = dataset.d == 2 ? "corr_id,x,y\n" : "corr_id,x,y,z\n";
    for (Index j = 0; j < view.count(); ++j) {
      csv += std::to_string(view.vis.ids[static_cast<size_t>(j)] + 1);
      for (int c = 0; c < dataset.d; ++c) csv += "," + format_full(view.cloud.data(c, j));
      csv += "\n";
    }
    write_text_file((fs::path(dir) / name).string(), csv);
  }
  manifest["views"] = std::move(views);
  if (truth) {
    manifest["ground_truth"] = "ground_truth.json";
    json gt;
    gt["map"] = matrix_to_json(truth->map);
    json gviews = json::array();
    for (size_t t = 0; t < truth->poses.size(); ++t) {
      json gv = pose_to_json(truth->poses[t]);
      json dropped = json::array();
      for (Index id : truth->dropped_ids[t]) dropped.push_back(id + 1);
      gv["dropped_ids"] = std::move(dropped);
      gv["clean"] = matrix_to_json(truth->clean[t]);
      gviews.push_back(std::move(gv));
    }
    gt["views"] = std::move(gviews);
    write_text_file((fs::path(dir) / "ground_truth.json").string(), gt.dump(1));
  }
  write_text_file((fs::path(dir) / "dataset.json").string(), manifest.dump(1));
}

GroundTruth load_ground_truth(const std::string& path) {
  json j = load_json_file(path);
  GroundTruth truth;
  truth.map = matrix_from_json(j.at("map"), "ground truth map");
  for (const json& gv : j.at("views")) {
    truth.poses.push_back(pose_from_json(gv));
    std::vector<Index> dropped;
    for (const json& id : gv.at("dropped_ids")) dropped.push_back(id.get<Index>() - 1);
    truth.dropped_ids.push_back(std::move(dropped));
    truth.clean.push_back(matrix_from_json(gv.at("clean"), "clean view"));
  }
  return truth;
}

namespace {

json degeneracy_to_json(const DegeneracyReport& report) {
  json flat = json::array();
  for (int t : report.flat_views) flat.push_back(t + 1);
  return json{{"zero_deformation", report.zero_deformation},
              {"near_zero_eigenvalues", report.near_zero_eigenvalues},
              {"tau0", report.tau0},
              {"flat_views", std::move(flat)},
              {"bottom_spectrum", vector_to_json(report.bottom_spectrum)},
              {"spectrum_gap_degenerate", report.spectrum_gap_degenerate}};
}

void save_map_csv(const Matrix& map, const std::string& path) {
  std::string csv = map.rows() == 2 ? "corr_id,x,y\n" : "corr_id,x,y,z\n";
  for (Index j = 0; j < map.cols(); ++j) {
    csv += std::to_string(j + 1);
    for (Index c = 0; c < map.rows(); ++c) csv += "," + format_full(map(c, j));
    csv += "\n";
  }
  write_text_file(path, csv);
}

}  // namespace

void save_solution(const FittedModel& model, const RunParams& params, const std::string& dir) {
  fs::create_directories(dir);
  json root;
  root["method"] = method_name(model.method);
  json jparams;
  jparams["mu"] = params.mu;
  if (params.kernel.explicit_sigma)
    jparams["sigma"] = params.kernel.sigma;
  else
    jparams["p"] = params.kernel.p;
  jparams["tps_per_axis"] = params.tps.per_axis;
  jparams["tps_mu"] = params.tps.mu;
  root["params"] = std::move(jparams);

  json views = json::array();
  const Matrix* map = nullptr;

  if (const auto* rigid = std::get_if<RigidGpaSolution>(&model.solution)) {
    map = &rigid->map;
    root["cost"] = rigid->cost;
    root["iterations"] = rigid->iterations;
    for (size_t t = 0; t < rigid->poses.size(); ++t) {
      json v;
      v["id"] = static_cast<int>(t) + 1;
      v["warp"] = {{"kind", "rigid"},
                   {"rotation", matrix_to_json(rigid->poses[t].rotation)},
                   {"translation", vector_to_json(rigid->poses[t].translation)}};
      views.push_back(std::move(v));
    }
  } else if (const auto* lbw = std::get_if<LbwGpaSolution>(&model.solution)) {
    map = &lbw->map;
    root["cost"] = lbw->cost;
    root["lambda"] = vector_to_json(lbw->lambda);
    root["r_g"] = matrix_to_json(lbw->gauge);
    root["degeneracy"] = degeneracy_to_json(lbw->degeneracy);
    for (size_t t = 0; t < lbw->coefficients.size(); ++t) {
      json v;
      v["id"] = static_cast<int>(t) + 1;
      v["pose"] = pose_to_json(lbw->poses[t]);
      if (lbw->bases[t].is_affine) {
        v["warp"] = {{"kind", "lbw_affine"}, {"W", matrix_to_json(lbw->coefficients[t])}};
      } else {
        v["warp"] = {{"kind", "lbw_tps"},
                     {"W", matrix_to_json(lbw->coefficients[t])},
                     {"controls", matrix_to_json(lbw->bases[t].tps.controls)}};
      }
      views.push_back(std::move(v));
    }
  } else {
    const auto& kernel = std::get<KernelGpaSolution>(model.solution);
    map = &kernel.map;
    root["cost"] = kernel.cost;
    root["mu"] = kernel.mu;
    root["lambda"] = vector_to_json(kernel.lambda);
    root["r_g"] = matrix_to_json(kernel.gauge);
    root["degeneracy"] = degeneracy_to_json(kernel.degeneracy);
    for (size_t t = 0; t < kernel.transforms.size(); ++t) {
      json v;
      v["id"] = static_cast<int>(t) + 1;
      v["pose"] = pose_to_json(kernel.poses[t]);
      v["warp"] = {{"kind", "kbt"},
                   {"A", matrix_to_json(kernel.transforms[t].linear)},
                   {"a", vector_to_json(kernel.transforms[t].offset)},
                   {"omega", matrix_to_json(kernel.transforms[t].kernel_coeff)},
                   {"sigma", kernel.grams[t].sigma},
                   {"jitter", kernel.grams[t].jitter_applied}};
      views.push_back(std::move(v));
    }
  }
  root["views"] = std::move(views);
  write_text_file((fs::path(dir) / "transforms.json").string(), root.dump(1));
  save_map_csv(*map, (fs::path(dir) / "map.csv").string());
}

FittedModel load_solution(const std::string& dir, const Dataset& dataset) {
  json root = load_json_file((fs::path(dir) / "transforms.json").string());
  FittedModel model;
  model.method = parse_method(root.at("method").get<std::string>());

  const json& views = root.at("views");
  if (views.size() != dataset.views.size())
    throw ValidationError("transforms.json view count does not match the dataset");

  if (model.method == Method::Rigid) {
    RigidGpaSolution sol;
    sol.cost = root.value("cost", 0.0);
    for (const json& v : views) {
      const json& w = v.at("warp");
      sol.poses.push_back(RigidPose{matrix_from_json(w.at("rotation"), "rotation"),
                                    vector_from_json(w.at("translation"), "translation")});
      model.warps.push_back(RigidWarp{sol.poses.back().rotation, sol.poses.back().translation});
    }
    model.solution = std::move(sol);
  } else if (model.method == Method::Kernel) {
    KernelGpaSolution sol;
    sol.cost = root.value("cost", 0.0);
    sol.mu = root.value("mu", 0.0);
    sol.lambda = vector_from_json(root.at("lambda"), "lambda");
    sol.gauge = matrix_from_json(root.at("r_g"), "r_g");
    for (size_t t = 0; t < views.size(); ++t) {
      const json& w = views[t].at("warp");
      if (w.at("kind") != "kbt") throw ValidationError("transforms.json: expected kbt warp");
      KbtParams params;
      params.linear = matrix_from_json(w.at("A"), "A");
      params.offset = vector_from_json(w.at("a"), "a");
      params.kernel_coeff = matrix_from_json(w.at("omega"), "omega");
      if (params.kernel_coeff.rows() != dataset.views[t].count())
        throw ValidationError("transforms.json: omega does not match view " +
                              std::to_string(t + 1));
      sol.poses.push_back(pose_from_json(views[t].at("pose")));
      GramMatrix gm;
      gm.sigma = w.at("sigma").get<double>();
      gm.jitter_applied = w.value("jitter", 0.0);
      sol.grams.push_back(gm);
      sol.transforms.push_back(std::move(params));
      KbtWarp warp;
      warp.linear = sol.transforms.back().linear;
      warp.offset = sol.transforms.back().offset;
      warp.kernel_coeff = sol.transforms.back().kernel_coeff;
      warp.basis_points = dataset.views[t].cloud.data;
      warp.sigma = gm.sigma;
      model.warps.push_back(std::move(warp));
    }
    model.solution = std::move(sol);
  } else {
    LbwGpaSolution sol;
    sol.cost = root.value("cost", 0.0);
    sol.lambda = vector_from_json(root.at("lambda"), "lambda");
    sol.gauge = matrix_from_json(root.at("r_g"), "r_g");
    for (size_t t = 0; t < views.size(); ++t) {
      const json& w = views[t].at("warp");
      sol.poses.push_back(pose_from_json(views[t].at("pose")));
      LbwViewBasis basis;
      Matrix coeff = matrix_from_json(w.at("W"), "W");
      if (w.at("kind") == "lbw_affine") {
        basis.is_affine = true;
        model.warps.push_back(AffineLbwWarp{coeff});
      } else if (w.at("kind") == "lbw_tps") {
        basis.is_affine = false;
        basis.tps = make_tps_basis(matrix_from_json(w.at("controls"), "controls"));
        model.warps.push_back(TpsLbwWarp{coeff, basis.tps});
      } else {
        throw ValidationError("transforms.json: unknown LBW warp kind");
      }
      sol.coefficients.push_back(std::move(coeff));
      sol.bases.push_back(std::move(basis));
    }
    model.solution = std::move(sol);
  }
  return model;
}

void save_report(const EvalReport& report, const std::string& path) {
  json root;
  root["method"] = report.method;
  json params;
  for (const auto& [key, value] : report.params) params[key] = value;
  root["params"] = std::move(params);
  root["stats"] = {{"min", report.stats.min},
                   {"max", report.stats.max},
                   {"mean", report.stats.mean}};
  json per_point = json::array();
  for (size_t i = 0; i < report.test_ids.size(); ++i) {
    per_point.push_back(json{{"id", report.test_ids[i] + 1},
                             {"delta", report.delta(static_cast<Index>(i))},
                             {"visibility", report.visibility[i]}});
  }
  root["per_point"] = std::move(per_point);
  root["runtime_ms"] = report.runtime_ms;
  write_text_file(path, root.dump(1));
}

EvalReport load_report(const std::string& path) {
  json root = load_json_file(path);
  EvalReport report;
  report.method = root.at("method").get<std::string>();
  report.stats.min = root.at("stats").at("min").get<double>();
  report.stats.max = root.at("stats").at("max").get<double>();
  report.stats.mean = root.at("stats").at("mean").get<double>();
  report.runtime_ms = root.value("runtime_ms", 0.0);
  const json& per_point = root.at("per_point");
  report.delta.resize(static_cast<Index>(per_point.size()));
  Index i = 0;
  for (const json& p : per_point) {
    report.test_ids.push_back(p.at("id").get<Index>() - 1);
    report.visibility.push_back(p.at("visibility").get<int>());
    report.delta(i++) = p.at("delta").get<double>();
  }
  if (root.contains("params"))
    for (const auto& [key, value] : root.at("params").items())
      report.params.emplace_back(key, value.get<double>());
  return report;
}

std::vector<Index> load_split(const std::string& path) {
  json j = load_json_file(path);
  std::vector<Index> ids;
  for (const json& id : j.at("held_out_ids")) {
    Index v = id.get<Index>();
    if (v < 1) throw ValidationError(path + ": held_out_ids must be 1-based positive");
    ids.push_back(v - 1);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

void save_split(const std::vector<Index>& ids, const std::string& path) {
  json arr = json::array();
  for (Index id : ids) arr.push_back(id + 1);
  write_text_file(path, json{{"held_out_ids", std::move(arr)}}.dump(1));
}

Matrix load_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  int cols = 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
  int d = cols - 1;
  if (d != 2 && d != 3) throw ValidationError(path + ": expected corr_id,x,y[,z] header");
  std::vector<Vector> pts;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');  // id ignored; order defines the cloud
    Vector p(d);
    for (int c = 0; c < d; ++c) {
      if (!std::getline(ss, field, ','))
        throw ValidationError(path + ":" + std::to_string(line_no) + ": too few columns");
      p(c) = std::strtod(field.c_str(), nullptr);
      if (!std::isfinite(p(c)))
        throw ValidationError(path + ":" + std::to_string(line_no) + ": non-finite coordinate");
    }
    pts.push_back(std::move(p));
  }
  Matrix out(d, static_cast<Index>(pts.size()));
  for (size_t i = 0; i < pts.size(); ++i) out.col(static_cast<Index>(i)) = pts[i];
  return out;
}

}  // namespace defgpa
