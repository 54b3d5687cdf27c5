#pragma once

#include "defgpa/evaluation.hpp"
#include "defgpa/geometry.hpp"
#include "defgpa/pipeline.hpp"
#include "defgpa/synthetic.hpp"

#include <optional>
#include <string>
#include <vector>

namespace defgpa {

struct DatasetManifest {
  int version = 1;
  int d = 0;
  Index m = 0;
  int n = 0;
  std::string units = "mm";
  std::vector<std::string> view_files;
  std::string ground_truth_file;  // empty when absent
};

/// Reads dataset.json plus per-view CSVs (columns corr_id,x,y[,z], 1-based
/// ids). Every violation is a distinct diagnostic with file and line.
Dataset load_dataset(const std::string& dir, DatasetManifest* manifest_out = nullptr);

/// Writes the dataset directory with full round-trip float precision.
void save_dataset(const Dataset& dataset, const std::string& dir,
                  const std::string& units = "mm",
                  const GroundTruth* truth = nullptr);

GroundTruth load_ground_truth(const std::string& path);

/// map.csv + transforms.json for any fitted model.
void save_solution(const FittedModel& model, const RunParams& params, const std::string& dir);

/// Rebuilds the model (including warps) from transforms.json; kernel warps
/// take their basis points from the dataset.
FittedModel load_solution(const std::string& dir, const Dataset& dataset);

void save_report(const EvalReport& report, const std::string& path);
EvalReport load_report(const std::string& path);

/// {"held_out_ids": [...]} with 1-based ids; returns 0-based.
std::vector<Index> load_split(const std::string& path);
void save_split(const std::vector<Index>& ids, const std::string& path);

/// Simple corr_id,x,y[,z] CSV of points (used by synth loaded_cloud).
Matrix load_points_csv(const std::string& path);

}  // namespace defgpa
