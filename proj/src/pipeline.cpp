#include "defgpa/pipeline.hpp"

#include "defgpa/errors.hpp"

#include <chrono>

namespace defgpa {

Method parse_method(const std::string& name) {
  if (name == "rigid") return Method::Rigid;
  if (name == "affine") return Method::Affine;
  if (name == "tps") return Method::Tps;
  if (name == "kernel") return Method::Kernel;
  throw ValidationError("unknown method '" + name + "' (expected rigid, affine, tps, kernel)");
}

std::string method_name(Method method) {
  switch (method) {
    case Method::Rigid: return "rigid";
    case Method::Affine: return "affine";
    case Method::Tps: return "tps";
    case Method::Kernel: return "kernel";
  }
  return "unknown";
}

FittedModel fit(const Dataset& dataset, Method method, const RunParams& params) {
  FittedModel model;
  model.method = method;
  auto start = std::chrono::steady_clock::now();
  const Index n = dataset.view_count();
  model.warps.reserve(static_cast<size_t>(n));
  switch (method) {
    case Method::Rigid: {
      RigidGpaSolution sol = rigid_gpa(dataset, params.rigid);
      for (Index t = 0; t < n; ++t) model.warps.push_back(sol.warp(t));
      model.solution = std::move(sol);
      break;
    }
    case Method::Affine: {
      LbwGpaSolution sol = affine_gpa(dataset, params.gpa);
      for (Index t = 0; t < n; ++t) model.warps.push_back(sol.warp(t));
      model.solution = std::move(sol);
      break;
    }
    case Method::Tps: {
      LbwGpaSolution sol = tps_gpa(dataset, params.tps, params.gpa);
      for (Index t = 0; t < n; ++t) model.warps.push_back(sol.warp(t));
      model.solution = std::move(sol);
      break;
    }
    case Method::Kernel: {
      KernelGpaSolution sol = register_kernel_gpa(dataset, params.kernel, params.mu, params.gpa);
      for (Index t = 0; t < n; ++t) model.warps.push_back(sol.warp(dataset, t));
      model.solution = std::move(sol);
      break;
    }
  }
  model.fit_runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  return model;
}

}  // namespace defgpa
