#pragma once

#include "defgpa/baselines.hpp"
#include "defgpa/kernel_gpa.hpp"

#include <string>
#include <variant>

namespace defgpa {

enum class Method { Rigid, Affine, Tps, Kernel };

Method parse_method(const std::string& name);
std::string method_name(Method method);

struct RunParams {
  KernelSpec kernel = KernelSpec::gaussian_scaled(0.25);
  double mu = 0.1;
  TpsGpaConfig tps;
  GpaOptions gpa;
  RigidGpaOptions rigid;
};

/// A solved registration of any flavour with the per-view warps ready to
/// apply to query points.
struct FittedModel {
  Method method = Method::Kernel;
  std::variant<RigidGpaSolution, LbwGpaSolution, KernelGpaSolution> solution;
  std::vector<Warp> warps;
  double fit_runtime_ms = 0;
};

FittedModel fit(const Dataset& dataset, Method method, const RunParams& params);

}  // namespace defgpa
