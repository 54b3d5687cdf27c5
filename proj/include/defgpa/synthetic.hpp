#pragma once

#include "defgpa/geometry.hpp"
#include "defgpa/warp_field.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace defgpa {

/// Deterministic random stream (xoshiro-free: mt19937_64 plus a hand-rolled
/// Box-Muller so the byte stream is identical across standard libraries).
class SynthRng {
public:
  explicit SynthRng(uint64_t seed);
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);
  double normal();                        // N(0, 1)
  int uniform_int(int n);                 // [0, n)
  Vector normal_vector(Index size);
  Vector unit_vector(Index size);

private:
  uint64_t next_u64();
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0;
};

struct GaussianBumpDeform {
  int count = 6;
  double amplitude = 8.0;  // max displacement magnitude, length units
  double width = 30.0;     // bump standard deviation, length units
};

struct TpsRandomDeform {
  int controls = 27;       // control count (rounded to a grid)
  double amplitude = 5.0;  // control displacement magnitude
};

struct SynthConfig {
  Index m = 201;
  int n = 60;
  int d = 3;
  enum class Shape { Grid3d, SphereSamples, LoadedCloud };
  Shape shape = Shape::SphereSamples;
  double shape_scale = 50.0;  // radius-like half extent, length units
  std::string cloud_path;  // LoadedCloud only; resolved by the CLI
  Matrix loaded_points;    // LoadedCloud only, d x m
  enum class DeformKind { None, GaussianBumps, TpsRandom };
  DeformKind deform = DeformKind::GaussianBumps;
  GaussianBumpDeform bumps;
  TpsRandomDeform tps;
  double noise_sigma = 1.0;
  double drop_fraction = 0.3;
  enum class PoseModel { CircleTrajectory, RandomRigid };
  PoseModel pose_model = PoseModel::CircleTrajectory;
  uint64_t seed = 0;

  void validate() const;
};

struct GroundTruth {
  Matrix map;                    // d x m canonical map M*
  std::vector<RigidPose> poses;  // sensor-to-world (R*, t*)
  std::vector<std::vector<Index>> dropped_ids;  // per view, 0-based
  std::vector<Matrix> clean;     // noise-free observations, d x m_t
};

/// Emits the observation model P_t = R_t^T (Phi_t(M Gamma_t) - t_t 1^T) +
/// noise with per-view smooth deformations, partial visibility, and
/// Gaussian noise. Bit-identical for identical configs.
std::pair<Dataset, GroundTruth> generate(const SynthConfig& config);

/// x -> x + sum_j a_j exp(-||x - c_j||^2 / (2 w_j^2)). Rejects fields with
/// max ||a_j|| / w_j > 0.5, which could fold space.
Matrix gaussian_bump_warp(const Matrix& points, const Matrix& centers,
                          const Matrix& amplitudes, const Vector& widths);

}  // namespace defgpa
