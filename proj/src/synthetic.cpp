#include "defgpa/synthetic.hpp"

#include "defgpa/errors.hpp"
#include "defgpa/warps.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace defgpa {

namespace {
constexpr double kPi = 3.14159265358979323846;
}  // namespace

SynthRng::SynthRng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

uint64_t SynthRng::next_u64() {
  // splitmix64: tiny, portable, and identical everywhere.
  state_ += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SynthRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SynthRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double SynthRng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 0;
  do {
    u1 = uniform();
  } while (u1 <= 0);
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * kPi * u2);
  have_spare_ = true;
  return r * std::cos(2.0 * kPi * u2);
}

int SynthRng::uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

Vector SynthRng::normal_vector(Index size) {
  Vector v(size);
  for (Index i = 0; i < size; ++i) v(i) = normal();
  return v;
}

Vector SynthRng::unit_vector(Index size) {
  Vector v = normal_vector(size);
  double norm = v.norm();
  while (norm < 1e-12) {
    v = normal_vector(size);
    norm = v.norm();
  }
  return v / norm;
}

void SynthConfig::validate() const {
  if (m < 4) throw ValidationError("synth: need at least 4 correspondences");
  if (n < 1) throw ValidationError("synth: need at least one view");
  if (d != 2 && d != 3) throw ValidationError("synth: dimension must be 2 or 3");
  if (noise_sigma < 0) throw ValidationError("synth: noise sigma must be non-negative");
  if (drop_fraction < 0 || drop_fraction >= 1)
    throw ValidationError("synth: drop fraction must be in [0, 1)");
  Index dropped = static_cast<Index>(std::lround(drop_fraction * static_cast<double>(m)));
  if (m - dropped < d + 2)
    throw ValidationError("synth: drop fraction leaves views with fewer than d+2 points");
  if (deform == DeformKind::GaussianBumps) {
    if (!(bumps.width > 0)) throw ValidationError("synth: bump width must be positive");
    // widths are jittered down to 0.9x during generation
    if (bumps.amplitude / (0.9 * bumps.width) > 0.5)
      throw ValidationError("synth: bump amplitude/width exceeds the invertibility bound 0.5");
  }
  if (shape == Shape::LoadedCloud && cloud_path.empty() && loaded_points.size() == 0)
    throw ValidationError("synth: loaded_cloud shape needs cloud_path or points");
}

Matrix gaussian_bump_warp(const Matrix& points, const Matrix& centers,
                          const Matrix& amplitudes, const Vector& widths) {
  const Index bump_count = centers.cols();
  if (amplitudes.cols() != bump_count || widths.size() != bump_count)
    throw ValidationError("bump warp: centers, amplitudes, widths disagree on count");
  for (Index j = 0; j < bump_count; ++j) {
    if (!(widths(j) > 0)) throw ValidationError("bump warp: widths must be positive");
    if (amplitudes.col(j).norm() / widths(j) > 0.5)
      throw ValidationError("bump warp: displacement bound ||a||/w <= 0.5 violated "
                            "(warp may not be invertible)");
  }
  Matrix out = points;
  for (Index p = 0; p < points.cols(); ++p) {
    for (Index j = 0; j < bump_count; ++j) {
      double r2 = (points.col(p) - centers.col(j)).squaredNorm();
      out.col(p) += amplitudes.col(j) * std::exp(-r2 / (2.0 * widths(j) * widths(j)));
    }
  }
  return out;
}

namespace {

Matrix base_shape(const SynthConfig& config, SynthRng& rng) {
  const Index m = config.m;
  const int d = config.d;
  const double kShapeRadius = config.shape_scale;
  Matrix map(d, m);
  switch (config.shape) {
    case SynthConfig::Shape::Grid3d: {
      Index side = 1;
      while (std::pow(static_cast<double>(side), d) < static_cast<double>(m)) ++side;
      Index total = 1;
      for (int a = 0; a < d; ++a) total *= side;
      for (Index i = 0; i < m; ++i) {
        // evenly strided selection from the full grid
        Index cell = (total <= m) ? i : (i * (total - 1)) / (m - 1);
        Vector p(d);
        Index rem = cell;
        for (int a = 0; a < d; ++a) {
          Index coord = rem % side;
          rem /= side;
          p(a) = side > 1 ? -kShapeRadius + 2.0 * kShapeRadius *
                                                static_cast<double>(coord) /
                                                static_cast<double>(side - 1)
                          : 0.0;
        }
        map.col(i) = p;
      }
      break;
    }
    case SynthConfig::Shape::SphereSamples: {
      if (d == 3) {
        // Fibonacci sphere: deterministic, nearly uniform.
        const double golden = kPi * (3.0 - std::sqrt(5.0));
        for (Index i = 0; i < m; ++i) {
          double y = m > 1 ? 1.0 - 2.0 * static_cast<double>(i) / static_cast<double>(m - 1)
                           : 0.0;
          double r = std::sqrt(std::max(0.0, 1.0 - y * y));
          double th = golden * static_cast<double>(i);
          map.col(i) << kShapeRadius * r * std::cos(th), kShapeRadius * y,
              kShapeRadius * r * std::sin(th);
        }
      } else {
        for (Index i = 0; i < m; ++i) {
          double th = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(m);
          map.col(i) << kShapeRadius * std::cos(th), kShapeRadius * std::sin(th);
        }
      }
      break;
    }
    case SynthConfig::Shape::LoadedCloud:
      if (config.loaded_points.rows() != d || config.loaded_points.cols() != m)
        throw ValidationError("synth: loaded cloud does not match the configured d and m");
      map = config.loaded_points;
      break;
  }
  (void)rng;
  return map;
}

Matrix random_rotation(int d, SynthRng& rng) {
  if (d == 2) {
    double th = rng.uniform(0.0, 2.0 * kPi);
    Matrix r(2, 2);
    r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    return r;
  }
  // uniform quaternion
  Vector q = rng.normal_vector(4);
  q /= q.norm();
  double w = q(0), x = q(1), y = q(2), z = q(3);
  Matrix r(3, 3);
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

RigidPose circle_pose(int t, int n, int d, double kShapeRadius) {
  RigidPose pose;
  double th = 2.0 * kPi * static_cast<double>(t) / static_cast<double>(n);
  if (d == 2) {
    pose.translation = Vector(2);
    pose.translation << 4.0 * kShapeRadius * std::cos(th), 4.0 * kShapeRadius * std::sin(th);
    pose.rotation = Matrix(2, 2);
    pose.rotation << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  } else {
    pose.translation = Vector(3);
    pose.translation << 4.0 * kShapeRadius * std::cos(th), 4.0 * kShapeRadius * std::sin(th),
        0.5 * kShapeRadius;
    pose.rotation = Matrix(3, 3);
    double c = std::cos(th), s = std::sin(th);
    Matrix yaw(3, 3);
    yaw << c, -s, 0, s, c, 0, 0, 0, 1;
    double tilt = 0.15;
    Matrix pitch(3, 3);
    pitch << std::cos(tilt), 0, std::sin(tilt), 0, 1, 0, -std::sin(tilt), 0, std::cos(tilt);
    pose.rotation = yaw * pitch;
  }
  return pose;
}

}  // namespace

std::pair<Dataset, GroundTruth> generate(const SynthConfig& config) {
  config.validate();
  SynthRng rng(config.seed);
  const Index m = config.m;
  const int d = config.d;
  const int n = config.n;

  GroundTruth truth;
  truth.map = base_shape(config, rng);
  Vector lo = truth.map.rowwise().minCoeff();
  Vector hi = truth.map.rowwise().maxCoeff();

  Dataset dataset;
  dataset.d = d;
  dataset.m = m;

  const Index drop_count = static_cast<Index>(std::lround(config.drop_fraction *
                                                          static_cast<double>(m)));
  std::vector<char> seen(static_cast<size_t>(m), 0);

  for (int t = 0; t < n; ++t) {
    RigidPose pose = config.pose_model == SynthConfig::PoseModel::CircleTrajectory
                         ? circle_pose(t, n, d, config.shape_scale)
                         : RigidPose{random_rotation(d, rng),
                                     rng.normal_vector(d) * 2.0 * config.shape_scale};
    truth.poses.push_back(pose);

    // visibility: drop `drop_count` random distinct ids
    std::vector<Index> ids(static_cast<size_t>(m));
    std::iota(ids.begin(), ids.end(), Index{0});
    for (Index k = 0; k < drop_count; ++k) {
      Index j = static_cast<Index>(k) +
                static_cast<Index>(rng.uniform_int(static_cast<int>(m - k)));
      std::swap(ids[static_cast<size_t>(k)], ids[static_cast<size_t>(j)]);
    }
    std::vector<Index> dropped(ids.begin(), ids.begin() + drop_count);
    std::sort(dropped.begin(), dropped.end());
    truth.dropped_ids.push_back(dropped);

    Visibility vis;
    vis.m = m;
    std::vector<char> is_dropped(static_cast<size_t>(m), 0);
    for (Index id : dropped) is_dropped[static_cast<size_t>(id)] = 1;
    for (Index i = 0; i < m; ++i)
      if (!is_dropped[static_cast<size_t>(i)]) {
        vis.ids.push_back(i);
        seen[static_cast<size_t>(i)] = 1;
      }

    Matrix visible = select_columns(truth.map, vis.ids);

    // per-view deformation Phi_t
    Matrix deformed = visible;
    switch (config.deform) {
      case SynthConfig::DeformKind::None:
        break;
      case SynthConfig::DeformKind::GaussianBumps: {
        const int count = config.bumps.count;
        Matrix centers(d, count), amps(d, count);
        Vector widths(count);
        for (int j = 0; j < count; ++j) {
          for (int a = 0; a < d; ++a) centers(a, j) = rng.uniform(lo(a), hi(a));
          widths(j) = config.bumps.width * rng.uniform(0.9, 1.1);
          amps.col(j) = rng.unit_vector(d) * config.bumps.amplitude * rng.uniform(0.5, 1.0);
        }
        deformed = gaussian_bump_warp(visible, centers, amps, widths);
        break;
      }
      case SynthConfig::DeformKind::TpsRandom: {
        int per_axis = std::max(2, static_cast<int>(std::lround(
                                       std::pow(config.tps.controls, 1.0 / d))));
        PointCloud map_cloud;
        map_cloud.data = truth.map;
        ControlGrid grid = place_control_grid(map_cloud, per_axis);
        TpsBasis basis = make_tps_basis(grid.points);
        Matrix targets = grid.points.transpose();  // l x d
        for (Index j = 0; j < grid.points.cols(); ++j)
          targets.row(j) += (rng.unit_vector(d) * config.tps.amplitude * rng.uniform(0.0, 1.0))
                                .transpose();
        deformed = (targets.transpose() * basis.eval(visible));
        break;
      }
    }

    // P_t = R^T (Phi(M Gamma) - t 1^T) + noise
    Matrix local = pose.rotation.transpose() * (deformed.colwise() - pose.translation);
    truth.clean.push_back(local);
    if (config.noise_sigma > 0)
      for (Index c = 0; c < local.cols(); ++c)
        for (int r = 0; r < d; ++r) local(r, c) += config.noise_sigma * rng.normal();

    View view;
    view.id = t + 1;
    view.cloud.data = std::move(local);
    view.vis = std::move(vis);
    dataset.views.push_back(std::move(view));
  }

  // Restore globally invisible correspondences into a pseudo-random view so
  // every map point stays constrained.
  for (Index i = 0; i < m; ++i) {
    if (seen[static_cast<size_t>(i)]) continue;
    int t = rng.uniform_int(n);
    View& view = dataset.views[static_cast<size_t>(t)];
    const RigidPose& pose = truth.poses[static_cast<size_t>(t)];
    Vector world = truth.map.col(i);  // deformation omitted for restored points
    Vector local = pose.rotation.transpose() * (world - pose.translation);
    for (int r = 0; r < d; ++r) local(r) += config.noise_sigma * rng.normal();
    auto it = std::lower_bound(view.vis.ids.begin(), view.vis.ids.end(), i);
    Index pos = static_cast<Index>(it - view.vis.ids.begin());
    view.vis.ids.insert(it, i);
    Matrix grown(d, view.cloud.data.cols() + 1);
    grown.leftCols(pos) = view.cloud.data.leftCols(pos);
    grown.col(pos) = local;
    grown.rightCols(view.cloud.data.cols() - pos) = view.cloud.data.rightCols(
        view.cloud.data.cols() - pos);
    view.cloud.data = std::move(grown);
    truth.dropped_ids[static_cast<size_t>(t)].erase(
        std::remove(truth.dropped_ids[static_cast<size_t>(t)].begin(),
                    truth.dropped_ids[static_cast<size_t>(t)].end(), i),
        truth.dropped_ids[static_cast<size_t>(t)].end());
    Matrix clean_grown(d, truth.clean[static_cast<size_t>(t)].cols() + 1);
    clean_grown.leftCols(pos) = truth.clean[static_cast<size_t>(t)].leftCols(pos);
    clean_grown.col(pos) = pose.rotation.transpose() * (world - pose.translation);
    clean_grown.rightCols(truth.clean[static_cast<size_t>(t)].cols() - pos) =
        truth.clean[static_cast<size_t>(t)].rightCols(
            truth.clean[static_cast<size_t>(t)].cols() - pos);
    truth.clean[static_cast<size_t>(t)] = std::move(clean_grown);
  }

  dataset.validate();
  return {std::move(dataset), std::move(truth)};
}

}  // namespace defgpa
