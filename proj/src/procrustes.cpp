#include "morpho/procrustes.hpp"

#include <cmath>
#include <string>

#include "morpho/error.hpp"
#include "morpho/log.hpp"
#include "morpho/parallel.hpp"
#include "morpho/simd/kernels.hpp"

namespace morpho {
namespace {

Eigen::Matrix3d to_eigen(const simd::Mat3& m) {
  Eigen::Matrix3d out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(i, j) = m[3 * i + j];
  return out;
}

simd::Vec3 centroid(const ShapeVector& s) {
  const auto n = static_cast<std::size_t>(s.n_landmarks());
  simd::Vec3 c = simd::kernels().point_sum(s.coords().data(), n);
  for (double& v : c) v /= static_cast<double>(n);
  return c;
}

// Spread check: the centred scatter matrix must have rank >= 2.
void require_spread(const ShapeVector& s, const simd::Vec3& c, const char* which) {
  const auto n = static_cast<std::size_t>(s.n_landmarks());
  const Eigen::Matrix3d scatter =
      to_eigen(simd::kernels().cross_covariance(s.coords().data(), c, s.coords().data(), c, n));
  const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(scatter, Eigen::EigenvaluesOnly)
                                 .eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
    throw NumericalError(std::string("degenerate landmark configuration (collinear or coincident) in ") + which +
                         " shape");
  }
}

}  // namespace

AlignResult rigid_align(const ShapeVector& moving, const ShapeVector& target) {
  if (moving.size() != target.size()) {
    throw DimensionError("rigid_align: moving has " + std::to_string(moving.size()) + " coordinates, target has " +
                         std::to_string(target.size()));
  }
  if (moving.n_landmarks() < 3) throw NumericalError("rigid_align needs at least 3 landmarks");

  const auto n = static_cast<std::size_t>(moving.n_landmarks());
  const simd::Vec3 cm = centroid(moving);
  const simd::Vec3 ct = centroid(target);
  require_spread(moving, cm, "moving");
  require_spread(target, ct, "target");

  const Eigen::Matrix3d h =
      to_eigen(simd::kernels().cross_covariance(moving.coords().data(), cm, target.coords().data(), ct, n));
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((v * u.transpose()).determinant() < 0.0) d(2, 2) = -1.0;

  RigidTransform tf;
  tf.rotation = v * d * u.transpose();
  const Eigen::Vector3d cmv(cm[0], cm[1], cm[2]);
  const Eigen::Vector3d ctv(ct[0], ct[1], ct[2]);
  tf.translation = ctv - tf.rotation * cmv;
  return {tf, tf.apply(moving)};
}

AtlasModel generalized_procrustes(const ShapeMatrix& shapes, const ProcrustesOptions& opts) {
  const Eigen::Index n = shapes.rows();
  if (n < 2) throw DataError("generalized Procrustes needs at least 2 shapes, got " + std::to_string(n));
  if (shapes.cols() % 3 != 0) throw DimensionError("shape matrix width is not a multiple of 3");

  std::vector<ShapeVector> inputs;
  inputs.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) inputs.push_back(row_shape(shapes, i));

  // Initial reference: first shape, centred at the origin.
  Eigen::VectorXd ref = inputs.front().coords();
  {
    const simd::Vec3 c = centroid(inputs.front());
    for (Eigen::Index k = 0; k < ref.size(); ++k) ref(k) -= c[static_cast<std::size_t>(k % 3)];
  }

  AtlasModel atlas;
  atlas.transforms.resize(static_cast<std::size_t>(n));
  atlas.aligned.resize(n, shapes.cols());
  ShapeVector reference(ref);

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
      AlignResult r = rigid_align(inputs[i], reference);
      atlas.transforms[i] = r.transform;
      atlas.aligned.row(static_cast<Eigen::Index>(i)) = r.aligned.coords().transpose();
    });
    ShapeVector mean(atlas.aligned.colwise().mean().transpose());
    atlas.last_change = rms_landmark_distance(mean, reference);
    atlas.iterations_run = iter;
    reference = std::move(mean);
    if (atlas.last_change < opts.tol) {
      atlas.converged = true;
      break;
    }
  }
  atlas.mean_shape = reference;
  if (!atlas.converged) {
    warn("generalized Procrustes did not converge after " + std::to_string(atlas.iterations_run) +
         " iterations (last mean change " + std::to_string(atlas.last_change) + " mm)");
  }
  return atlas;
}

}  // namespace morpho
