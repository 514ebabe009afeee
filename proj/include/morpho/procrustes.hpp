#pragma once

#include <vector>

#include "morpho/shape.hpp"

namespace morpho {

struct AlignResult {
  RigidTransform transform;  // maps moving onto target
  ShapeVector aligned;
};

/// Least-squares rigid registration of `moving` onto `target` (no scaling).
/// Closed form through the SVD of the 3x3 cross-covariance; reflections are
/// corrected so the rotation is always proper. Throws NumericalError when
/// either configuration is collinear or coincident.
AlignResult rigid_align(const ShapeVector& moving, const ShapeVector& target);

struct ProcrustesOptions {
  double tol = 1e-7;  // RMS mean change per landmark, mm
  int max_iter = 100;
};

/// Generalized partial Procrustes atlas. `mean_shape` is the arithmetic mean of
/// the rows of `aligned`; `transforms[i]` maps input row i onto `aligned` row i.
struct AtlasModel {
  ShapeVector mean_shape;
  std::vector<RigidTransform> transforms;
  ShapeMatrix aligned;
  int iterations_run = 0;
  bool converged = false;
  double last_change = 0.0;
};

// Alternates mean estimation and registration of every shape to that mean
// until the mean moves less than opts.tol. Non-convergence is flagged and
// warned about, not thrown.
AtlasModel generalized_procrustes(const ShapeMatrix& shapes, const ProcrustesOptions& opts = {});

}  // namespace morpho
