#pragma once

#include <cstdint>
#include <optional>

#include "morpho/pca.hpp"
#include "morpho/pls.hpp"
#include "morpho/shape.hpp"

namespace morpho {

/// PLS regression from shape to one continuous value, plus the PCA used as
/// the Mahalanobis metric for representative shapes.
struct ShapeRegressionModel {
  PlsModel pls;                    // centred shapes -> centred value
  Eigen::VectorXd mean_shape;
  double value_mean = 0.0;
  double value_sd = 0.0;           // sample SD of the training values
  PcaModel pca_for_metric;         // full PCA of the training shapes
  Eigen::Index metric_modes = 0;   // modes covering 99% of variance

  // Flattened regression coefficients (3N).
  Eigen::VectorXd coefficients() const { return pls.coefficients.col(0); }
  double predict(const ShapeVector& shape) const;
  Eigen::VectorXd predict(const ShapeMatrix& shapes) const;
};

/// Throws DataError on constant values or fewer than n_components + 2 subjects.
ShapeRegressionModel regression_fit(const ShapeMatrix& shapes, const Eigen::VectorXd& values,
                                    Eigen::Index n_components = 3, double metric_fraction = kDefaultWhitenFraction);

/// Shape closest to the mean in the Mahalanobis metric of the retained PCA
/// modes whose prediction equals b:
///   x = mu + (b - c) Sigma w / (w^T Sigma w),  c = prediction at mu.
/// Warns when b is more than 3 SD from the training mean. Throws
/// NumericalError when w has no weight on the retained modes.
ShapeVector representative_for_value(const ShapeRegressionModel& model, double b);

/// Unit whitened direction of the regression coefficients in the given basis.
Eigen::VectorXd regression_pattern(const ShapeRegressionModel& model, const PcaModel& whitening,
                                   std::optional<Eigen::Index> k_modes = std::nullopt);

/// Pooled out-of-fold R^2 = 1 - SS_res / SS_tot over seeded random folds.
double regression_cv_r2(const ShapeMatrix& shapes, const Eigen::VectorXd& values, Eigen::Index n_components,
                        int folds, std::uint64_t seed);

}  // namespace morpho
