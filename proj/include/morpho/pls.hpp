#pragma once

#include <Eigen/Dense>

namespace morpho {

/// Wold's two-block PLS in regression mode.
///
/// Iteration r works on the deflated blocks X^r, Y^r:
///   (u, v)  leading singular pair of (X^r)^T Y^r
///   t       = X^r u                       (x scores)
///   p       = (X^r)^T t / t^T t           (OLS of X^r on t)
///   c       = (Y^r)^T t / t^T t           (OLS of Y^r on t)
///   X^{r+1} = X^r - t p^T,  Y^{r+1} = Y^r - t c^T
///
/// With s = Y^r v the y scores, the slope of s on t times v equals c, so the
/// rank-one coefficient matrix of the iteration is w^r = rot_r c^T, where
/// rot_r is u_r expressed against the undeflated X (t = X rot_r). The model's
/// coefficients are the sum of these terms and predict Y from the original X.
struct PlsModel {
  Eigen::MatrixXd x_weights;     // p x R, columns u^r (unit norm)
  Eigen::MatrixXd y_weights;     // q x R, columns v^r (unit norm)
  Eigen::MatrixXd x_loadings;    // p x R, columns p^r
  Eigen::MatrixXd y_loadings;    // q x R, columns c^r
  Eigen::MatrixXd x_rotations;   // p x R, columns rot_r
  Eigen::MatrixXd coefficients;  // p x q, sum over r of rot_r c_r^T
  Eigen::Index n_requested = 0;

  Eigen::Index n_components() const { return x_weights.cols(); }
  // Rank-one coefficient matrix of iteration r.
  Eigen::MatrixXd component_coefficients(Eigen::Index r) const;
  // Centred prediction X * coefficients.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const { return x * coefficients; }
};

/// Fits up to n_components iterations on already-centred blocks. Stops early
/// (with a warning) when the remaining cross-covariance vanishes, so the model
/// may hold fewer components than requested, possibly zero (coefficients = 0).
/// Singular pairs are sign-fixed so the largest-magnitude entry of u^r is positive.
PlsModel pls_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Eigen::Index n_components);

/// Orthonormal basis (columns) of the span of the given vectors via
/// Householder QR; columns keep the orientation of the inputs. Rank-deficient
/// input yields a reduced basis and a warning.
Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& vectors);

/// Orthonormalised span of the x weights u^r, used as a reduction basis.
Eigen::MatrixXd pls_dr_basis(const PlsModel& model);

}  // namespace morpho
