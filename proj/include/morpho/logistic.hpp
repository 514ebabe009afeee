#pragma once

#include <Eigen/Dense>
#include <vector>

namespace morpho {

inline constexpr double kDefaultRidge = 1e-6;

/// Binary logistic model Pr(y = 1 | f) = 1 / (1 + exp(-(f . coeffs + intercept))).
/// The first n_shape coefficients act on shape features, the remainder on
/// confounders (empty when the model is unadjusted).
struct LogisticModel {
  Eigen::VectorXd coeffs;
  double intercept = 0.0;
  double ridge = 0.0;
  Eigen::Index n_shape = 0;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::vector<double> objective_trace;  // objective after each accepted step, starting at 0 coefficients

  auto shape_coeffs() const { return coeffs.head(n_shape); }
  auto confounder_coeffs() const { return coeffs.tail(coeffs.size() - n_shape); }

  Eigen::VectorXd decision(const Eigen::MatrixXd& features) const;
  // Strictly inside (0, 1).
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& features) const;
};

/// Penalised mean cross-entropy at (coeffs, intercept):
///   -(1/n) sum [y log p + (1 - y) log(1 - p)] + ridge/2 |coeffs|^2
double logistic_objective(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                          const Eigen::VectorXd& coeffs, double intercept, double ridge);

// Gradient w.r.t. (coeffs..., intercept).
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                                  const Eigen::VectorXd& coeffs, double intercept, double ridge);

/// Mean cross-entropy of labels under predicted decision values (stable in z).
double log_loss(const Eigen::VectorXd& decision, const Eigen::VectorXd& labels);

/// Damped Newton with Armijo backtracking from zero coefficients, to gradient
/// norm <= 1e-6. The intercept is not penalised. Throws DataError on
/// single-class labels and NumericalError when ridge == 0 and the data are
/// completely separated (no finite optimum).
LogisticModel logistic_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels, double ridge,
                           Eigen::Index n_shape = -1);

}  // namespace morpho
