#pragma once

#include <Eigen/Dense>
#include <optional>

namespace morpho {

/// Principal component model of row-sample data.
struct PcaModel {
  Eigen::VectorXd mean;        // p
  Eigen::MatrixXd components;  // K x p, orthonormal rows
  Eigen::VectorXd variances;   // K, descending
  double total_variance = 0.0; // trace of the sample covariance (all modes)
  Eigen::Index n_samples = 0;

  Eigen::Index n_components() const { return components.rows(); }
  Eigen::Index dim() const { return mean.size(); }

  Eigen::MatrixXd transform(const Eigen::MatrixXd& data) const;      // n x K scores
  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& scores) const;  // n x p

  // Smallest k whose leading variances reach `fraction` of total_variance
  // (capped at n_components()).
  Eigen::Index modes_for_fraction(double fraction) const;
};

/// Leading right singular directions of the centred data; variances are
/// singular values squared over (n - 1). Each component's largest-magnitude
/// entry is positive. Throws ConfigError when n_components exceeds
/// min(n - 1, p) or is < 1.
PcaModel pca_fit(const Eigen::MatrixXd& data, Eigen::Index n_components);

// All min(n - 1, p) components.
PcaModel pca_fit_full(const Eigen::MatrixXd& data);

inline constexpr double kDefaultWhitenFraction = 0.99;

/// Unit vector along Sigma^{1/2} w, with Sigma the covariance spanned by the
/// first k_modes components (default: modes covering 99% of the variance).
/// Throws NumericalError if w has no weight on the retained modes.
Eigen::VectorXd pca_whiten_direction(const PcaModel& model, const Eigen::VectorXd& w,
                                     std::optional<Eigen::Index> k_modes = std::nullopt);

}  // namespace morpho
