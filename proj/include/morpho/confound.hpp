#pragma once

#include <optional>
#include <string>
#include <vector>

#include "morpho/cohort.hpp"
#include "morpho/pca.hpp"
#include "morpho/pls.hpp"

namespace morpho {

/// Which subjects train a deflation model.
struct TrainingSelector {
  enum class Kind { Controls, Cases, Both, Ids };
  Kind kind = Kind::Controls;
  std::vector<std::string> ids;  // Kind::Ids only

  static TrainingSelector controls() { return {Kind::Controls, {}}; }
  static TrainingSelector cases() { return {Kind::Cases, {}}; }
  static TrainingSelector both() { return {Kind::Both, {}}; }

  std::vector<Eigen::Index> select(const Cohort& cohort) const;
  std::string name() const;                         // controls | cases | both | ids
  static TrainingSelector parse(const std::string&);  // controls | cases | both
};

/// Linear prediction of shape from standardised confounders:
///   X_hat = training_mean + standardize(M) * coeffs
/// Residual shapes are X - standardize(M) * coeffs, which keeps the training
/// mean in place.
struct DeflationModel {
  Eigen::MatrixXd coeffs;  // m x 3N
  Eigen::VectorXd training_mean;
  Standardizer standardization;  // fitted on the training subset
  std::vector<std::string> training_ids;
  Eigen::Index n_pls_components = 0;  // requested
  Eigen::Index n_components_used = 0;

  const std::vector<std::string>& confounders() const { return standardization.names; }
  Eigen::MatrixXd predict(const Eigen::MatrixXd& confounders_raw) const;  // n x 3N, includes the mean
  Eigen::MatrixXd residuals(const ShapeMatrix& shapes, const Eigen::MatrixXd& confounders_raw) const;
};

/// PLS from standardised confounders to mean-centred shapes on the selected
/// training subset. n_components <= 0 uses the number of confounders.
DeflationModel deflation_fit(const Cohort& cohort, const std::vector<std::string>& confounders,
                             const TrainingSelector& training, Eigen::Index n_components = 0);

/// Residual shapes for every subject of a raw (not yet deflated) cohort.
/// Throws ConfigError if the cohort is already deflated.
ShapeMatrix deflate(const DeflationModel& model, const Cohort& cohort);

/// Whitened unit pattern of one confounder's coefficient row.
Eigen::VectorXd confounder_pattern(const DeflationModel& model, const std::string& confounder, const PcaModel& pca,
                                   std::optional<Eigen::Index> k_modes = std::nullopt);

}  // namespace morpho
