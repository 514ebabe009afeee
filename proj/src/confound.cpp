#include "morpho/confound.hpp"

#include <algorithm>

#include "morpho/error.hpp"

namespace morpho {

std::vector<Eigen::Index> TrainingSelector::select(const Cohort& cohort) const {
  std::vector<Eigen::Index> rows;
  switch (kind) {
    case Kind::Controls: rows = cohort.class_indices(0); break;
    case Kind::Cases: rows = cohort.class_indices(1); break;
    case Kind::Both:
      for (Eigen::Index i = 0; i < cohort.size(); ++i) rows.push_back(i);
      break;
    case Kind::Ids:
      for (const auto& id : ids) {
        auto idx = cohort.index_of(id);
        if (!idx) throw DataError("training subject '" + id + "' is not in the cohort");
        rows.push_back(*idx);
      }
      break;
  }
  return rows;
}

std::string TrainingSelector::name() const {
  switch (kind) {
    case Kind::Controls: return "controls";
    case Kind::Cases: return "cases";
    case Kind::Both: return "both";
    case Kind::Ids: return "ids";
  }
  return "?";
}

TrainingSelector TrainingSelector::parse(const std::string& s) {
  if (s == "controls") return controls();
  if (s == "cases") return cases();
  if (s == "both") return both();
  throw UsageError("training population must be controls, cases or both (got '" + s + "')");
}

Eigen::MatrixXd DeflationModel::predict(const Eigen::MatrixXd& confounders_raw) const {
  return (standardization.apply(confounders_raw) * coeffs).rowwise() + training_mean.transpose();
}

Eigen::MatrixXd DeflationModel::residuals(const ShapeMatrix& shapes, const Eigen::MatrixXd& confounders_raw) const {
  if (shapes.cols() != coeffs.cols()) throw DimensionError("deflation: shape width does not match model");
  if (shapes.rows() != confounders_raw.rows()) throw DimensionError("deflation: confounder rows do not match shapes");
  return shapes - standardization.apply(confounders_raw) * coeffs;
}

DeflationModel deflation_fit(const Cohort& cohort, const std::vector<std::string>& confounders,
                             const TrainingSelector& training, Eigen::Index n_components) {
  if (confounders.empty()) throw ConfigError("deflation needs at least one confounder");
  const auto rows = training.select(cohort);
  if (rows.size() < 2) throw DataError("deflation training subset (" + training.name() + ") has fewer than 2 subjects");
  const Cohort train = cohort.subset(rows);

  DeflationModel m;
  m.training_ids = train.ids;
  const Eigen::MatrixXd raw = train.column_matrix(confounders);
  m.standardization = Standardizer::fit(confounders, raw);
  m.training_mean = train.shapes.colwise().mean().transpose();

  const auto n_conf = static_cast<Eigen::Index>(confounders.size());
  m.n_pls_components = n_components > 0 ? n_components : n_conf;
  const Eigen::Index max_rank = std::min(train.size(), n_conf);
  if (m.n_pls_components > max_rank) {
    throw ConfigError("deflation: " + std::to_string(m.n_pls_components) + " PLS components exceed rank bound " +
                      std::to_string(max_rank));
  }
  const Eigen::MatrixXd m_std = m.standardization.apply(raw);
  const Eigen::MatrixXd centred = train.shapes.rowwise() - m.training_mean.transpose();
  const PlsModel pls = pls_fit(m_std, centred, m.n_pls_components);
  m.coeffs = pls.coefficients;
  m.n_components_used = pls.n_components();
  return m;
}

ShapeMatrix deflate(const DeflationModel& model, const Cohort& cohort) {
  if (cohort.deflated) {
    throw ConfigError("deflate: cohort shapes are already confounder residuals; deflate raw shapes only");
  }
  return model.residuals(cohort.shapes, cohort.column_matrix(model.confounders()));
}

Eigen::VectorXd confounder_pattern(const DeflationModel& model, const std::string& confounder, const PcaModel& pca,
                                   std::optional<Eigen::Index> k_modes) {
  const auto& names = model.confounders();
  auto it = std::find(names.begin(), names.end(), confounder);
  if (it == names.end()) throw DataError("confounder '" + confounder + "' is not part of the deflation model");
  const Eigen::VectorXd row = model.coeffs.row(it - names.begin()).transpose();
  if (row.norm() == 0.0) throw NumericalError("confounder '" + confounder + "' has an all-zero coefficient row");
  return pca_whiten_direction(pca, row, k_modes);
}

}  // namespace morpho
