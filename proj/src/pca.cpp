#include "morpho/pca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "morpho/error.hpp"

namespace morpho {

Eigen::MatrixXd PcaModel::transform(const Eigen::MatrixXd& data) const {
  if (data.cols() != dim()) {
    throw DimensionError("PCA transform: data has " + std::to_string(data.cols()) + " columns, model expects " +
                         std::to_string(dim()));
  }
  return (data.rowwise() - mean.transpose()) * components.transpose();
}

Eigen::MatrixXd PcaModel::reconstruct(const Eigen::MatrixXd& scores) const {
  if (scores.cols() != n_components()) throw DimensionError("PCA reconstruct: score width mismatch");
  return (scores * components).rowwise() + mean.transpose();
}

Eigen::Index PcaModel::modes_for_fraction(double fraction) const {
  if (n_components() == 0) return 0;
  if (!(total_variance > 0.0)) return 1;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < n_components(); ++k) {
    acc += variances(k);
    if (acc >= fraction * total_variance) return k + 1;
  }
  return n_components();
}

PcaModel pca_fit(const Eigen::MatrixXd& data, Eigen::Index n_components) {
  const Eigen::Index n = data.rows();
  const Eigen::Index p = data.cols();
  const Eigen::Index max_k = std::min(n - 1, p);
  if (n < 2) throw DataError("PCA needs at least 2 samples");
  if (n_components < 1 || n_components > max_k) {
    throw ConfigError("PCA: n_components=" + std::to_string(n_components) + " outside [1, " + std::to_string(max_k) +
                      "] for " + std::to_string(n) + " samples of dimension " + std::to_string(p));
  }

  PcaModel m;
  m.n_samples = n;
  m.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centred = data.rowwise() - m.mean.transpose();
  const double denom = static_cast<double>(n - 1);
  m.total_variance = centred.squaredNorm() / denom;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  m.components = svd.matrixV().leftCols(n_components).transpose();
  m.variances = s.head(n_components).array().square() / denom;
  for (Eigen::Index k = 0; k < n_components; ++k) {
    Eigen::Index arg;
    m.components.row(k).cwiseAbs().maxCoeff(&arg);
    if (m.components(k, arg) < 0.0) m.components.row(k) *= -1.0;
  }
  return m;
}

PcaModel pca_fit_full(const Eigen::MatrixXd& data) {
  return pca_fit(data, std::min(data.rows() - 1, data.cols()));
}

Eigen::VectorXd pca_whiten_direction(const PcaModel& model, const Eigen::VectorXd& w,
                                     std::optional<Eigen::Index> k_modes) {
  if (w.size() != model.dim()) {
    throw DimensionError("whitening: vector has length " + std::to_string(w.size()) + ", model dimension is " +
                         std::to_string(model.dim()));
  }
  const Eigen::Index k = k_modes.value_or(model.modes_for_fraction(kDefaultWhitenFraction));
  if (k < 1 || k > model.n_components()) {
    throw ConfigError("whitening: k_modes=" + std::to_string(k) + " outside [1, " +
                      std::to_string(model.n_components()) + "]");
  }
  const auto basis = model.components.topRows(k);
  const Eigen::VectorXd coef = (basis * w).cwiseProduct(model.variances.head(k).cwiseSqrt());
  Eigen::VectorXd out = basis.transpose() * coef;
  const double norm = out.norm();
  const double scale = w.norm() * std::sqrt(std::max(model.variances(0), 0.0));
  if (!(norm > 1e-13 * scale) || !std::isfinite(norm)) {
    throw NumericalError("whitening: direction is orthogonal to all retained shape modes");
  }
  return out / norm;
}

}  // namespace morpho
