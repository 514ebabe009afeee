#include "morpho/regression_shape.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "morpho/error.hpp"
#include "morpho/log.hpp"
#include "morpho/random.hpp"

namespace morpho {

double ShapeRegressionModel::predict(const ShapeVector& shape) const {
  if (shape.size() != mean_shape.size()) throw DimensionError("regression: shape length does not match model");
  return value_mean + (shape.coords() - mean_shape).dot(coefficients());
}

Eigen::VectorXd ShapeRegressionModel::predict(const ShapeMatrix& shapes) const {
  if (shapes.cols() != mean_shape.size()) throw DimensionError("regression: shape width does not match model");
  return ((shapes.rowwise() - mean_shape.transpose()) * coefficients()).array() + value_mean;
}

ShapeRegressionModel regression_fit(const ShapeMatrix& shapes, const Eigen::VectorXd& values,
                                    Eigen::Index n_components, double metric_fraction) {
  if (shapes.rows() != values.size()) throw DimensionError("regression: value count does not match shape count");
  if (n_components < 1) throw ConfigError("regression needs at least one component");
  if (shapes.rows() < n_components + 2)
    throw DataError("regression needs at least " + std::to_string(n_components + 2) + " subjects");
  if (!values.allFinite()) throw DataError("regression target has missing or non-finite values");
  ShapeRegressionModel m;
  m.value_mean = values.mean();
  const Eigen::VectorXd yc = values.array() - m.value_mean;
  m.value_sd = std::sqrt(yc.squaredNorm() / static_cast<double>(values.size() - 1));
  if (m.value_sd == 0.0) throw DataError("regression target is constant");
  m.mean_shape = shapes.colwise().mean().transpose();
  const Eigen::MatrixXd xc = shapes.rowwise() - m.mean_shape.transpose();
  m.pls = pls_fit(xc, yc, n_components);
  m.pca_for_metric = pca_fit_full(shapes);
  m.metric_modes = m.pca_for_metric.modes_for_fraction(metric_fraction);
  return m;
}

ShapeVector representative_for_value(const ShapeRegressionModel& model, double b) {
  if (!std::isfinite(b)) throw UsageError("target value must be finite");
  if (std::abs(b - model.value_mean) > 3.0 * model.value_sd) {
    std::ostringstream os;
    os << "target " << b << " lies more than 3 SD from the training mean " << model.value_mean;
    warn(os.str());
  }
  const PcaModel& pca = model.pca_for_metric;
  const auto k = model.metric_modes;
  const Eigen::MatrixXd p = pca.components.topRows(k);
  const Eigen::VectorXd w = model.coefficients();
  const Eigen::VectorXd pw = p * w;
  const Eigen::VectorXd lam_pw = pca.variances.head(k).cwiseProduct(pw);
  const double denom = pw.dot(lam_pw);
  if (!(denom > 1e-14 * w.squaredNorm() * pca.variances(0)))
    throw NumericalError("regression coefficients are orthogonal to the retained shape variability");
  const Eigen::VectorXd sigma_w = p.transpose() * lam_pw;
  return ShapeVector(model.mean_shape + ((b - model.value_mean) / denom) * sigma_w);
}

Eigen::VectorXd regression_pattern(const ShapeRegressionModel& model, const PcaModel& whitening,
                                   std::optional<Eigen::Index> k_modes) {
  return pca_whiten_direction(whitening, model.coefficients(), k_modes);
}

double regression_cv_r2(const ShapeMatrix& shapes, const Eigen::VectorXd& values, Eigen::Index n_components,
                        int folds, std::uint64_t seed) {
  const auto n = shapes.rows();
  if (folds < 2 || folds > n) throw ConfigError("regression CV needs 2 <= folds <= subjects");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng = make_stream(seed, 0);
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < order.size(); ++k) fold_of[static_cast<std::size_t>(order[k])] = static_cast<int>(k % static_cast<std::size_t>(folds));

  Eigen::VectorXd pred(n);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr, te;
    for (Eigen::Index i = 0; i < n; ++i) (fold_of[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
    const ShapeRegressionModel m = regression_fit(shapes(tr, Eigen::all), values(tr), n_components);
    pred(te) = m.predict(ShapeMatrix(shapes(te, Eigen::all)));
  }
  const double ss_res = (values - pred).squaredNorm();
  const double ss_tot = (values.array() - values.mean()).square().sum();
  return 1.0 - ss_res / ss_tot;
}

}  // namespace morpho
