#include "morpho/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "morpho/error.hpp"

namespace morpho {
namespace {

constexpr double kGradTol = 1e-6;
constexpr int kMaxIter = 500;

// log(1 + exp(z)) without overflow
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Eigen::VectorXd LogisticModel::decision(const Eigen::MatrixXd& features) const {
  return (features * coeffs).array() + intercept;
}

Eigen::VectorXd LogisticModel::predict_proba(const Eigen::MatrixXd& features) const {
  const double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return decision(features).unaryExpr([&](double z) { return std::clamp(sigmoid(z), lo, hi); });
}

double log_loss(const Eigen::VectorXd& decision, const Eigen::VectorXd& labels) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < decision.size(); ++i) {
    // -log p = softplus(-z) for y = 1; -log(1 - p) = softplus(z) for y = 0
    s += labels(i) * softplus(-decision(i)) + (1.0 - labels(i)) * softplus(decision(i));
  }
  return s / static_cast<double>(decision.size());
}

double logistic_objective(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                          const Eigen::VectorXd& coeffs, double intercept, double ridge) {
  const Eigen::VectorXd z = (features * coeffs).array() + intercept;
  return log_loss(z, labels) + 0.5 * ridge * coeffs.squaredNorm();
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                                  const Eigen::VectorXd& coeffs, double intercept, double ridge) {
  const auto n = static_cast<double>(features.rows());
  const Eigen::VectorXd z = (features * coeffs).array() + intercept;
  const Eigen::VectorXd resid = z.unaryExpr(&sigmoid) - labels;
  Eigen::VectorXd g(coeffs.size() + 1);
  g.head(coeffs.size()) = features.transpose() * resid / n + ridge * coeffs;
  g(coeffs.size()) = resid.sum() / n;
  return g;
}

LogisticModel logistic_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels, double ridge,
                           Eigen::Index n_shape) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (labels.size() != n) throw DimensionError("logistic_fit: label count does not match feature rows");
  if (ridge < 0.0) throw ConfigError("logistic_fit: ridge must be >= 0");
  const double positives = labels.sum();
  if (positives <= 0.0 || positives >= static_cast<double>(n)) {
    throw DataError("logistic_fit: labels contain a single class");
  }

  LogisticModel m;
  m.ridge = ridge;
  m.n_shape = n_shape < 0 ? d : n_shape;
  m.coeffs = Eigen::VectorXd::Zero(d);
  m.intercept = 0.0;

  // Augmented design [features, 1]; parameters theta = (coeffs, intercept).
  Eigen::MatrixXd a(n, d + 1);
  a.leftCols(d) = features;
  a.col(d).setOnes();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d + 1, ridge);
  penalty(d) = 0.0;

  auto objective = [&](const Eigen::VectorXd& th) {
    const Eigen::VectorXd z = a * th;
    return log_loss(z, labels) + 0.5 * ridge * th.head(d).squaredNorm();
  };

  double f = objective(theta);
  m.objective_trace.push_back(f);
  const double nd = static_cast<double>(n);
  Eigen::VectorXd g;
  int iter = 0;
  for (; iter < kMaxIter; ++iter) {
    const Eigen::VectorXd z = a * theta;
    const Eigen::VectorXd p = z.unaryExpr(&sigmoid);
    g = a.transpose() * (p - labels) / nd + penalty.cwiseProduct(theta);
    if (g.norm() <= kGradTol) break;

    const Eigen::VectorXd wts = p.array() * (1.0 - p.array());
    Eigen::MatrixXd h = a.transpose() * wts.asDiagonal() * a / nd;
    h.diagonal() += penalty;

    // Levenberg damping if the Hessian is numerically singular.
    Eigen::VectorXd step;
    double damping = 0.0;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::MatrixXd hd = h;
      hd.diagonal().array() += damping;
      Eigen::LLT<Eigen::MatrixXd> llt(hd);
      if (llt.info() == Eigen::Success) {
        step = -llt.solve(g);
        if (step.allFinite()) break;
      }
      damping = damping == 0.0 ? 1e-12 * std::max(1.0, h.diagonal().maxCoeff()) : damping * 10.0;
    }
    if (step.size() == 0 || !step.allFinite()) step = -g;

    // Armijo backtracking; objective is non-increasing across accepted steps.
    const double slope = g.dot(step);
    double alpha = 1.0;
    double f_new = objective(theta + alpha * step);
    int halvings = 0;
    while (!(f_new <= f + 1e-4 * alpha * slope) && halvings < 60) {
      alpha *= 0.5;
      f_new = objective(theta + alpha * step);
      ++halvings;
    }
    if (!(f_new <= f)) break;  // no further progress possible in floating point
    theta += alpha * step;
    f = f_new;
    m.objective_trace.push_back(f);
  }

  m.coeffs = theta.head(d);
  m.intercept = theta(d);
  m.iterations = iter;
  g = logistic_gradient(features, labels, m.coeffs, m.intercept, ridge);
  m.gradient_norm = g.norm();

  if (ridge == 0.0) {
    const Eigen::VectorXd z = a * theta;
    bool separated = true;
    for (Eigen::Index i = 0; i < n && separated; ++i) separated = (labels(i) > 0.5) ? z(i) > 0.0 : z(i) < 0.0;
    if (separated) {
      throw NumericalError(
          "logistic_fit: classes are completely separated and coefficients diverge without regularisation; "
          "set ridge > 0");
    }
  }
  if (m.gradient_norm > kGradTol) {
    throw NumericalError("logistic_fit: optimiser stalled at gradient norm " + std::to_string(m.gradient_norm) +
                         " after " + std::to_string(iter) + " iterations");
  }
  return m;
}

}  // namespace morpho
