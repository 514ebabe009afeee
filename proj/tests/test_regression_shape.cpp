#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "morpho/error.hpp"
#include "morpho/log.hpp"
#include "morpho/regression_shape.hpp"

using namespace morpho;

namespace {

// Minimiser of z^T diag(1/var) z subject to v^T z = a through the KKT system,
// solved densely; x = mu + P^T z.
Eigen::VectorXd kkt_oracle(const ShapeRegressionModel& m, double b) {
  const auto k = m.metric_modes;
  const Eigen::MatrixXd p = m.pca_for_metric.components.topRows(k);
  const Eigen::VectorXd v = p * m.coefficients();
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
  kkt.topLeftCorner(k, k) = (2.0 * m.pca_for_metric.variances.head(k).cwiseInverse()).asDiagonal();
  kkt.topRightCorner(k, 1) = v;
  kkt.bottomLeftCorner(1, k) = v.transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  rhs(k) = b - m.value_mean;
  const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
  return m.mean_shape + p.transpose() * sol.head(k);
}

struct Fixture {
  SynthResult syn = generate(test::small_spec(40, 12));
  Eigen::VectorXd bsa = syn.cohort.column("bsa");
  ShapeRegressionModel model = regression_fit(syn.cohort.shapes, bsa, 3);
};

}  // namespace

TEST_SUITE("regression_shape") {

TEST_CASE("closed form agrees with the KKT solution and hits the target") {
  Fixture f;
  Rng rng = make_stream(3);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  for (int trial = 0; trial < 20; ++trial) {
    const double b = f.model.value_mean + u(rng) * f.model.value_sd;
    const ShapeVector x = representative_for_value(f.model, b);
    const Eigen::VectorXd oracle = kkt_oracle(f.model, b);
    const Eigen::VectorXd d = x.coords() - f.model.mean_shape;
    CHECK((x.coords() - oracle).norm() <= 1e-6 * std::max(d.norm(), 1e-12));
    CHECK(std::abs(f.model.predict(x) - b) < 1e-9);
  }
  // At the mean value the representative is the mean shape.
  CHECK((representative_for_value(f.model, f.model.value_mean).coords() - f.model.mean_shape).norm() < 1e-12);
}

TEST_CASE("any other feasible shape is further away") {
  Fixture f;
  const double b = f.model.value_mean + f.model.value_sd;
  const Eigen::VectorXd x = representative_for_value(f.model, b).coords();
  const auto k = f.model.metric_modes;
  const Eigen::MatrixXd p = f.model.pca_for_metric.components.topRows(k);
  const Eigen::VectorXd inv = f.model.pca_for_metric.variances.head(k).cwiseInverse();
  auto mahalanobis = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd z = p * (y - f.model.mean_shape);
    return z.dot(inv.cwiseProduct(z));
  };
  Rng rng = make_stream(4);
  const Eigen::VectorXd w = f.model.coefficients();
  const Eigen::VectorXd pw = p.transpose() * (p * w);
  for (int trial = 0; trial < 10; ++trial) {
    // Perturb inside the retained modes while staying on the constraint.
    Eigen::VectorXd d = p.transpose() * test::random_matrix(rng, k, 1);
    d -= pw * (w.dot(d) / w.dot(pw));
    CHECK(std::abs(f.model.predict(ShapeVector(x + d)) - b) < 1e-8);
    CHECK(mahalanobis(x + d) >= mahalanobis(x));
  }
}

TEST_CASE("far targets warn") {
  Fixture f;
  ScopedWarningCapture cap;
  representative_for_value(f.model, f.model.value_mean + 4.0 * f.model.value_sd);
  CHECK(cap.messages().size() == 1);
  CHECK_THROWS_AS(representative_for_value(f.model, std::nan("")), UsageError);
}

TEST_CASE("recovers the bsa direction and predicts held-out subjects") {
  Fixture f;
  const Eigen::VectorXd w = f.model.coefficients();
  const Eigen::VectorXd fitted = f.model.predict(f.syn.cohort.shapes);
  const double r2 = 1.0 - (fitted - f.bsa).squaredNorm() / (f.bsa.array() - f.bsa.mean()).square().sum();
  CHECK(r2 > 0.3);
  const double cv = regression_cv_r2(f.syn.cohort.shapes, f.bsa, 3, 5, 1);
  CHECK(cv > 0.0);
  CHECK(cv == regression_cv_r2(f.syn.cohort.shapes, f.bsa, 3, 5, 1));
  CHECK(cv < r2);
  const PcaModel whitening = pca_fit_full(f.syn.cohort.shapes);
  CHECK(regression_pattern(f.model, whitening).norm() == doctest::Approx(1.0));
}

TEST_CASE("regression error cases") {
  Fixture f;
  CHECK_THROWS_AS(regression_fit(f.syn.cohort.shapes, Eigen::VectorXd::Constant(80, 2.0), 3), DataError);
  CHECK_THROWS_AS(regression_fit(f.syn.cohort.shapes.topRows(4), f.bsa.head(4), 3), DataError);
  CHECK_THROWS_AS(regression_fit(f.syn.cohort.shapes, f.bsa.head(10), 3), DimensionError);
  CHECK_THROWS_AS(f.model.predict(ShapeVector(Eigen::VectorXd::Zero(6))), DimensionError);
  CHECK_THROWS_AS(regression_cv_r2(f.syn.cohort.shapes, f.bsa, 3, 1, 0), ConfigError);
}

}  // TEST_SUITE
