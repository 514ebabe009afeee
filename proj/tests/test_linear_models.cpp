#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "morpho/error.hpp"
#include "morpho/log.hpp"
#include "morpho/logistic.hpp"
#include "morpho/pca.hpp"
#include "morpho/pls.hpp"

using namespace morpho;
using morpho::test::centred;
using morpho::test::random_matrix;

TEST_SUITE("linear_models") {

TEST_CASE("PCA matches a dense SVD") {
  Rng rng = make_stream(1);
  const Eigen::MatrixXd x = random_matrix(rng, 30, 12) * random_matrix(rng, 12, 12);
  const PcaModel m = pca_fit(x, 5);
  const Eigen::MatrixXd xc = centred(x);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinV);
  for (int k = 0; k < 5; ++k) {
    CHECK(std::abs(m.components.row(k).dot(svd.matrixV().col(k))) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(m.variances(k) == doctest::Approx(svd.singularValues()(k) * svd.singularValues()(k) / 29.0).epsilon(1e-10));
  }
  CHECK(m.total_variance == doctest::Approx(xc.squaredNorm() / 29.0));
  CHECK((m.components * m.components.transpose() - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-12);
  Eigen::Index argmax = 0;
  m.components.row(0).cwiseAbs().maxCoeff(&argmax);
  CHECK(m.components(0, argmax) > 0.0);

  const PcaModel full = pca_fit_full(x);
  CHECK(full.n_components() == 12);
  CHECK((full.reconstruct(full.transform(x)) - x).norm() < 1e-9);
  CHECK(full.modes_for_fraction(1.0) == 12);
  CHECK(full.modes_for_fraction(1e-9) == 1);
  CHECK_THROWS_AS(pca_fit(x, 13), ConfigError);
  CHECK_THROWS_AS(pca_fit(x, 0), ConfigError);
}

TEST_CASE("PLS first pair matches the SVD of X'Y") {
  Rng rng = make_stream(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd x = centred(random_matrix(rng, 40, 15));
    const Eigen::MatrixXd y = centred(x.leftCols(3) * random_matrix(rng, 3, 2) + 0.5 * random_matrix(rng, 40, 2));
    const PlsModel m = pls_fit(x, y, 4);
    REQUIRE(m.n_components() == 4);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x.transpose() * y, Eigen::ComputeThinU | Eigen::ComputeThinV);
    CHECK(std::abs(m.x_weights.col(0).dot(svd.matrixU().col(0))) >= 1.0 - 1e-8);
    CHECK(std::abs(m.y_weights.col(0).dot(svd.matrixV().col(0))) >= 1.0 - 1e-8);

    // Rebuild the deflation sequence and check each deflated block is
    // orthogonal to every score extracted so far.
    const Eigen::MatrixXd t = x * m.x_rotations;
    Eigen::MatrixXd xr = x, yr = y;
    for (Eigen::Index r = 0; r < 4; ++r) {
      CHECK((xr * m.x_weights.col(r) - t.col(r)).norm() < 1e-8 * t.col(r).norm());
      xr -= t.col(r) * m.x_loadings.col(r).transpose();
      yr -= t.col(r) * m.y_loadings.col(r).transpose();
      for (Eigen::Index k = 0; k <= r; ++k) {
        CHECK((xr.transpose() * t.col(k)).norm() < 1e-8 * x.norm() * t.col(k).norm());
        CHECK((yr.transpose() * t.col(k)).norm() < 1e-8 * y.norm() * t.col(k).norm());
      }
    }
    // Summed rank-one terms predict what the deflation explained.
    CHECK((m.predict(x) - (y - yr)).norm() < 1e-8 * y.norm());
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(15, 2);
    for (Eigen::Index r = 0; r < 4; ++r) sum += m.component_coefficients(r);
    CHECK((sum - m.coefficients).norm() < 1e-12 * (1.0 + m.coefficients.norm()));
  }
}

TEST_CASE("PLS with all components equals least squares") {
  Rng rng = make_stream(3);
  const Eigen::MatrixXd x = centred(random_matrix(rng, 50, 6));
  const Eigen::MatrixXd y = centred(random_matrix(rng, 50, 1));
  const PlsModel m = pls_fit(x, y, 6);
  const Eigen::VectorXd ols = x.colPivHouseholderQr().solve(y);
  CHECK((m.coefficients.col(0) - ols).norm() < 1e-8 * ols.norm());
}

TEST_CASE("PLS stops when the cross-covariance vanishes") {
  Rng rng = make_stream(4);
  const Eigen::MatrixXd x = centred(random_matrix(rng, 20, 5));
  // y along the leading singular direction is explained fully by one component.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const Eigen::MatrixXd y = x * svd.matrixV().col(0);
  ScopedWarningCapture cap;
  const PlsModel m = pls_fit(x, y, 4);
  CHECK(m.n_components() == 1);
  CHECK(m.n_requested == 4);
  CHECK_FALSE(cap.messages().empty());
  const PlsModel z = pls_fit(x, Eigen::MatrixXd::Zero(20, 1), 2);
  CHECK(z.n_components() == 0);
  CHECK(z.coefficients.norm() == 0.0);
}

TEST_CASE("orthonormal basis keeps the span and orientation") {
  Rng rng = make_stream(5);
  const Eigen::MatrixXd v = random_matrix(rng, 10, 3);
  const Eigen::MatrixXd q = orthonormal_basis(v);
  CHECK((q.transpose() * q - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
  CHECK((q * (q.transpose() * v) - v).norm() < 1e-10);
  CHECK(q.col(0).dot(v.col(0)) > 0.0);
  Eigen::MatrixXd dup(10, 3);
  dup << v.col(0), 2.0 * v.col(0), v.col(1);
  ScopedWarningCapture cap;
  CHECK(orthonormal_basis(dup).cols() == 2);
  CHECK_FALSE(cap.messages().empty());
}

TEST_CASE("whitened direction of a single mode is that mode") {
  Rng rng = make_stream(6);
  const Eigen::MatrixXd x = random_matrix(rng, 40, 8) * Eigen::VectorXd::LinSpaced(8, 1.0, 8.0).asDiagonal();
  const PcaModel m = pca_fit_full(x);
  const Eigen::VectorXd w = m.components.row(2).transpose();
  const Eigen::VectorXd d = pca_whiten_direction(m, 3.0 * w, 8);
  CHECK(std::abs(d.dot(w)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.norm() == doctest::Approx(1.0));
  // Sigma^{1/2} w, computed directly.
  const Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(8, -1.0, 1.0);
  Eigen::VectorXd direct = m.components.transpose() *
                           (m.variances.cwiseSqrt().asDiagonal() * (m.components * g)).eval();
  direct.normalize();
  CHECK((pca_whiten_direction(m, g, 8) - direct).norm() < 1e-12);
  CHECK_THROWS_AS(pca_whiten_direction(m, m.components.row(7).transpose(), 3), NumericalError);
}

TEST_CASE("logistic gradient matches central differences") {
  Rng rng = make_stream(7);
  const Eigen::MatrixXd f = random_matrix(rng, 60, 5);
  Eigen::VectorXd y(60);
  std::bernoulli_distribution coin(0.4);
  for (int i = 0; i < 60; ++i) y(i) = coin(rng) ? 1.0 : 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd c = random_matrix(rng, 5, 1);
    const double b = random_matrix(rng, 1, 1)(0);
    const Eigen::VectorXd g = logistic_gradient(f, y, c, b, 0.1);
    Eigen::VectorXd fd(6);
    const double h = 1e-5;
    for (int j = 0; j < 6; ++j) {
      Eigen::VectorXd cp = c, cm = c;
      double bp = b, bm = b;
      if (j < 5) {
        cp(j) += h;
        cm(j) -= h;
      } else {
        bp += h;
        bm -= h;
      }
      fd(j) = (logistic_objective(f, y, cp, bp, 0.1) - logistic_objective(f, y, cm, bm, 0.1)) / (2 * h);
    }
    CHECK((g - fd).norm() / g.norm() < 1e-6);
  }
}

TEST_CASE("logistic fit reaches a stationary point") {
  Rng rng = make_stream(8);
  const Eigen::MatrixXd f = random_matrix(rng, 200, 4);
  const Eigen::Vector4d truth(1.5, -1.0, 0.5, 0.0);
  Eigen::VectorXd y(200);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) y(i) = u(rng) < 1.0 / (1.0 + std::exp(-(f.row(i).dot(truth) + 0.3))) ? 1.0 : 0.0;
  const LogisticModel m = logistic_fit(f, y, 1e-6);
  CHECK(m.gradient_norm <= 1e-6);
  CHECK(logistic_gradient(f, y, m.coeffs, m.intercept, 1e-6).norm() <= 1e-6);
  for (std::size_t k = 1; k < m.objective_trace.size(); ++k) CHECK(m.objective_trace[k] <= m.objective_trace[k - 1]);
  CHECK(m.coeffs(0) > 0.5);
  CHECK(m.coeffs(1) < -0.3);
  const Eigen::VectorXd p = m.predict_proba(f);
  CHECK(p.minCoeff() > 0.0);
  CHECK(p.maxCoeff() < 1.0);
  CHECK(log_loss(m.decision(f), y) == doctest::Approx(logistic_objective(f, y, m.coeffs, m.intercept, 0.0)));
}

TEST_CASE("logistic fit error cases") {
  Rng rng = make_stream(9);
  const Eigen::MatrixXd f = random_matrix(rng, 20, 2);
  CHECK_THROWS_AS(logistic_fit(f, Eigen::VectorXd::Ones(20), 1e-6), DataError);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) y(i) = f(i, 0) > 0.0 ? 1.0 : 0.0;
  CHECK_THROWS_AS(logistic_fit(f, y, 0.0), NumericalError);
  // A ridge makes the separable problem well posed.
  CHECK(logistic_fit(f, y, 1e-3).gradient_norm <= 1e-6);
}

TEST_CASE("log loss is stable for extreme decisions") {
  Eigen::Vector2d z(800.0, -800.0), y(1.0, 0.0);
  CHECK(log_loss(z, y) == doctest::Approx(0.0));
  Eigen::Vector2d wrong(0.0, 1.0);
  CHECK(log_loss(z, wrong) == doctest::Approx(800.0));
}

}  // TEST_SUITE
