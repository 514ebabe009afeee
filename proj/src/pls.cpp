#include "morpho/pls.hpp"

#include <cmath>
#include <string>

#include "morpho/error.hpp"
#include "morpho/log.hpp"

namespace morpho {
namespace {

struct SingularPair {
  Eigen::VectorXd u, v;
  double sigma = 0.0;
};

// Leading singular pair of c from the eigen-decomposition of the smaller Gram matrix.
SingularPair leading_pair(const Eigen::MatrixXd& c) {
  SingularPair sp;
  if (c.cols() <= c.rows()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.transpose() * c);
    const Eigen::Index last = c.cols() - 1;
    sp.sigma = std::sqrt(std::max(es.eigenvalues()(last), 0.0));
    sp.v = es.eigenvectors().col(last);
    sp.u = c * sp.v;
    const double nu = sp.u.norm();
    if (nu > 0.0) sp.u /= nu;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c * c.transpose());
    const Eigen::Index last = c.rows() - 1;
    sp.sigma = std::sqrt(std::max(es.eigenvalues()(last), 0.0));
    sp.u = es.eigenvectors().col(last);
    sp.v = c.transpose() * sp.u;
    const double nv = sp.v.norm();
    if (nv > 0.0) sp.v /= nv;
  }
  Eigen::Index arg;
  sp.u.cwiseAbs().maxCoeff(&arg);
  if (sp.u(arg) < 0.0) {
    sp.u = -sp.u;
    sp.v = -sp.v;
  }
  return sp;
}

}  // namespace

Eigen::MatrixXd PlsModel::component_coefficients(Eigen::Index r) const {
  return x_rotations.col(r) * y_loadings.col(r).transpose();
}

PlsModel pls_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Eigen::Index n_components) {
  if (x.rows() != y.rows()) {
    throw DimensionError("PLS: X has " + std::to_string(x.rows()) + " rows, Y has " + std::to_string(y.rows()));
  }
  if (n_components < 1) throw ConfigError("PLS: n_components must be >= 1");
  const Eigen::Index p = x.cols();
  const Eigen::Index q = y.cols();
  const Eigen::Index max_rank = std::min(x.rows(), p);
  if (n_components > max_rank) {
    throw ConfigError("PLS: n_components=" + std::to_string(n_components) + " exceeds rank bound " +
                      std::to_string(max_rank));
  }

  PlsModel m;
  m.n_requested = n_components;
  m.coefficients = Eigen::MatrixXd::Zero(p, q);
  m.x_weights.resize(p, n_components);
  m.y_weights.resize(q, n_components);
  m.x_loadings.resize(p, n_components);
  m.y_loadings.resize(q, n_components);
  m.x_rotations.resize(p, n_components);

  Eigen::MatrixXd xr = x;
  Eigen::MatrixXd yr = y;
  const double scale = x.norm() * y.norm();
  Eigen::Index r = 0;
  for (; r < n_components; ++r) {
    const Eigen::MatrixXd cross = xr.transpose() * yr;
    const SingularPair sp = leading_pair(cross);
    if (!(sp.sigma > 1e-12 * scale)) break;

    const Eigen::VectorXd t = xr * sp.u;
    const double tt = t.squaredNorm();
    if (!(tt > 0.0)) break;
    const Eigen::VectorXd pl = xr.transpose() * t / tt;
    const Eigen::VectorXd cl = yr.transpose() * t / tt;

    // rot_r = (I - u_1 p_1^T) ... (I - u_{r-1} p_{r-1}^T) u_r
    Eigen::VectorXd rot = sp.u;
    for (Eigen::Index j = r - 1; j >= 0; --j) rot -= m.x_weights.col(j) * m.x_loadings.col(j).dot(rot);

    m.x_weights.col(r) = sp.u;
    m.y_weights.col(r) = sp.v;
    m.x_loadings.col(r) = pl;
    m.y_loadings.col(r) = cl;
    m.x_rotations.col(r) = rot;
    m.coefficients.noalias() += rot * cl.transpose();

    xr.noalias() -= t * pl.transpose();
    yr.noalias() -= t * cl.transpose();
  }
  if (r < n_components) {
    warn("PLS stopped after " + std::to_string(r) + " of " + std::to_string(n_components) +
         " components: remaining cross-covariance is zero");
    m.x_weights.conservativeResize(p, r);
    m.y_weights.conservativeResize(q, r);
    m.x_loadings.conservativeResize(p, r);
    m.y_loadings.conservativeResize(q, r);
    m.x_rotations.conservativeResize(p, r);
  }
  return m;
}

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& vectors) {
  if (vectors.cols() == 0) throw NumericalError("orthonormal_basis: no vectors");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> piv(vectors);
  piv.setThreshold(1e-10);
  const Eigen::Index rank = piv.rank();
  if (rank == 0) throw NumericalError("orthonormal_basis: all vectors are zero");
  if (rank < vectors.cols()) {
    warn("orthonormal_basis: " + std::to_string(vectors.cols()) + " vectors span only " + std::to_string(rank) +
         " dimensions; basis reduced");
    Eigen::MatrixXd q = piv.householderQ() * Eigen::MatrixXd::Identity(vectors.rows(), rank);
    return q;
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(vectors);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(vectors.rows(), vectors.cols());
  const Eigen::MatrixXd& rmat = qr.matrixQR();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (rmat(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

Eigen::MatrixXd pls_dr_basis(const PlsModel& model) {
  if (model.n_components() < 1) throw NumericalError("PLS model has no components to build a basis from");
  return orthonormal_basis(model.x_weights);
}

}  // namespace morpho
