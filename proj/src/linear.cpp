#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>

#include "qoe/error.hpp"
#include "qoe/models_classical.hpp"

namespace qoe {

std::vector<double> LinearModel::predict(const Matrix& x) const {
  if (x.cols() != coef.size())
    fail(ErrorKind::shape, "linear model expects " + std::to_string(coef.size()) +
                               " features, got " + std::to_string(x.cols()));
  std::vector<double> out(x.rows(), intercept);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < coef.size(); ++j) out[i] += coef[j] * x(i, j);
  return out;
}

LinearModel fit_linear(const Matrix& x, std::span<const double> y, const LinearParams& params) {
  const std::size_t n = x.rows(), d = x.cols();
  if (y.size() != n) fail(ErrorKind::shape, "fit_linear: X has " + std::to_string(n) +
                                                " rows but y has " + std::to_string(y.size()));
  if (n < d + 1)
    fail(ErrorKind::invalid_argument, "fit_linear: need at least d+1 = " +
                                          std::to_string(d + 1) + " rows, got " + std::to_string(n));

  // Column 0 of the augmented design is the intercept.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d + 1),
                                               static_cast<Eigen::Index>(d + 1));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d + 1));
  Eigen::VectorXd a(static_cast<Eigen::Index>(d + 1));
  for (std::size_t i = 0; i < n; ++i) {
    a(0) = 1.0;
    for (std::size_t j = 0; j < d; ++j) a(static_cast<Eigen::Index>(j + 1)) = x(i, j);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(a);
    rhs += y[i] * a;
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  for (std::size_t j = 1; j <= d; ++j)
    gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += params.ridge_jitter;

  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::numerical, "fit_linear: Gram matrix is singular even with jitter");
  const Eigen::VectorXd beta = llt.solve(rhs);
  if (!beta.allFinite()) fail(ErrorKind::numerical, "fit_linear: non-finite solution");

  LinearModel m;
  m.intercept = beta(0);
  m.coef.resize(d);
  for (std::size_t j = 0; j < d; ++j) m.coef[j] = beta(static_cast<Eigen::Index>(j + 1));
  return m;
}

}  // namespace qoe
