#include "qrect/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace qrect {

GaussRule gauss_legendre(std::size_t n) {
  GaussRule r;
  if (n == 0) return r;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k < n; ++k) {
    const double kk = static_cast<double>(k);
    const double b = kk / std::sqrt(4.0 * kk * kk - 1.0);
    J(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = b;
    J(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  r.nodes.resize(n);
  r.weights.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    r.nodes[k] = es.eigenvalues()(kk);
    const double v = es.eigenvectors()(0, kk);
    r.weights[k] = 2.0 * v * v;
  }
  return r;
}

}  // namespace qrect
