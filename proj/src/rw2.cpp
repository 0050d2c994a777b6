#include "spdefield/rw2.hpp"

#include <string>

#include "spdefield/errors.hpp"

namespace spdefield {

Rw2Precision build_rw2(const TensorBasis2D& basis) {
  const int k = basis.bx().size();
  const int l = basis.by().size();
  const Eigen::MatrixXd G0 = basis.bx().derivative_gram(0);
  const Eigen::MatrixXd G1 = basis.bx().derivative_gram(1);
  const Eigen::MatrixXd G2 = basis.bx().derivative_gram(2);
  const Eigen::MatrixXd H0 = basis.by().derivative_gram(0);
  const Eigen::MatrixXd H1 = basis.by().derivative_gram(1);
  const Eigen::MatrixXd H2 = basis.by().derivative_gram(2);

  const int kl = k * l;
  Eigen::MatrixXd C(kl, kl);
  for (int i = 0; i < k; ++i) {
    for (int ip = 0; ip < k; ++ip) {
      for (int j = 0; j < l; ++j) {
        for (int jp = 0; jp < l; ++jp) {
          C(i * l + j, ip * l + jp) = G2(i, ip) * H0(j, jp) +
                                      2.0 * G1(i, ip) * H1(j, jp) +
                                      G0(i, ip) * H2(j, jp);
        }
      }
    }
  }
  Rw2Precision out;
  out.Q = C.sparseView(1.0, 1e-300);
  out.rank = kl - 1;
  return out;
}

double prior_quadform(const Rw2Precision& prec, const Eigen::VectorXd& alpha,
                      double tau) {
  if (!(tau > 0.0)) {
    throw ParameterError("prior precision tau must be positive, got " +
                         std::to_string(tau));
  }
  if (alpha.size() != prec.Q.rows()) {
    throw DimensionError("weight vector length " +
                         std::to_string(alpha.size()) +
                         " does not match prior dimension " +
                         std::to_string(prec.Q.rows()));
  }
  return -0.5 * tau * alpha.dot(prec.Q * alpha);
}

}  // namespace spdefield
