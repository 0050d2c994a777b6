#include "spdefield/fields.hpp"

#include <cmath>

#include "spdefield/errors.hpp"

namespace spdefield {

AnisotropyField materialize_fields(const Eigen::SparseMatrix<double>& F,
                                   const Eigen::VectorXd& alpha1,
                                   const Eigen::VectorXd& alpha2,
                                   const Eigen::VectorXd& alpha3,
                                   const Eigen::VectorXd& alpha4) {
  const Eigen::Index kl = F.cols();
  for (const auto* a : {&alpha1, &alpha2, &alpha3, &alpha4}) {
    if (a->size() != kl) {
      throw DimensionError("weight vector length does not match basis size");
    }
    if (!a->allFinite()) {
      throw ParameterError("coefficient weights must be finite");
    }
  }
  AnisotropyField f;
  f.kappa2 = (F * alpha1).array().exp();
  f.gamma = (F * alpha2).array().exp();
  f.vx = F * alpha3;
  f.vy = F * alpha4;
  f.H11 = f.gamma.array() + f.vx.array().square();
  f.H12 = f.vx.array() * f.vy.array();
  f.H22 = f.gamma.array() + f.vy.array().square();
  return f;
}

}  // namespace spdefield
