#include "qmarg/entropy.hpp"

#include <cmath>

namespace qmarg {

namespace {

void require_renyi_order(double alpha, bool for_gradient) {
  if (!(alpha >= 0.0) || (for_gradient && alpha == 0.0))
    throw PreconditionError("Renyi order must be " + std::string(for_gradient ? "positive" : "nonnegative"));
  if (alpha == 1.0) throw PreconditionError("Renyi order 1 is the von Neumann entropy; use von_neumann()");
}

HermitianMatrix spectral_function(const EigDecomposition& eig, const RealVector& values) {
  return HermitianMatrix(eig.vectors * values.cast<Complex>().asDiagonal() * eig.vectors.adjoint());
}

}  // namespace

double von_neumann(const HermitianMatrix& rho) {
  const RealVector lambda = hermitian_eig(rho).values;
  double s = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda(i) > 0.0) s -= lambda(i) * std::log(lambda(i));
  return s;
}

double renyi(const HermitianMatrix& rho, double alpha) {
  require_renyi_order(alpha, false);
  const RealVector lambda = hermitian_eig(rho).values;
  double power_sum = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda(i) > 0.0) power_sum += std::pow(lambda(i), alpha);
  return std::log(power_sum) / (1.0 - alpha);
}

HermitianMatrix grad_von_neumann_objective(const HermitianMatrix& rho) {
  const EigDecomposition eig = hermitian_eig(rho);
  const RealVector g = eig.values.cwiseMax(kEigenvalueFloor).array().log() + 1.0;
  return spectral_function(eig, g);
}

HermitianMatrix grad_renyi(const HermitianMatrix& rho, double alpha) {
  require_renyi_order(alpha, true);
  const EigDecomposition eig = hermitian_eig(rho);
  const RealVector lambda = eig.values.cwiseMax(kEigenvalueFloor);
  const double power_sum = lambda.array().pow(alpha).sum();
  const RealVector g = (alpha / (1.0 - alpha) / power_sum) * lambda.array().pow(alpha - 1.0);
  return spectral_function(eig, g);
}

}  // namespace qmarg
