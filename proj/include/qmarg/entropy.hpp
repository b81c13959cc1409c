#pragma once

#include "qmarg/tensorcore.hpp"

namespace qmarg {

/// Floor applied to eigenvalues before logarithms and fractional powers.
inline constexpr double kEigenvalueFloor = 1e-15;

/// S(rho) = -sum lambda ln lambda (natural log, 0 ln 0 = 0). Negative
/// round-off eigenvalues are clipped to zero.
double von_neumann(const HermitianMatrix& rho);

/// S_alpha(rho) = ln(sum lambda^alpha) / (1 - alpha), alpha >= 0, alpha != 1.
double renyi(const HermitianMatrix& rho, double alpha);

/// Gradient of f(rho) = tr(rho ln rho) = -S(rho): ln(rho) + I, eigenvalues
/// floored at kEigenvalueFloor.
HermitianMatrix grad_von_neumann_objective(const HermitianMatrix& rho);

/// Gradient of S_alpha: alpha / (1 - alpha) * rho^(alpha-1) / tr(rho^alpha).
/// Requires alpha > 0, alpha != 1; eigenvalues floored at kEigenvalueFloor.
HermitianMatrix grad_renyi(const HermitianMatrix& rho, double alpha);

}  // namespace qmarg
