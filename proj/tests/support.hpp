#pragma once

#include <string>

#include "qmarg/cli.hpp"
#include "qmarg/projections.hpp"

namespace qmarg::testing {

inline std::string fixture(const std::string& name) { return std::string(FIXTURE_DIR) + "/" + name; }

inline HermitianMatrix load_hermitian(const std::string& name) {
  return cli::as_hermitian(cli::load_matrix(fixture(name)), name);
}

inline DensityMatrix load_density(const std::string& name) { return DensityMatrix(load_hermitian(name)); }

/// Printed spectra are rounded to four decimals and may not sum to one.
inline Spectrum load_spectrum(const std::string& name) {
  return Spectrum(cli::load_values(fixture(name))).normalized();
}

inline DensityMatrix diagonal_density(const std::vector<double>& values) {
  RealVector v = Eigen::Map<const RealVector>(values.data(), static_cast<Eigen::Index>(values.size()));
  return DensityMatrix(HermitianMatrix(v.cast<Complex>().asDiagonal()));
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

inline HermitianMatrix random_hermitian(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = Complex(g(rng), g(rng));
  return HermitianMatrix(m);
}

// Ex 4.2 / 4.3 / 4.4 marginal spectra.
inline const std::vector<double> kEx42a{0.5951, 0.2341, 0.1708};
inline const std::vector<double> kEx42b{0.6124, 0.1926, 0.1654, 0.0296};
inline const std::vector<double> kEx43a{0.8213, 0.1234, 0.0553};
inline const std::vector<double> kEx43b{0.5720, 0.3068, 0.1000, 0.0189, 0.0020, 0.0003};
inline const std::vector<double> kEx44a{0.2272, 0.2136, 0.1946, 0.1474, 0.1341, 0.0831};
inline const std::vector<double> kEx44b{0.2399, 0.1699, 0.1638, 0.1463, 0.1246, 0.0851, 0.0407, 0.0297};

}  // namespace qmarg::testing
