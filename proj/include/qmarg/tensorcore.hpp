#pragma once

// Dense tensor-structured linear algebra on multipartite Hilbert spaces.
//
// A k-partite space C^{n_1} (x) ... (x) C^{n_k} is indexed row-major: the
// basis vector e_{i_1} (x) ... (x) e_{i_k} has linear index
// i_1 * (n_2 ... n_k) + ... + i_k, which is the index convention of kron().
// Subsystems are numbered from 0 in code; index sets are ascending.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "qmarg/errors.hpp"

namespace qmarg {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Ascending list of 0-based subsystem indices.
using Subsystems = std::vector<std::size_t>;

/// Eigenvalues closer than this are treated as one degenerate cluster.
inline constexpr double kDegeneracyTolerance = 1e-12;
/// Relative threshold of numerical_rank().
inline constexpr double kRankTolerance = 1e-10;

/// Ordered subsystem dimensions (n_1, ..., n_k) of a tensor factorization.
class SystemDims {
 public:
  explicit SystemDims(std::vector<std::size_t> dims);

  static SystemDims bipartite(std::size_t n1, std::size_t n2) { return SystemDims({n1, n2}); }

  std::size_t count() const { return dims_.size(); }
  std::size_t total() const { return total_; }
  std::size_t operator[](std::size_t i) const { return dims_.at(i); }
  const std::vector<std::size_t>& dims() const { return dims_; }

  /// Product of the dimensions of the listed subsystems (1 for an empty set).
  std::size_t total_of(const Subsystems& subsystems) const;
  /// Subsystems not in `subsystems`, ascending.
  Subsystems complement(const Subsystems& subsystems) const;
  /// Dimensions of the listed subsystems, in the listed order.
  SystemDims restricted_to(const Subsystems& subsystems) const;

  /// Throws DimensionError unless `subsystems` is strictly ascending and in range.
  void validate(const Subsystems& subsystems) const;

  bool operator==(const SystemDims& other) const { return dims_ == other.dims_; }

 private:
  std::vector<std::size_t> dims_;
  std::size_t total_;
};

/// Dense complex Hermitian matrix. Construction symmetrizes (H + H*)/2, so
/// round-off asymmetry never accumulates across long projection loops.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const Matrix& m);

  /// Like the constructor, but rejects inputs with max |H - H*| > tol.
  static HermitianMatrix checked(const Matrix& m, double tol);
  static HermitianMatrix zero(Eigen::Index order);
  static HermitianMatrix identity(Eigen::Index order);

  const Matrix& matrix() const { return m_; }
  Eigen::Index order() const { return m_.rows(); }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  double trace() const { return m_.trace().real(); }
  double norm() const { return m_.norm(); }

  HermitianMatrix operator+(const HermitianMatrix& o) const;
  HermitianMatrix operator-(const HermitianMatrix& o) const;
  HermitianMatrix operator*(double s) const;
  friend HermitianMatrix operator*(double s, const HermitianMatrix& h) { return h * s; }

 private:
  Matrix m_;
};

/// Real Frobenius inner product Re tr(A* B).
double inner(const HermitianMatrix& a, const HermitianMatrix& b);

/// Positive semidefinite Hermitian matrix of unit trace on a given factorization.
class DensityMatrix {
 public:
  static constexpr double kTraceTolerance = 1e-10;
  static constexpr double kPsdTolerance = 1e-10;

  /// Throws PreconditionError if the trace or smallest eigenvalue is off, and
  /// DimensionError if the order does not match dims.total().
  DensityMatrix(HermitianMatrix h, SystemDims dims);
  /// Single-system state (dims = {order}).
  explicit DensityMatrix(HermitianMatrix h);

  const HermitianMatrix& hermitian() const { return h_; }
  const Matrix& matrix() const { return h_.matrix(); }
  const SystemDims& dims() const { return dims_; }
  Eigen::Index order() const { return h_.order(); }

 private:
  HermitianMatrix h_;
  SystemDims dims_;
};

/// Real spectrum sorted in nonincreasing order.
class Spectrum {
 public:
  Spectrum() = default;
  /// Sorts the values descending.
  explicit Spectrum(RealVector values);
  explicit Spectrum(const std::vector<double>& values);

  const RealVector& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_(i); }
  double sum() const { return values_.sum(); }

  /// Nonnegative (within tol) and summing to one (within tol).
  bool is_probability(double tol = 1e-10) const;
  /// Copy rescaled to unit sum.
  Spectrum normalized() const;

 private:
  RealVector values_;
};

/// U diag(values) U*, values nonincreasing, columns of U orthonormal.
struct EigDecomposition {
  Matrix vectors;
  RealVector values;

  Matrix reconstruct() const;
};

Matrix kron(const Matrix& a, const Matrix& b);

/// tr over the complement of `keep`; the output factors follow the ascending
/// order of `keep`. Throws DimensionError on an empty or invalid `keep`.
HermitianMatrix partial_trace(const HermitianMatrix& rho, const SystemDims& dims,
                              const Subsystems& keep);

/// Permutation matrix P with P (a_1 (x) ... (x) a_k) P^T equal to the product
/// of the factors outside `keep` followed by the factors in `keep`.
RealMatrix subsystem_permutation(const SystemDims& dims, const Subsystems& keep);

/// The adjoint of partial_trace: block acts as `block` on `keep` and as the
/// identity elsewhere, i.e. P^T (I (x) block) P. An empty `keep` takes a 1x1
/// block and returns block(0,0) * I.
Matrix embed_on_subsystems(const Matrix& block, const SystemDims& dims, const Subsystems& keep);

/// Descending eigendecomposition. Each eigenvector's largest-magnitude entry is
/// made real positive. Within a cluster of eigenvalues closer than
/// kDegeneracyTolerance the backend order of the pairs is kept, so values there
/// may be out of order by at most the cluster width.
EigDecomposition hermitian_eig(const HermitianMatrix& h);

/// #{ lambda_i > 1e-10 * max(1, lambda_1) }.
std::size_t numerical_rank(const RealVector& descending_values);
std::size_t numerical_rank(const HermitianMatrix& h);

/// Haar-distributed unitary (QR of a complex Ginibre matrix with the phase
/// of R's diagonal divided out).
Matrix random_unitary(std::size_t n, std::mt19937_64& rng);
Matrix random_unitary(std::size_t n, std::uint64_t seed);

/// Flat-Dirichlet probability vector (normalized i.i.d. exponentials), sorted descending.
Spectrum random_probability_vector(std::size_t n, std::mt19937_64& rng);
Spectrum random_probability_vector(std::size_t n, std::uint64_t seed);

/// U diag(p) U* with U Haar and p a random probability vector.
DensityMatrix random_density(const SystemDims& dims, std::mt19937_64& rng);
DensityMatrix random_density(const SystemDims& dims, std::uint64_t seed);

}  // namespace qmarg
