#pragma once

// Direct constructions of bipartite states with prescribed marginals rho1
// (subsystem 1) and rho2 (subsystem 2). Every construction works in the
// eigenbases of the marginals and returns a state on dims (n1, n2).

#include <utility>
#include <vector>

#include "qmarg/tensorcore.hpp"

namespace qmarg {

/// rho1 = sum C_i and rho2 = sum C~_i with each pair (C_i, C~_i) positive
/// semidefinite and isospectral. weights[i] = tr C_i = tr C~_i.
struct IsospectralDecomposition {
  std::vector<std::pair<HermitianMatrix, HermitianMatrix>> pairs;
  std::vector<double> weights;
  /// The vectors w_i whose outer products sum to the constructed state.
  std::vector<Vector> vectors;
};

/// State returned together with the decomposition it was assembled from.
struct DecomposedState {
  DensityMatrix state;
  IsospectralDecomposition decomposition;
};

/// Rank-one state w w* with w = sum_i sqrt(gamma_i) x_i (x) y_i, pairing the
/// eigenvectors of rho1 and rho2 by descending eigenvalue. Throws
/// PreconditionError if the nonzero spectra differ by more than `tol`.
DensityMatrix pure_state_from_isospectral(const DensityMatrix& rho1, const DensityMatrix& rho2,
                                          double tol = 1e-8);

/// Closed interval of ranks a construction can realize.
struct RankInterval {
  std::size_t low;
  std::size_t high;
};

/// [max(r1, r2), r1 + r2 - 1].
RankInterval roots_of_unity_interval(const DensityMatrix& rho1, const DensityMatrix& rho2);
/// [max(r1, r2), r1 * r2].
RankInterval rank_sweep_interval(const DensityMatrix& rho1, const DensityMatrix& rho2);

/// Average of k product pure states built from the k-th roots of unity:
/// z_i = (U u_i (x) V v_i) / sqrt(k) with u_i[j] = omega^(i j) sqrt(a_j).
/// The result has rank exactly k for k in roots_of_unity_interval().
DensityMatrix rank_k_roots_of_unity(const DensityMatrix& rho1, const DensityMatrix& rho2,
                                    std::size_t k);

/// A state of rank exactly k for any k in rank_sweep_interval(): the smallest
/// eigenvalue of the larger marginal is split off as a product block and the
/// remainder is solved recursively, down to rank_k_roots_of_unity().
DensityMatrix rank_sweep(const DensityMatrix& rho1, const DensityMatrix& rho2, std::size_t k);

/// d with eig(diag(a) - d d^T) = b, for interlacing
/// a_1 >= b_1 >= a_2 >= ... >= a_k >= b_k >= 0 (both descending).
/// Equal pairs a_i = b_i (which includes zero and repeated a-entries) are
/// deflated with d_i = 0; the rest use the secular product formula.
/// Throws PreconditionError naming the first violated inequality.
RealVector rank_one_downdate(const RealVector& a, const RealVector& b);

/// Peels off isospectral pairs built from interlacing chains of the current
/// spectra until rho1 is exhausted; k <= max(rank rho1, rank rho2).
DecomposedState interlace_decomposition(const DensityMatrix& rho1, const DensityMatrix& rho2);

/// Greedy matching of descending spectra, min(a_j, b_j) per round. The
/// vectors w_i are mutually orthogonal with |w_i|^2 = tr C_i, so the output
/// spectrum is {tr C_i} and its largest eigenvalue is sum_j min(a_j, b_j),
/// the maximum spectral norm over all states with these marginals.
DecomposedState greedy_minmatch(const DensityMatrix& rho1, const DensityMatrix& rho2);

}  // namespace qmarg
