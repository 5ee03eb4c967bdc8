#pragma once

#include <utility>
#include <vector>

#include "fgd/matrix.hpp"

namespace fgd {

// Full eigendecomposition A = V diag(vals) V^T with vals sorted descending
// and each eigenvector's largest-magnitude entry made positive.
struct SpectralDecomp {
  std::vector<double> eigenvalues;   // length n, descending
  std::vector<double> eigenvectors;  // n x n, column-major, orthonormal columns

  int n() const { return static_cast<int>(eigenvalues.size()); }
  double vec(int i, int k) const {
    return eigenvectors[static_cast<size_t>(i) + static_cast<size_t>(k) * n()];
  }
};

// Cyclic Jacobi for n <= 64, Householder tridiagonalization + implicit-shift
// QL above. Throws std::runtime_error if the iteration cap is exceeded.
SpectralDecomp spectral_decomp(const SymMatrix& a);

// Projection onto the PSD cone: keep strictly positive eigenpairs.
SymMatrix psd_project(const SymMatrix& a);

// Top-r eigenpair truncation A_r plus a factor U with gram(U) = A_r.
// Requires the retained eigenvalues to be nonnegative up to -1e-12*||A||_2.
std::pair<SymMatrix, Factor> rank_r_truncate(const SymMatrix& a, int r);

// max_i |lambda_i(A)| by power iteration. Start vector is all-ones plus a
// fixed seeded jitter (breaks exact orthogonality to the top eigenspace);
// deterministic. Throws on iteration cap.
double spectral_norm(const SymMatrix& a, double tol = 1e-8);

// Rebuild sum_{i in keep} lambda_i v_i v_i^T.
SymMatrix reconstruct(const SpectralDecomp& d, const std::vector<int>& keep);

}  // namespace fgd
