#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fgd/matrix.hpp"
#include "fgd/objective.hpp"

namespace fgd {

enum class Ensemble { Gaussian, Rademacher, Explicit };

// Linear map A : SymMatrix -> R^m with y_i = <A_i, X> and true adjoint
// A^*(v) = sum_i v_i A_i.
//
// Storage: the Gaussian ensemble caches packed upper-triangle rows
// (N(0, 1/m) entries mirrored). The Rademacher ensemble (entries +-1/sqrt(m))
// is kept bit-packed, one sign bit per upper-triangle entry, so desk-scale
// instances up to n = 512, m = 6nr fit in a few hundred MB. Both are fully
// determined by (n, m, seed) and regenerate bitwise-identically.
class SensingOperator {
 public:
  static SensingOperator gaussian(int n, int m, uint64_t seed);
  static SensingOperator rademacher(int n, int m, uint64_t seed);
  static SensingOperator from_matrices(std::vector<SymMatrix> mats);

  int n() const { return n_; }
  int m() const { return m_; }
  uint64_t seed() const { return seed_; }
  Ensemble ensemble() const { return ensemble_; }

  std::vector<double> forward(const SymMatrix& x) const;
  SymMatrix adjoint(const std::vector<double>& v) const;

  // Materializes A_i; intended for tests and small instances.
  SymMatrix measurement_matrix(int i) const;

  // lambda_max of Z -> A^*(A(Z)) via a fixed number of power iterations
  // (deterministic seeded start).
  double estimate_smoothness(int iters = 20) const;

  // Restricted counterpart: max Rayleigh quotient of A^*A over seeded random
  // rank-`rank` probes, tracking the curvature over low-rank directions
  // (~ 1 + delta on normalized ensembles) instead of the much larger global
  // lambda_max.
  double estimate_restricted_smoothness(int rank, int probes = 20) const;

  // Monte-Carlo minimum of ||A(Z)||^2 / ||Z||_F^2 over random symmetric Z of
  // rank <= 2*rank (differences of rank-`rank` grams). An empirical stand-in
  // for the restricted strong convexity constant.
  double probe_restricted_curvature(int rank, int probes, uint64_t seed) const;

  // Fixture file: "FGDSENSE <ensemble> n m seed" header plus the y vector;
  // the A_i are regenerated from the seed.
  void save_fixture(const std::string& path, const std::vector<double>& y) const;
  static std::pair<SensingOperator, std::vector<double>> load_fixture(
      const std::string& path);

 private:
  SensingOperator() = default;
  void build_gaussian();
  void build_rademacher();
  size_t packed_len() const { return static_cast<size_t>(n_) * (n_ + 1) / 2; }
  size_t words_per_row() const { return (packed_len() + 63) / 64; }

  int n_ = 0;
  int m_ = 0;
  uint64_t seed_ = 0;
  Ensemble ensemble_ = Ensemble::Explicit;
  double entry_scale_ = 1.0;          // 1/sqrt(m) for the random ensembles
  std::vector<double> dense_rows_;    // m x packed_len, row-major (Gaussian/Explicit)
  std::vector<uint64_t> sign_rows_;   // m x words_per_row (Rademacher)
};

// f(X) = 1/2 ||y - A(X)||^2 with gradient -A^*(y - A(X)). With
// restricted_rank > 0 the smoothness constant is the rank-2r restricted
// estimate and a measured restricted strong convexity constant is attached;
// otherwise the global lambda_max(A^*A) is used.
Objective sensing_loss(std::shared_ptr<const SensingOperator> op,
                       std::vector<double> y, int restricted_rank = 0);

}  // namespace fgd
