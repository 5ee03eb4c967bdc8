#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "fgd/matrix.hpp"
#include "fgd/objective.hpp"
#include "fgd/solver.hpp"

namespace fgd {

struct InitReport {
  SymMatrix x0;
  Factor u0;
  std::optional<double> dist_to_ref;    // DIST(U0, U*_r) when a reference is given
  std::optional<double> gamma_bound;    // init distance bound (needs kappa + reference)
  bool criterion_met = true;            // pgd-switch proximity criterion reached
  int pgd_iterations = 0;

  void write_summary(const std::string& path) const;
};

// X0 = P_+(-grad_f(0)) / ||grad_f(0) - grad_f(e1 e1^T)||_F, then U0 from the
// rank-r truncation of X0. Throws when the scaling denominator vanishes.
InitReport init_spectral(const Objective& obj, int n, int r,
                         const Reference* reference = nullptr);

// Projected gradient descent X+ = P_+(X - (1/M) grad_f(X)) from the spectral
// X0 until ||X+ - X||_F <= (c / (kappa sqrt(r) tau(X_r))) sigma_r(X) with
// c = 1/10, capped at 10 kappa log(1/inner_tol) iterations. Requires a
// finite condition number (rsc set).
InitReport init_pgd_switch(const Objective& obj, int n, int r, double inner_tol,
                           const Reference* reference = nullptr);

// i.i.d. N(0, scale^2 / n) entries; scale 0 gives the zero factor.
Factor init_random(int n, int r, double scale, uint64_t seed);

}  // namespace fgd
