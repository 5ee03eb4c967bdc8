#pragma once

#include "fgd/matrix.hpp"
#include "fgd/objective.hpp"
#include "fgd/solver.hpp"
#include "fgd/trace.hpp"

namespace fgd {

// X-space projected gradient descent with a rank-r PSD truncation per
// iteration (SVP, SDP variant). Uses the same stopping criterion as the
// factored solver; eta = 0 selects the standard 1/M step.
struct SvpConfig {
  int rank = 1;
  double eta = 0.0;
  int max_iters = 500;
  double tol = 5e-6;
  int trace_level = 1;
};

struct SvpResult {
  SolveStatus status = SolveStatus::Converged;
  SymMatrix x;
  IterationTrace trace;
  int iterations = 0;
};

// X+ = top-r positive eigenpairs of (X - eta grad_f(X)).
SymMatrix svp_step(const Objective& obj, const SymMatrix& x, const SvpConfig& cfg);

SvpResult svp_run(const Objective& obj, SymMatrix x0, const SvpConfig& cfg,
                  const Reference* reference = nullptr);

}  // namespace fgd
