#pragma once

#include <optional>

#include "fgd/matrix.hpp"
#include "fgd/objective.hpp"
#include "fgd/trace.hpp"

namespace fgd {

enum class StepProvenance { FixedAtX0, AdaptiveAtXk, UserConstant };

struct StepSize {
  double eta = 0.0;
  StepProvenance provenance = StepProvenance::FixedAtX0;
};

struct StepRule {
  enum class Kind { Fixed, Adaptive, Constant } kind = Kind::Fixed;
  double value = 0.0;

  static StepRule fixed() { return {Kind::Fixed, 0.0}; }
  static StepRule adaptive() { return {Kind::Adaptive, 0.0}; }
  static StepRule constant(double c) { return {Kind::Constant, c}; }
};

struct FrobeniusBall {
  double radius = 1.0;
};

struct SolverConfig {
  int rank = 1;
  int max_iters = 500;
  double tol = 5e-6;  // stop when ||X+ - X||_F < tol * ||X+||_F
  StepRule step = StepRule::fixed();
  std::optional<FrobeniusBall> constraint;
  int trace_level = 1;       // 0 suppresses per-iteration records
  int adaptive_refresh = 1;  // recompute the adaptive step every k iterations
};

// Reference solution, used only for tracing and audits, never by the solver.
struct Reference {
  SymMatrix x_star;  // X*
  Factor u_star;     // U*_r
};

enum class SolveStatus { Converged, Unconverged, Diverged };

struct SolveResult {
  SolveStatus status = SolveStatus::Converged;
  Factor factor;  // final iterate (last finite iterate when diverged)
  IterationTrace trace;
  int iterations = 0;
};

// eta = 1 / (16 (M ||X0||_2 + ||grad_f(X0)||_2)); zero denominator falls back
// to 1 / (16 M) (optimum-at-zero case).
StepSize step_size_fixed(const Objective& obj, const SymMatrix& x0);

// eta_hat = 1 / (16 (M ||X||_2 + ||grad_f(X) Q_U Q_U^T||_2)) with X = gram(U)
// and Q_U an orthonormal basis of col(U). Both norms come from r x r
// decompositions of U^T U and (grad Q)^T (grad Q).
StepSize step_size_adaptive(const Objective& obj, const Factor& u);

// U+ = U - eta * grad_f(UU^T) U. One factored gradient, no decompositions.
Factor fgd_step(const Objective& obj, const Factor& u, const StepSize& eta);

// Frobenius-ball projection: rescale onto the sphere when outside.
Factor project_constraint(Factor u, const FrobeniusBall& ball);

SolveResult run(const Objective& obj, Factor u0, const SolverConfig& cfg,
                const Reference* reference = nullptr);

}  // namespace fgd
