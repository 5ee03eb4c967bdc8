#pragma once

#include <string>
#include <vector>

#include "fgd/matrix.hpp"
#include "fgd/objective.hpp"
#include "fgd/solver.hpp"
#include "fgd/trace.hpp"

namespace fgd {

// Each check is normalized to the form LHS <= RHS; margin = RHS - LHS, so a
// nonnegative margin means the inequality is satisfied.
struct AuditCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  std::string context;
};

struct AuditReport {
  std::vector<AuditCheck> checks;

  void add(std::string name, double lhs, double rhs, std::string context = "");
  bool all_satisfied(double slack = 0.0) const;
  double worst_margin() const;
  void write_csv(const std::string& path) const;
  void append(const AuditReport& other);
};

enum class BallMode { A1, A2 };

// (A1): DIST(U, U*_r) <= rho sigma_r(U*_r), rho = (1/100) sigma_r(X*)/sigma_1(X*)
// (A2): same with rho' = rho / kappa. kappa comes from the objective's
// measured constants when mode == A2.
AuditReport audit_ball_membership(const Factor& u, const Factor& u_star_r,
                                  const SymMatrix& x_star, BallMode mode,
                                  double kappa = 1.0);

// Upper/lower Frobenius sandwich between ||gram(U) - X*_r||_F and DIST, plus
// the sigma-perturbation bounds on sigma_1(U), sigma_r(U). Out-of-ball inputs
// are evaluated informationally with a flagged context.
AuditReport audit_sandwich(const Factor& u, const Factor& u_star_r,
                           const SymMatrix& x_star);

// Step-size equivalence: eta-hat >= (5/6) eta and (10/11) eta* <= eta <=
// (11/10) eta*, with eta at X0, eta-hat at U, eta* at X*.
AuditReport audit_step_equivalence(const Objective& obj, const Factor& u,
                                   const SymMatrix& x0, const SymMatrix& x_star);

// Descent lemma, strongly convex form:
//   <grad_f(X)U, U - U*_r R> >= (2/3) eta ||grad_f(X)U||_F^2
//     + (3m/20) sigma_r(X*) DIST^2 - (M/4) ||X* - X*_r||_F^2
// plus the smooth-only form (1/2) eta ||grad_f(X)U||_F^2, recorded only when
// its precondition f(X+) >= f(X*_r) holds (the predicate itself is recorded).
AuditReport audit_descent(const Objective& obj, const Factor& u,
                          const Factor& u_star_r, const SymMatrix& x_star,
                          const StepSize& eta);

// nr x nr Hessian of U -> grad_f(UU^T) U at u_star, by central finite
// differences. Refuses nr > 64.
SymMatrix assemble_factored_hessian(const Objective& obj, const Factor& u_star,
                                    double h);

// Separable-Hessian spectrum diagnostic: sigma_max(H) <= 2 M ||X*||_2 +
// ||grad_f(X*)||_2 + tol and y^T H y >= m sigma_r(X*) - tol for random y with
// mat(y)^T U* = 0.
AuditReport audit_hessian_separable(const SeparableObjective& sep,
                                    const Factor& u_star, int probes = 20,
                                    uint64_t seed = 7);

// Trajectory audit: per-iteration DIST^2 contraction against
// alpha = 1 - m sigma_r(X*) / (c (M ||X*||_2 + ||grad_f(X*)||_2)) for both
// both constants c = 64 and c = 208 (the looser form is recorded only
// when the tighter one fails), plus the sublinear f-gap envelope.
AuditReport audit_contraction_rate(const IterationTrace& trace,
                                   const Objective& obj,
                                   const SymMatrix& x_star,
                                   const Factor& u_star_r);

}  // namespace fgd
