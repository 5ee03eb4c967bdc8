#pragma once

#include <functional>
#include <limits>
#include <utility>
#include <optional>

#include "fgd/matrix.hpp"

namespace fgd {

struct RestrictedConvexity {
  double m = 0.0;  // restricted strong convexity constant
  int rank = 0;    // rank at which it was established / measured
};

// Gradient oracle over the PSD cone. Gradients are returned pre-symmetrized;
// the chain-rule factor 2 of d/dU f(UU^T) is absorbed into the step size, so
// factored_gradient() below returns grad_f(UU^T) * U.
struct Objective {
  std::function<double(const SymMatrix&)> value;
  std::function<SymMatrix(const SymMatrix&)> gradient;
  // optional fused evaluation; shares work (e.g. the sensing residual) when
  // both quantities are needed at the same point
  std::function<std::pair<double, SymMatrix>(const SymMatrix&)> value_and_gradient;
  double smoothness = 1.0;         // M; restricted estimate for sensing losses
  double smoothness_global = 0.0;  // global Lipschitz constant; 0 means equal
                                   // to smoothness. X-space methods step with
                                   // this one.
  std::optional<RestrictedConvexity> rsc;

  double global_m() const {
    return smoothness_global > 0.0 ? smoothness_global : smoothness;
  }

  std::pair<double, SymMatrix> eval_both(const SymMatrix& x) const {
    if (value_and_gradient) return value_and_gradient(x);
    return {value(x), gradient(x)};
  }

  double kappa() const {
    return rsc && rsc->m > 0.0 ? smoothness / rsc->m
                                : std::numeric_limits<double>::infinity();
  }
};

// f(X) = 1/2 ||X - X_target||_F^2, M = m = 1.
Objective quad_loss(SymMatrix x_target);

// f(X) = sum_ij phi_ij(X_ij) with phi_ij(x) = 1/2 w_ij (x - T_ij)^2 and
// symmetric weights w_ij in [m_lo, m_hi].
struct SeparableObjective {
  SymMatrix target;
  SymMatrix weights;
  double weight_lo = 0.0;
  double weight_hi = 0.0;

  double value(const SymMatrix& x) const;
  SymMatrix gradient(const SymMatrix& x) const;
  Objective as_objective() const;
};

SeparableObjective separable_quad(SymMatrix x_target, SymMatrix weights,
                                  double weight_lo, double weight_hi);

// grad_f(gram(U)) * U; equals half the true dg/dU for g(U) = f(UU^T).
Factor factored_gradient(const Objective& obj, const Factor& u);

}  // namespace fgd
