#include "fgd/objective.hpp"

#include <memory>
#include <stdexcept>

namespace fgd {

Objective quad_loss(SymMatrix x_target) {
  Objective obj;
  auto target = std::make_shared<SymMatrix>(std::move(x_target));
  obj.value = [target](const SymMatrix& x) {
    SymMatrix d = x;
    d -= *target;
    return 0.5 * inner(d, d);
  };
  obj.gradient = [target](const SymMatrix& x) {
    SymMatrix g = x;
    g -= *target;
    return g;
  };
  obj.smoothness = 1.0;
  obj.rsc = RestrictedConvexity{1.0, target->n()};
  return obj;
}

double SeparableObjective::value(const SymMatrix& x) const {
  if (x.n() != target.n()) throw std::invalid_argument("SeparableObjective: shape mismatch");
  double acc = 0.0;
  for (int j = 0; j < x.n(); ++j)
    for (int i = 0; i < x.n(); ++i) {
      const double d = x(i, j) - target(i, j);
      acc += 0.5 * weights(i, j) * d * d;
    }
  return acc;
}

SymMatrix SeparableObjective::gradient(const SymMatrix& x) const {
  if (x.n() != target.n()) throw std::invalid_argument("SeparableObjective: shape mismatch");
  SymMatrix g(x.n());
  for (int j = 0; j < x.n(); ++j)
    for (int i = 0; i <= j; ++i)
      g.set(i, j, weights(i, j) * (x(i, j) - target(i, j)));
  return g;
}

Objective SeparableObjective::as_objective() const {
  Objective obj;
  auto self = std::make_shared<SeparableObjective>(*this);
  obj.value = [self](const SymMatrix& x) { return self->value(x); };
  obj.gradient = [self](const SymMatrix& x) { return self->gradient(x); };
  obj.smoothness = weight_hi;
  obj.rsc = RestrictedConvexity{weight_lo, target.n()};
  return obj;
}

SeparableObjective separable_quad(SymMatrix x_target, SymMatrix weights,
                                  double weight_lo, double weight_hi) {
  if (x_target.n() != weights.n())
    throw std::invalid_argument("separable_quad: shape mismatch");
  if (!(weight_lo > 0.0) || !(weight_hi >= weight_lo))
    throw std::invalid_argument("separable_quad: need 0 < m <= M");
  for (int j = 0; j < weights.n(); ++j)
    for (int i = 0; i <= j; ++i) {
      const double w = weights(i, j);
      if (w < weight_lo || w > weight_hi)
        throw std::invalid_argument("separable_quad: weight outside [m, M]");
    }
  return SeparableObjective{std::move(x_target), std::move(weights), weight_lo,
                            weight_hi};
}

Factor factored_gradient(const Objective& obj, const Factor& u) {
  return apply(obj.gradient(gram(u)), u);
}

}  // namespace fgd
