#include "fgd/solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "fgd/dist.hpp"
#include "fgd/eig.hpp"

namespace fgd {
namespace {

// Orthonormal basis of col(U) from the r x r decomposition of U^T U.
// Returns the basis columns (n x k, k = numerical rank of U) and sigma_1(U)^2.
struct ThinBasis {
  Factor q;
  double top_sq = 0.0;
  int cols = 0;
};

ThinBasis column_basis(const Factor& u) {
  const int r = u.r();
  const std::vector<double> g = cross_gram(u, u);  // U^T U
  SymMatrix utu(r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i <= j; ++i)
      utu.set(i, j, g[static_cast<size_t>(i) + static_cast<size_t>(j) * r]);
  const SpectralDecomp d = spectral_decomp(utu);

  ThinBasis out;
  out.top_sq = std::max(d.eigenvalues[0], 0.0);
  const double tol = out.top_sq * 1e-26;
  int k = 0;
  for (int i = 0; i < r; ++i)
    if (d.eigenvalues[i] > tol && d.eigenvalues[i] > 0.0) ++k;
  if (k == 0) {
    out.cols = 0;
    return out;
  }
  out.q = Factor(u.n(), k);
  for (int c = 0; c < k; ++c) {
    const double inv = 1.0 / std::sqrt(d.eigenvalues[c]);
    double* qc = out.q.col(c);
    for (int j = 0; j < r; ++j) {
      const double w = d.vec(j, c) * inv;
      if (w == 0.0) continue;
      const double* ucol = u.col(j);
      for (int i = 0; i < u.n(); ++i) qc[i] += ucol[i] * w;
    }
  }
  out.cols = k;
  return out;
}

// ||B||_2 for an n x k block via the k x k Gram eigendecomposition.
double block_spectral_norm(const Factor& b) {
  const int k = b.r();
  const std::vector<double> g = cross_gram(b, b);
  SymMatrix btb(k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i <= j; ++i)
      btb.set(i, j, g[static_cast<size_t>(i) + static_cast<size_t>(j) * k]);
  const SpectralDecomp d = spectral_decomp(btb);
  return std::sqrt(std::max(d.eigenvalues[0], 0.0));
}

double sum_sq(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

StepSize step_size_fixed(const Objective& obj, const SymMatrix& x0) {
  const double nx = spectral_norm(x0, 1e-8);
  const double ng = spectral_norm(obj.gradient(x0), 1e-8);
  const double denom = obj.smoothness * nx + ng;
  if (denom <= 0.0) return {1.0 / (16.0 * obj.smoothness), StepProvenance::FixedAtX0};
  return {1.0 / (16.0 * denom), StepProvenance::FixedAtX0};
}

StepSize step_size_adaptive(const Objective& obj, const Factor& u) {
  const ThinBasis basis = column_basis(u);
  const double nx = basis.top_sq;  // ||UU^T||_2 = sigma_1(U)^2
  double ng = 0.0;
  if (basis.cols > 0) {
    const SymMatrix grad = obj.gradient(gram(u));
    ng = block_spectral_norm(apply(grad, basis.q));
  }
  const double denom = obj.smoothness * nx + ng;
  if (denom <= 0.0) return {1.0 / (16.0 * obj.smoothness), StepProvenance::AdaptiveAtXk};
  return {1.0 / (16.0 * denom), StepProvenance::AdaptiveAtXk};
}

Factor fgd_step(const Objective& obj, const Factor& u, const StepSize& eta) {
  Factor g = factored_gradient(obj, u);
  g *= -eta.eta;
  g += u;
  return g;
}

Factor project_constraint(Factor u, const FrobeniusBall& ball) {
  if (ball.radius <= 0.0) throw std::invalid_argument("project_constraint: radius must be > 0");
  const double nrm = frobenius_norm(u);
  if (nrm <= ball.radius) return u;
  u *= ball.radius / nrm;
  return u;
}

SolveResult run(const Objective& obj, Factor u0, const SolverConfig& cfg,
                const Reference* reference) {
  if (cfg.tol <= 0.0 || cfg.rank < 1)
    throw std::invalid_argument("SolverConfig: tol > 0 and rank >= 1 required");
  if (u0.r() != cfg.rank) throw std::invalid_argument("run: U0 rank mismatch");
  if (cfg.constraint && cfg.constraint->radius <= 0.0)
    throw std::invalid_argument("SolverConfig: ball radius must be > 0");

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  SolveResult result;
  Factor u = cfg.constraint ? project_constraint(std::move(u0), *cfg.constraint)
                            : std::move(u0);
  const double u0_norm = frobenius_norm(u);

  StepSize eta{cfg.step.value, StepProvenance::UserConstant};
  if (cfg.step.kind == StepRule::Kind::Fixed) eta = step_size_fixed(obj, gram(u));
  if (cfg.step.kind == StepRule::Kind::Adaptive) eta = step_size_adaptive(obj, u);
  if (!(eta.eta > 0.0) || !std::isfinite(eta.eta))
    throw std::invalid_argument("run: step size must be positive and finite");

  double ref_norm = 0.0;
  if (reference) ref_norm = frobenius_norm(reference->x_star);

  // The stopping criterion works through r x r blocks, O(n r^2) per
  // iteration. With D = U+ - U,
  //   ||U+ U+^T - U U^T||_F^2 = 2 tr(P^2) + 2 <S, Q> + 4 <P, Q> + ||Q||_F^2
  // for P = U^T D, Q = D^T D, S = U^T U. Every term is O(||D||^2), so small
  // changes are measured without the catastrophic cancellation the direct
  // ||U^T U||^2 + ||V^T V||^2 - 2||U^T V||^2 expansion suffers near
  // convergence. The gradient is evaluated exactly once per iteration and
  // shared between the step and the trace record.
  std::vector<double> utu = cross_gram(u, u);
  SymMatrix x = gram(u);
  double fx = 0.0;
  Factor grad_u;
  auto evaluate = [&](const SymMatrix& at) {
    if (cfg.trace_level > 0) {
      auto [v, g] = obj.eval_both(at);
      fx = v;
      return apply(g, u);
    }
    return apply(obj.gradient(at), u);
  };
  grad_u = evaluate(x);

  auto record_state = [&](int k, const Factor& uk, const SymMatrix& xk,
                          const Factor& gu, double eta_used) {
    if (cfg.trace_level <= 0) return;
    (void)xk;
    TraceRecord rec;
    rec.iter = k;
    rec.f = fx;
    rec.grad_factor_norm = frobenius_norm(gu);
    if (reference) {
      rec.dist = dist_value(uk, reference->u_star);
      SymMatrix diff = xk;
      diff -= reference->x_star;
      rec.rel_err = (ref_norm > 0.0) ? frobenius_norm(diff) / ref_norm
                                     : frobenius_norm(diff);
    }
    rec.eta = eta_used;
    rec.elapsed_s = elapsed();
    result.trace.records.push_back(rec);
  };

  record_state(0, u, x, grad_u, eta.eta);

  for (int k = 0; k < cfg.max_iters; ++k) {
    if (cfg.step.kind == StepRule::Kind::Adaptive && k > 0 &&
        cfg.adaptive_refresh > 0 && k % cfg.adaptive_refresh == 0) {
      eta = step_size_adaptive(obj, u);
    }

    Factor next = grad_u * (-eta.eta);
    next += u;
    if (cfg.constraint) next = project_constraint(std::move(next), *cfg.constraint);

    if (!all_finite(next) || frobenius_norm(next) > 1e8 * std::max(u0_norm, 1e-30)) {
      result.status = SolveStatus::Diverged;
      result.factor = std::move(u);
      result.iterations = k;
      return result;
    }

    Factor step_diff = next;
    step_diff -= u;
    const int r = u.r();
    const std::vector<double> p = cross_gram(u, step_diff);       // U^T D
    const std::vector<double> q = cross_gram(step_diff, step_diff);  // D^T D
    double tr_pp = 0.0, sq = 0.0, pq = 0.0, qq = 0.0;
    for (int j = 0; j < r; ++j)
      for (int i = 0; i < r; ++i) {
        const size_t ij = static_cast<size_t>(i) + static_cast<size_t>(j) * r;
        const size_t ji = static_cast<size_t>(j) + static_cast<size_t>(i) * r;
        tr_pp += p[ij] * p[ji];
        sq += utu[ij] * q[ij];
        pq += p[ij] * q[ij];
        qq += q[ij] * q[ij];
      }
    const double change_sq = std::max(2.0 * tr_pp + 2.0 * sq + 4.0 * pq + qq, 0.0);

    const std::vector<double> ntn = cross_gram(next, next);
    const double next_sq = sum_sq(ntn);

    u = std::move(next);
    utu = ntn;
    x = gram(u);
    grad_u = evaluate(x);
    record_state(k + 1, u, x, grad_u, eta.eta);

    const double change = std::sqrt(change_sq);
    if (change < cfg.tol * std::sqrt(next_sq) || change == 0.0) {
      result.status = SolveStatus::Converged;
      result.factor = std::move(u);
      result.iterations = k + 1;
      return result;
    }
  }

  result.status = SolveStatus::Unconverged;
  result.factor = std::move(u);
  result.iterations = cfg.max_iters;
  return result;
}

}  // namespace fgd
