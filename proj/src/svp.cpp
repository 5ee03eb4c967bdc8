#include "fgd/svp.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "fgd/dist.hpp"
#include "fgd/eig.hpp"

namespace fgd {
namespace {

SymMatrix truncate_top_r_positive(const SymMatrix& y, int r) {
  const SpectralDecomp d = spectral_decomp(y);
  std::vector<int> keep;
  for (int k = 0; k < r && k < d.n(); ++k)
    if (d.eigenvalues[k] > 0.0) keep.push_back(k);
  return reconstruct(d, keep);
}

}  // namespace

SymMatrix svp_step(const Objective& obj, const SymMatrix& x, const SvpConfig& cfg) {
  if (cfg.rank < 1) throw std::invalid_argument("svp_step: rank must be >= 1");
  const double eta = (cfg.eta > 0.0) ? cfg.eta : 1.0 / obj.global_m();
  SymMatrix y = obj.gradient(x);
  y *= -eta;
  y += x;
  return truncate_top_r_positive(y, cfg.rank);
}

SvpResult svp_run(const Objective& obj, SymMatrix x0, const SvpConfig& cfg,
                  const Reference* reference) {
  if (cfg.tol <= 0.0) throw std::invalid_argument("SvpConfig: tol must be > 0");

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  SvpResult result;
  SymMatrix x = truncate_top_r_positive(x0, cfg.rank);
  const double x0_norm = std::max(frobenius_norm(x), 1e-30);
  const double eta = (cfg.eta > 0.0) ? cfg.eta : 1.0 / obj.global_m();

  double ref_norm = 0.0;
  if (reference) ref_norm = frobenius_norm(reference->x_star);

  // one fused objective evaluation per iteration, shared with the trace
  double fx = 0.0;
  SymMatrix grad;
  auto evaluate = [&](const SymMatrix& at) {
    if (cfg.trace_level > 0) {
      auto [v, g] = obj.eval_both(at);
      fx = v;
      return g;
    }
    return obj.gradient(at);
  };
  grad = evaluate(x);

  auto record_state = [&](int k, const SymMatrix& xk, const SymMatrix& gk) {
    if (cfg.trace_level <= 0) return;
    (void)xk;
    TraceRecord rec;
    rec.iter = k;
    rec.f = fx;
    rec.grad_factor_norm = frobenius_norm(gk);
    if (reference) {
      SymMatrix diff = xk;
      diff -= reference->x_star;
      rec.rel_err = (ref_norm > 0.0) ? frobenius_norm(diff) / ref_norm
                                     : frobenius_norm(diff);
    }
    rec.eta = eta;
    rec.elapsed_s = elapsed();
    result.trace.records.push_back(rec);
  };

  record_state(0, x, grad);

  for (int k = 0; k < cfg.max_iters; ++k) {
    SymMatrix moved = grad * (-eta);
    moved += x;
    SymMatrix next = truncate_top_r_positive(moved, cfg.rank);
    if (!all_finite(next) || frobenius_norm(next) > 1e8 * x0_norm) {
      result.status = SolveStatus::Diverged;
      result.x = std::move(x);
      result.iterations = k;
      return result;
    }

    SymMatrix delta = next;
    delta -= x;
    const double change = frobenius_norm(delta);
    const double next_norm = frobenius_norm(next);

    x = std::move(next);
    grad = evaluate(x);
    record_state(k + 1, x, grad);

    if (change < cfg.tol * next_norm || change == 0.0) {
      result.status = SolveStatus::Converged;
      result.x = std::move(x);
      result.iterations = k + 1;
      return result;
    }
  }

  result.status = SolveStatus::Unconverged;
  result.x = std::move(x);
  result.iterations = cfg.max_iters;
  return result;
}

}  // namespace fgd
