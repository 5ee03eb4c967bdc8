#include "fgd/init.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "fgd/dist.hpp"
#include "fgd/eig.hpp"
#include "fgd/rng.hpp"

namespace fgd {
namespace {

// Distance bound of the gradient-at-zero initializer:
// gamma = 4 tau(X*_r) sqrt(2r) (sqrt(kappa^2 - 2/kappa + 1)
//         (srank(X*_r)^{1/2} + rho_tilde) + rho_tilde)
// with rho_tilde = ||X* - X*_r||_F / ||X*_r||_2.
std::optional<double> gamma_bound(const Objective& obj, int r,
                                  const Reference* reference) {
  if (!reference || !obj.rsc || !(obj.rsc->m > 0.0)) return std::nullopt;
  const SpectralDecomp d = spectral_decomp(reference->x_star);
  if (r > d.n()) return std::nullopt;
  const double s1 = d.eigenvalues[0];
  const double sr = d.eigenvalues[r - 1];
  if (!(sr > 0.0)) return std::nullopt;
  double head_sq = 0.0;
  double tail_sq = 0.0;
  for (int k = 0; k < d.n(); ++k) {
    const double l = d.eigenvalues[k];
    (k < r ? head_sq : tail_sq) += l * l;
  }
  const double tau = s1 / sr;
  const double kappa = obj.smoothness / obj.rsc->m;
  const double srank_half = std::sqrt(head_sq) / s1;  // ||X*_r||_F / ||X*_r||_2
  const double rho_tilde = std::sqrt(tail_sq) / s1;
  const double core = std::sqrt(kappa * kappa - 2.0 / kappa + 1.0);
  return 4.0 * tau * std::sqrt(2.0 * r) * (core * (srank_half + rho_tilde) + rho_tilde);
}

void attach_reference(InitReport& report, const Objective& obj, int r,
                      const Reference* reference) {
  if (!reference) return;
  report.dist_to_ref = dist_value(report.u0, reference->u_star);
  report.gamma_bound = gamma_bound(obj, r, reference);
}

}  // namespace

void InitReport::write_summary(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << std::setprecision(17);
  f << "x0_frobenius_norm " << frobenius_norm(x0) << "\n";
  f << "u0_frobenius_norm " << frobenius_norm(u0) << "\n";
  f << "dist_to_ref " << (dist_to_ref ? *dist_to_ref : std::nan("")) << "\n";
  f << "gamma_bound " << (gamma_bound ? *gamma_bound : std::nan("")) << "\n";
  f << "criterion_met " << (criterion_met ? 1 : 0) << "\n";
  f << "pgd_iterations " << pgd_iterations << "\n";
}

InitReport init_spectral(const Objective& obj, int n, int r,
                         const Reference* reference) {
  SymMatrix zero(n);
  SymMatrix probe(n);
  probe.set(0, 0, 1.0);  // e1 e1^T, a PSD probe point

  const SymMatrix g0 = obj.gradient(zero);
  SymMatrix diff = g0;
  diff -= obj.gradient(probe);
  const double denom = frobenius_norm(diff);
  if (denom == 0.0)
    throw std::runtime_error("init_spectral: degenerate objective, "
                             "grad_f(0) == grad_f(e1 e1^T)");

  SymMatrix neg = g0;
  neg *= -1.0;
  SymMatrix x0 = psd_project(neg);
  x0 *= 1.0 / denom;

  InitReport report;
  auto [xr, u0] = rank_r_truncate(x0, r);
  (void)xr;
  report.x0 = std::move(x0);
  report.u0 = std::move(u0);
  attach_reference(report, obj, r, reference);
  return report;
}

InitReport init_pgd_switch(const Objective& obj, int n, int r, double inner_tol,
                           const Reference* reference) {
  if (!obj.rsc || !(obj.rsc->m > 0.0))
    throw std::invalid_argument("init_pgd_switch: objective needs a finite kappa");
  if (!(inner_tol > 0.0) || inner_tol >= 1.0)
    throw std::invalid_argument("init_pgd_switch: inner_tol in (0, 1) required");

  const double kappa = obj.smoothness / obj.rsc->m;
  const double c = 0.1;
  const int cap = std::max(1, static_cast<int>(std::ceil(
                                10.0 * kappa * std::log(1.0 / inner_tol))));

  SymMatrix x = init_spectral(obj, n, r).x0;
  const double inv_m = 1.0 / obj.global_m();  // X-space steps need the global constant

  InitReport report;
  report.criterion_met = false;
  int iters = 0;
  for (; iters < cap; ++iters) {
    SymMatrix step = obj.gradient(x);
    step *= -inv_m;
    step += x;
    SymMatrix next = psd_project(step);

    SymMatrix delta = next;
    delta -= x;
    const double change = frobenius_norm(delta);

    const SpectralDecomp d = spectral_decomp(next);
    const double s1 = std::max(d.eigenvalues[0], 0.0);
    const double sr = (r <= d.n()) ? std::max(d.eigenvalues[r - 1], 0.0) : 0.0;
    x = std::move(next);

    if (sr > 0.0) {
      const double tau = s1 / sr;
      const double threshold = c / (kappa * std::sqrt(static_cast<double>(r)) * tau) * sr;
      if (change <= threshold) {
        report.criterion_met = true;
        ++iters;
        break;
      }
    }
  }

  auto [xr, u0] = rank_r_truncate(psd_project(x), r);
  (void)xr;
  report.x0 = std::move(x);
  report.u0 = std::move(u0);
  report.pgd_iterations = iters;
  attach_reference(report, obj, r, reference);
  return report;
}

Factor init_random(int n, int r, double scale, uint64_t seed) {
  if (scale < 0.0) throw std::invalid_argument("init_random: scale must be >= 0");
  Factor u(n, r);
  if (scale == 0.0) return u;
  Rng rng(seed);
  const double sd = scale / std::sqrt(static_cast<double>(n));
  for (size_t k = 0; k < u.size(); ++k) u.data()[k] = sd * rng.normal();
  return u;
}

}  // namespace fgd
