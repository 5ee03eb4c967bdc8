#include "fgd/audit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "fgd/dist.hpp"
#include "fgd/eig.hpp"
#include "fgd/rng.hpp"

namespace fgd {
namespace {

struct StarSpectrum {
  double sigma1 = 0.0;      // ||X*||_2
  double sigma_r = 0.0;     // sigma_r(X*)
  double tail_norm = 0.0;   // ||X* - X*_r||_F
};

StarSpectrum star_spectrum(const SymMatrix& x_star, int r) {
  const SpectralDecomp d = spectral_decomp(x_star);
  StarSpectrum s;
  s.sigma1 = std::max(d.eigenvalues[0], 0.0);
  s.sigma_r = (r <= d.n()) ? std::max(d.eigenvalues[r - 1], 0.0) : 0.0;
  double tail_sq = 0.0;
  for (int k = r; k < d.n(); ++k) tail_sq += d.eigenvalues[k] * d.eigenvalues[k];
  s.tail_norm = std::sqrt(tail_sq);
  return s;
}

// sigma_1(U) and sigma_r(U) from the r x r Gram spectrum.
std::pair<double, double> factor_extremes(const Factor& u) {
  const int r = u.r();
  const std::vector<double> g = cross_gram(u, u);
  SymMatrix utu(r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i <= j; ++i)
      utu.set(i, j, g[static_cast<size_t>(i) + static_cast<size_t>(j) * r]);
  const SpectralDecomp d = spectral_decomp(utu);
  return {std::sqrt(std::max(d.eigenvalues[0], 0.0)),
          std::sqrt(std::max(d.eigenvalues[r - 1], 0.0))};
}

double eta_at(const Objective& obj, const SymMatrix& x) {
  const double denom =
      obj.smoothness * spectral_norm(x, 1e-8) + spectral_norm(obj.gradient(x), 1e-8);
  return (denom > 0.0) ? 1.0 / (16.0 * denom) : 1.0 / (16.0 * obj.smoothness);
}

std::string iter_context(int k) {
  std::ostringstream os;
  os << "iter=" << k;
  return os.str();
}

}  // namespace

void AuditReport::add(std::string name, double lhs, double rhs, std::string context) {
  if (!std::isfinite(lhs) || !std::isfinite(rhs))
    throw std::runtime_error("AuditReport: non-finite value in check " + name);
  checks.push_back({std::move(name), lhs, rhs, rhs - lhs, std::move(context)});
}

bool AuditReport::all_satisfied(double slack) const {
  for (const AuditCheck& c : checks)
    if (c.margin < -slack) return false;
  return true;
}

double AuditReport::worst_margin() const {
  double worst = std::numeric_limits<double>::infinity();
  for (const AuditCheck& c : checks) worst = std::min(worst, c.margin);
  return worst;
}

void AuditReport::append(const AuditReport& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

void AuditReport::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "check,lhs,rhs,margin,context\n" << std::setprecision(17);
  for (const AuditCheck& c : checks)
    f << c.name << "," << c.lhs << "," << c.rhs << "," << c.margin << ","
      << c.context << "\n";
}

AuditReport audit_ball_membership(const Factor& u, const Factor& u_star_r,
                                  const SymMatrix& x_star, BallMode mode,
                                  double kappa) {
  if (u.n() != u_star_r.n() || u.r() != u_star_r.r())
    throw std::invalid_argument("audit_ball_membership: shape mismatch");
  const StarSpectrum s = star_spectrum(x_star, u.r());
  const auto [s1_star, sr_star] = factor_extremes(u_star_r);
  (void)s1_star;
  double rho = (s.sigma1 > 0.0) ? 0.01 * s.sigma_r / s.sigma1 : 0.0;
  if (mode == BallMode::A2) rho /= std::max(kappa, 1.0);

  AuditReport report;
  report.add(mode == BallMode::A1 ? "ball_A1" : "ball_A2",
             dist_value(u, u_star_r), rho * sr_star);
  return report;
}

AuditReport audit_sandwich(const Factor& u, const Factor& u_star_r,
                           const SymMatrix& x_star) {
  if (u.n() != u_star_r.n() || u.r() != u_star_r.r())
    throw std::invalid_argument("audit_sandwich: shape mismatch");

  const StarSpectrum s = star_spectrum(x_star, u.r());
  const auto [s1_star, sr_star] = factor_extremes(u_star_r);
  const double rho = (s.sigma1 > 0.0) ? 0.01 * s.sigma_r / s.sigma1 : 0.0;
  const double d = dist_value(u, u_star_r);
  const bool in_ball = d <= rho * sr_star;
  const std::string ctx = in_ball ? "" : "out-of-ball";

  SymMatrix diff = gram(u);
  diff -= gram(u_star_r);
  const double xgap = frobenius_norm(diff);

  AuditReport report;
  // ||X - X*_r||_F <= (2 + rho) ||U*_r||_2 DIST
  report.add("sandwich_upper", xgap, (2.0 + rho) * s1_star * d, ctx);
  // 2(sqrt(2)-1) sigma_r(X*) DIST^2 <= ||X - X*_r||_F^2
  report.add("sandwich_lower", 2.0 * (std::sqrt(2.0) - 1.0) * s.sigma_r * d * d,
             xgap * xgap, ctx);

  const auto [s1_u, sr_u] = factor_extremes(u);
  report.add("sigma1_upper", s1_u, 1.01 * s1_star, ctx);
  report.add("sigma1_lower", 0.99 * s1_star, s1_u, ctx);
  report.add("sigmar_upper", sr_u, 1.01 * sr_star, ctx);
  report.add("sigmar_lower", 0.99 * sr_star, sr_u, ctx);
  return report;
}

AuditReport audit_step_equivalence(const Objective& obj, const Factor& u,
                                   const SymMatrix& x0, const SymMatrix& x_star) {
  const double eta = eta_at(obj, x0);
  const double eta_hat = step_size_adaptive(obj, u).eta;
  const double eta_star = eta_at(obj, x_star);

  AuditReport report;
  report.add("step_hat_vs_fixed", 5.0 / 6.0 * eta, eta_hat);
  report.add("step_fixed_lower", 10.0 / 11.0 * eta_star, eta);
  report.add("step_fixed_upper", eta, 11.0 / 10.0 * eta_star);
  return report;
}

AuditReport audit_descent(const Objective& obj, const Factor& u,
                          const Factor& u_star_r, const SymMatrix& x_star,
                          const StepSize& eta) {
  if (u.n() != u_star_r.n() || u.r() != u_star_r.r())
    throw std::invalid_argument("audit_descent: shape mismatch");

  const SymMatrix x = gram(u);
  const SymMatrix grad = obj.gradient(x);
  const Factor gu = apply(grad, u);
  const double gu_sq = inner(gu, gu);

  const DistResult dr = dist(u, u_star_r);
  const Factor aligned = rotate(u_star_r, dr.rotation);
  Factor delta = u;
  delta -= aligned;
  const double lhs_inner = inner(gu, delta);

  const StarSpectrum s = star_spectrum(x_star, u.r());

  AuditReport report;
  if (obj.rsc && obj.rsc->m > 0.0) {
    const double bound = (2.0 / 3.0) * eta.eta * gu_sq +
                         (3.0 * obj.rsc->m / 20.0) * s.sigma_r * dr.value * dr.value -
                         (obj.smoothness / 4.0) * s.tail_norm * s.tail_norm;
    report.add("descent_strong", bound, lhs_inner);
  }

  // Smooth-only form, conditioned on its predicate f(X+) >= f(X*_r).
  Factor next = gu;
  next *= -eta.eta;
  next += u;
  const double f_next = obj.value(gram(next));
  const double f_star_r = obj.value(gram(u_star_r));
  report.add("descent_smooth_predicate", f_star_r, f_next);
  if (f_next >= f_star_r)
    report.add("descent_smooth", 0.5 * eta.eta * gu_sq, lhs_inner);
  return report;
}

SymMatrix assemble_factored_hessian(const Objective& obj, const Factor& u_star,
                                    double h) {
  const int n = u_star.n();
  const int r = u_star.r();
  const int dim = n * r;
  if (dim > 64)
    throw std::invalid_argument("assemble_factored_hessian: nr > 64 refused");
  if (!(h > 0.0)) throw std::invalid_argument("assemble_factored_hessian: h > 0");

  std::vector<double> full(static_cast<size_t>(dim) * dim, 0.0);
  Factor probe = u_star;
  for (int c = 0; c < dim; ++c) {
    const double saved = probe.data()[c];
    probe.data()[c] = saved + h;
    const Factor gp = factored_gradient(obj, probe);
    probe.data()[c] = saved - h;
    const Factor gm = factored_gradient(obj, probe);
    probe.data()[c] = saved;
    for (int rr = 0; rr < dim; ++rr)
      full[static_cast<size_t>(rr) + static_cast<size_t>(c) * dim] =
          (gp.data()[rr] - gm.data()[rr]) / (2.0 * h);
  }
  return SymMatrix::symmetrized(dim, full);
}

AuditReport audit_hessian_separable(const SeparableObjective& sep,
                                    const Factor& u_star, int probes,
                                    uint64_t seed) {
  const Objective obj = sep.as_objective();
  const int n = u_star.n();
  const int r = u_star.r();

  const double h = 1e-4 * (1.0 + frobenius_norm(u_star));
  const SymMatrix hess = assemble_factored_hessian(obj, u_star, h);
  const SpectralDecomp hd = spectral_decomp(hess);

  const SymMatrix x_star = gram(u_star);
  const StarSpectrum s = star_spectrum(x_star, r);
  const double grad_norm = spectral_norm(obj.gradient(x_star), 1e-8);
  const double scale = obj.smoothness * s.sigma1 + grad_norm;
  const double tol = 1e-4 * std::max(scale, 1.0);

  AuditReport report;
  report.add("hessian_sigma_max", hd.eigenvalues[0],
             2.0 * obj.smoothness * s.sigma1 + grad_norm + tol);

  // Orthonormal basis of col(U*) for projecting probes to mat(y)^T U* = 0.
  auto [xr, dummy] = rank_r_truncate(x_star, r);
  (void)xr;
  const SpectralDecomp xd = spectral_decomp(x_star);

  Rng rng(seed);
  for (int p = 0; p < probes; ++p) {
    Factor y(n, r);
    for (size_t k = 0; k < y.size(); ++k) y.data()[k] = rng.normal();
    // project each column of Y off the column span of U*
    for (int c = 0; c < r; ++c) {
      double* yc = y.col(c);
      for (int b = 0; b < r; ++b) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += yc[i] * xd.vec(i, b);
        for (int i = 0; i < n; ++i) yc[i] -= dot * xd.vec(i, b);
      }
    }
    const double ny = frobenius_norm(y);
    if (ny == 0.0) continue;
    y *= 1.0 / ny;

    double quad = 0.0;
    const int dim = n * r;
    for (int j = 0; j < dim; ++j) {
      const double yj = y.data()[j];
      if (yj == 0.0) continue;
      for (int i = 0; i < dim; ++i) quad += y.data()[i] * hess(i, j) * yj;
    }
    double m_lo = sep.weight_lo;
    report.add("hessian_orth_lower", m_lo * s.sigma_r - tol, quad,
               "probe=" + std::to_string(p));
  }
  return report;
}

AuditReport audit_contraction_rate(const IterationTrace& trace,
                                   const Objective& obj,
                                   const SymMatrix& x_star,
                                   const Factor& u_star_r) {
  AuditReport report;
  if (trace.records.size() < 2) return report;

  const StarSpectrum s = star_spectrum(x_star, u_star_r.r());
  const double grad_star_norm = spectral_norm(obj.gradient(x_star), 1e-8);
  const double denom = obj.smoothness * s.sigma1 + grad_star_norm;
  const double m = (obj.rsc && obj.rsc->m > 0.0) ? obj.rsc->m : 0.0;
  const double alpha64 = (denom > 0.0 && m > 0.0)
                             ? 1.0 - m * s.sigma_r / (64.0 * denom)
                             : 1.0;
  const double alpha208 = (denom > 0.0 && m > 0.0)
                              ? 1.0 - m * s.sigma_r / (208.0 * denom)
                              : 1.0;

  for (size_t k = 0; k + 1 < trace.records.size(); ++k) {
    const double d0 = trace.records[k].dist;
    const double d1 = trace.records[k + 1].dist;
    if (!std::isfinite(d0) || !std::isfinite(d1) || d0 <= 0.0) continue;
    const double ratio = (d1 * d1) / (d0 * d0);
    if (ratio <= alpha64) {
      report.add("contraction_64", ratio, alpha64, iter_context(static_cast<int>(k)));
    } else {
      report.add("contraction_64", ratio, alpha64,
                 iter_context(static_cast<int>(k)) + ";64-form-violated");
      report.add("contraction_208", ratio, alpha208, iter_context(static_cast<int>(k)));
    }
  }

  // Sublinear envelope on the f-gap.
  const double f_star_r = obj.value(gram(u_star_r));
  const double d0 = trace.records[0].dist;
  const double gap0 = trace.records[0].f - f_star_r;
  const double eta = trace.records[0].eta;
  if (std::isfinite(d0) && d0 > 0.0 && gap0 > 0.0 && eta > 0.0) {
    const double c = 5.0 / eta * d0 * d0;
    const double slack = 1e-9 * gap0;
    for (size_t k = 0; k < trace.records.size(); ++k) {
      const double bound = c / (static_cast<double>(k) + c / gap0);
      report.add("sublinear_envelope", trace.records[k].f - f_star_r,
                 bound + slack, iter_context(static_cast<int>(k)));
    }
  }
  return report;
}

}  // namespace fgd
