#include <cmath>
#include <memory>

#include "doctest.h"
#include "fgd/eig.hpp"
#include "fgd/experiments.hpp"
#include "fgd/init.hpp"
#include "fgd/sensing.hpp"
#include "fgd/solver.hpp"
#include "fgd/svp.hpp"
#include "oracles.hpp"

using namespace fgd;

TEST_CASE("svp_step: fixed point at the noiseless sensing optimum") {
  const int n = 16;
  const int r = 2;
  auto op = std::make_shared<SensingOperator>(SensingOperator::gaussian(n, 6 * n * r, 401));
  auto [x_star, u_star] = make_ground_truth(n, {1.0, 0.7}, r, 409);
  const Objective obj = sensing_loss(op, op->forward(x_star), r);

  SvpConfig cfg;
  cfg.rank = r;
  SymMatrix next = svp_step(obj, x_star, cfg);
  next -= x_star;
  CHECK(frobenius_norm(next) < 1e-10 * frobenius_norm(x_star));
}

TEST_CASE("svp_step: quadratic with unit step lands on the truncated target") {
  auto [x_star, u_star] = make_ground_truth(8, {3.0, 2.0, 1.0, 0.5}, 2, 419);
  const Objective obj = quad_loss(x_star);
  SvpConfig cfg;
  cfg.rank = 2;
  cfg.eta = 1.0;
  Rng rng(421);
  const SymMatrix x0 = oracle::random_psd(8, 2, rng);
  const SymMatrix got = svp_step(obj, x0, cfg);
  auto [want, uw] = rank_r_truncate(x_star, 2);
  (void)uw;
  SymMatrix gap = got;
  gap -= want;
  CHECK(frobenius_norm(gap) < 1e-10 * frobenius_norm(want));
}

TEST_CASE("svp_step output is PSD with rank at most r") {
  Rng rng(431);
  const SymMatrix target = oracle::random_symmetric(10, rng);
  const Objective obj = quad_loss(target);
  SvpConfig cfg;
  cfg.rank = 3;
  cfg.eta = 0.5;
  const SymMatrix x = svp_step(obj, oracle::random_psd(10, 4, rng), cfg);
  const SpectralDecomp d = spectral_decomp(x);
  const double top = std::max(std::abs(d.eigenvalues[0]), 1e-30);
  int positive = 0;
  for (int k = 0; k < 10; ++k) {
    CHECK(d.eigenvalues[k] >= -1e-12 * top);
    if (d.eigenvalues[k] > 1e-10 * top) ++positive;
  }
  CHECK(positive <= 3);
}

TEST_CASE("svp_run: stops immediately at a fixed point") {
  auto [x_star, u_star] = make_ground_truth(8, {2.0, 1.0}, 2, 433);
  const Objective obj = quad_loss(x_star);
  SvpConfig cfg;
  cfg.rank = 2;
  auto [xr, uw] = rank_r_truncate(x_star, 2);
  (void)uw;
  const SvpResult res = svp_run(obj, xr, cfg);
  CHECK(res.status == SolveStatus::Converged);
  CHECK(res.iterations <= 1);
}

TEST_CASE("svp_run: objective decreases with the standard 1/M step") {
  const int n = 20;
  const int r = 2;
  auto op = std::make_shared<SensingOperator>(SensingOperator::gaussian(n, 6 * n * r, 439));
  auto [x_star, u_star] = make_ground_truth(n, {1.0, 0.9}, r, 443);
  const Objective obj = sensing_loss(op, op->forward(x_star), r);

  const InitReport init = init_spectral(obj, n, r);
  SvpConfig cfg;
  cfg.rank = r;
  cfg.max_iters = 60;
  cfg.tol = 1e-12;
  const SvpResult res = svp_run(obj, init.x0, cfg);
  for (size_t k = 1; k < res.trace.records.size(); ++k)
    CHECK(res.trace.records[k].f <= res.trace.records[k - 1].f * (1.0 + 1e-9));
}

TEST_CASE("svp_run vs factored solver head-to-head with shared init and step") {
  const int n = 64;
  const int r = 3;
  auto op = std::make_shared<SensingOperator>(SensingOperator::gaussian(n, 6 * n * r, 449));
  auto [x_star, u_star] = make_ground_truth(n, {1.0, 0.85, 0.7}, r, 457);
  const Objective obj = sensing_loss(op, op->forward(x_star), r);
  const Reference ref{x_star, u_star};

  const InitReport init = init_spectral(obj, n, r, &ref);
  const double eta = step_size_fixed(obj, init.x0).eta;

  SolverConfig fcfg;
  fcfg.rank = r;
  fcfg.max_iters = 800;
  fcfg.tol = 1e-5;
  fcfg.step = StepRule::constant(eta);
  const SolveResult fgd = run(obj, init.u0, fcfg, &ref);

  SvpConfig scfg;
  scfg.rank = r;
  scfg.max_iters = 800;
  scfg.tol = 1e-5;
  scfg.eta = eta;
  const SvpResult svp = svp_run(obj, gram(init.u0), scfg, &ref);

  CHECK(fgd.status == SolveStatus::Converged);
  CHECK(svp.status == SolveStatus::Converged);
  const double fgd_err = fgd.trace.records.back().rel_err;
  const double svp_err = svp.trace.records.back().rel_err;
  CHECK(svp_err <= 10.0 * fgd_err + 1e-12);
  CHECK(fgd_err <= 10.0 * svp_err + 1e-12);
}
