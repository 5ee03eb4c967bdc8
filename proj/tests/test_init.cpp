#include <cmath>
#include <fstream>
#include <memory>

#include "doctest.h"
#include "fgd/dist.hpp"
#include "fgd/eig.hpp"
#include "fgd/experiments.hpp"
#include "fgd/init.hpp"
#include "fgd/rng.hpp"
#include "fgd/sensing.hpp"
#include "oracles.hpp"

using namespace fgd;

TEST_CASE("init_spectral is exact for the kappa = 1 quadratic") {
  auto [x_star, u_star] = make_ground_truth(12, {3.0, 1.5, 0.5}, 3, 331);
  const Objective obj = quad_loss(x_star);
  const Reference ref{x_star, u_star};
  const InitReport rep = init_spectral(obj, 12, 3, &ref);

  SymMatrix gap = rep.x0;
  gap -= x_star;
  CHECK(frobenius_norm(gap) <= 1e-10 * frobenius_norm(x_star));
  CHECK(*rep.dist_to_ref <= 1e-7);
}

TEST_CASE("init_spectral handles the optimum-at-zero case") {
  // minimum of 1/2||X + I||^2 over the PSD cone is 0; grad_f(0) = I is PSD,
  // so the projected negative gradient vanishes.
  SymMatrix neg_eye = SymMatrix::identity(4);
  neg_eye *= -1.0;
  const Objective obj = quad_loss(neg_eye);
  const InitReport rep = init_spectral(obj, 4, 2);
  CHECK(frobenius_norm(rep.x0) == 0.0);
  CHECK(frobenius_norm(rep.u0) == 0.0);
}

TEST_CASE("init_spectral rejects degenerate objectives") {
  Objective flat;
  flat.value = [](const SymMatrix&) { return 0.0; };
  flat.gradient = [](const SymMatrix& x) { return SymMatrix::identity(x.n()); };
  flat.smoothness = 1.0;
  CHECK_THROWS(init_spectral(flat, 3, 1));
}

TEST_CASE("init_spectral beats random initialization on sensing instances") {
  const int n = 32;
  const int r = 2;
  int wins = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const uint64_t seed = 1000 + t;
    auto op = std::make_shared<SensingOperator>(
        SensingOperator::gaussian(n, 6 * n * r, seed));
    auto [x_star, u_star] = make_ground_truth(n, {1.0, 0.7}, r, seed ^ 0x77ull);
    const Objective obj = sensing_loss(op, op->forward(x_star), r);
    const Reference ref{x_star, u_star};
    const InitReport rep = init_spectral(obj, n, r, &ref);
    const Factor random_u =
        init_random(n, r, std::sqrt(spectral_norm(x_star, 1e-6)), seed ^ 0x99ull);
    if (*rep.dist_to_ref < dist_value(random_u, u_star)) ++wins;
  }
  CHECK(wins >= 95);
}

TEST_CASE("init_spectral distance bound and norm inequalities") {
  // strongly convex separable instance with kappa <= 1.5 and known optimum
  Rng rng(337);
  auto [x_star, u_star] = make_ground_truth(10, {2.0, 1.0}, 2, 347);
  SymMatrix weights(10);
  for (int j = 0; j < 10; ++j)
    for (int i = 0; i <= j; ++i) weights.set(i, j, 1.0 + 0.4 * rng.uniform());
  const Objective obj = separable_quad(x_star, weights, 1.0, 1.4).as_objective();
  const Reference ref{x_star, u_star};
  const InitReport rep = init_spectral(obj, 10, 2, &ref);

  REQUIRE(rep.gamma_bound.has_value());
  const std::vector<double> g = cross_gram(u_star, u_star);
  SymMatrix utu(2);
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i <= j; ++i) utu.set(i, j, g[i + 2 * j]);
  const double sr_u = std::sqrt(spectral_decomp(utu).eigenvalues[1]);
  CHECK(*rep.dist_to_ref <= *rep.gamma_bound * sr_u);

  const double kappa = obj.smoothness / obj.rsc->m;
  CHECK(frobenius_norm(rep.x0) <= kappa * frobenius_norm(x_star) + 1e-9);
  CHECK(inner(rep.x0, x_star) >=
        inner(x_star, x_star) / kappa - 1e-9 * inner(x_star, x_star));
}

TEST_CASE("init_pgd_switch solves the quadratic in one projected step") {
  auto [x_star, u_star] = make_ground_truth(8, {2.0, 1.0}, 2, 353);
  const Objective obj = quad_loss(x_star);
  const Reference ref{x_star, u_star};
  const InitReport rep = init_pgd_switch(obj, 8, 2, 1e-6, &ref);
  CHECK(rep.criterion_met);
  CHECK(rep.pgd_iterations <= 3);
  SymMatrix gap = rep.x0;
  gap -= x_star;
  CHECK(frobenius_norm(gap) <= 1e-9 * frobenius_norm(x_star));
}

TEST_CASE("init_pgd_switch does not lose ground on sensing instances") {
  const int n = 32;
  const int r = 2;
  auto op = std::make_shared<SensingOperator>(SensingOperator::gaussian(n, 6 * n * r, 359));
  auto [x_star, u_star] = make_ground_truth(n, {1.0, 0.8}, r, 367);
  const Objective obj = sensing_loss(op, op->forward(x_star), r);
  const Reference ref{x_star, u_star};

  const InitReport before = init_spectral(obj, n, r, &ref);
  const InitReport after = init_pgd_switch(obj, n, r, 1e-4, &ref);
  const std::vector<double> g = cross_gram(u_star, u_star);
  SymMatrix utu(2);
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i <= j; ++i) utu.set(i, j, g[i + 2 * j]);
  const double sr_u = std::sqrt(spectral_decomp(utu).eigenvalues[1]);
  CHECK(*after.dist_to_ref / sr_u <= *before.dist_to_ref / sr_u + 1e-12);
}

TEST_CASE("init_pgd_switch requires a finite condition number") {
  Objective smooth_only;
  smooth_only.value = [](const SymMatrix& x) { return 0.5 * inner(x, x); };
  smooth_only.gradient = [](const SymMatrix& x) { return x; };
  smooth_only.smoothness = 1.0;
  CHECK_THROWS(init_pgd_switch(smooth_only, 4, 1, 1e-4));
}

TEST_CASE("projected-gradient changes are monotone for kappa near 1") {
  auto op = std::make_shared<SensingOperator>(SensingOperator::gaussian(16, 6 * 16 * 2, 373));
  auto [x_star, u_star] = make_ground_truth(16, {1.0, 0.9}, 2, 379);
  const Objective obj = sensing_loss(op, op->forward(x_star), 2);

  SymMatrix x = init_spectral(obj, 16, 2).x0;
  double prev_change = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 12; ++k) {
    SymMatrix step = obj.gradient(x);
    step *= -1.0 / obj.global_m();
    step += x;
    SymMatrix next = psd_project(step);
    SymMatrix delta = next;
    delta -= x;
    const double change = frobenius_norm(delta);
    CHECK(change <= prev_change * (1.0 + 1e-9));
    prev_change = change;
    x = std::move(next);
  }
}

TEST_CASE("init_random: reproducible, scaled, zero-scale") {
  const Factor a = init_random(9, 3, 1.5, 42);
  const Factor b = init_random(9, 3, 1.5, 42);
  for (size_t k = 0; k < a.size(); ++k) CHECK(a.data()[k] == b.data()[k]);

  double acc = 0.0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const Factor u = init_random(9, 3, 1.5, 5000 + t);
    acc += inner(u, u);
  }
  const double expect = 3 * 1.5 * 1.5;  // r * scale^2
  CHECK(acc / trials > 0.8 * expect);
  CHECK(acc / trials < 1.2 * expect);

  CHECK(frobenius_norm(init_random(5, 2, 0.0, 7)) == 0.0);
}

TEST_CASE("init report file carries norms and distances") {
  auto [x_star, u_star] = make_ground_truth(6, {1.0}, 1, 383);
  const Objective obj = quad_loss(x_star);
  const Reference ref{x_star, u_star};
  const InitReport rep = init_spectral(obj, 6, 1, &ref);
  rep.write_summary("init_report_test.txt");

  std::ifstream f("init_report_test.txt");
  REQUIRE(f.good());
  std::string key;
  double value;
  bool saw_dist = false;
  while (f >> key >> value)
    if (key == "dist_to_ref") saw_dist = true;
  CHECK(saw_dist);
}
