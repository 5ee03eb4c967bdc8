#include <cmath>

#include "doctest.h"
#include "fgd/dist.hpp"
#include "fgd/eig.hpp"
#include "fgd/io.hpp"
#include "fgd/matrix.hpp"
#include "fgd/rng.hpp"
#include "oracles.hpp"

using namespace fgd;

TEST_CASE("gram: ones column") {
  Factor u(2, 1);
  u(0, 0) = 1.0;
  u(1, 0) = 1.0;
  const SymMatrix x = gram(u);
  CHECK(x(0, 0) == doctest::Approx(1.0));
  CHECK(x(0, 1) == doctest::Approx(1.0));
  CHECK(x(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("gram: zero factor gives zero matrix") {
  Factor u(4, 2);
  const SymMatrix x = gram(u);
  CHECK(frobenius_norm(x) == 0.0);
}

TEST_CASE("gram matches triple-loop oracle") {
  Rng rng(11);
  const Factor u = oracle::random_factor(5, 2, rng);
  const SymMatrix x = gram(u);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      double want = 0.0;
      for (int k = 0; k < 2; ++k) want += u(i, k) * u(j, k);
      CHECK(std::abs(x(i, j) - want) < 1e-12);
    }
}

TEST_CASE("spectral_decomp: diagonal input") {
  SymMatrix a(2);
  a.set(0, 0, 3.0);
  a.set(1, 1, 1.0);
  const SpectralDecomp d = spectral_decomp(a);
  CHECK(d.eigenvalues[0] == doctest::Approx(3.0));
  CHECK(d.eigenvalues[1] == doctest::Approx(1.0));
  CHECK(std::abs(d.vec(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(d.vec(1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("spectral_decomp: classic 2x2 off-diagonal") {
  SymMatrix a(2);
  a.set(0, 1, 1.0);
  const SpectralDecomp d = spectral_decomp(a);
  CHECK(d.eigenvalues[0] == doctest::Approx(1.0));
  CHECK(d.eigenvalues[1] == doctest::Approx(-1.0));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(d.vec(0, 0)) == doctest::Approx(inv_sqrt2));
  CHECK(std::abs(d.vec(1, 0)) == doctest::Approx(inv_sqrt2));
  CHECK(d.vec(0, 1) * d.vec(1, 1) < 0.0);  // (1,-1)/sqrt(2) up to sign
}

TEST_CASE("spectral_decomp: residual, orthonormality, reconstruction") {
  Rng rng(17);
  for (int n : {8, 80}) {  // exercises both the Jacobi and the QL path
    const SymMatrix a = oracle::random_symmetric(n, rng);
    const SpectralDecomp d = spectral_decomp(a);
    const double scale = frobenius_norm(a);

    for (int k = 0; k < n; ++k) {
      double resid = 0.0;
      for (int i = 0; i < n; ++i) {
        double av = 0.0;
        for (int j = 0; j < n; ++j) av += a(i, j) * d.vec(j, k);
        const double diff = av - d.eigenvalues[k] * d.vec(i, k);
        resid += diff * diff;
      }
      CHECK(std::sqrt(resid) < 1e-9 * std::max(scale, 1.0));
    }
    for (int k = 0; k < n; ++k)
      for (int l = k; l < n; ++l) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += d.vec(i, k) * d.vec(i, l);
        CHECK(std::abs(dot - (k == l ? 1.0 : 0.0)) < 1e-10);
      }
    std::vector<int> all(n);
    for (int k = 0; k < n; ++k) all[k] = k;
    SymMatrix rebuilt = reconstruct(d, all);
    rebuilt -= a;
    CHECK(frobenius_norm(rebuilt) < 1e-10 * std::max(scale, 1.0));
    for (int k = 1; k < n; ++k) CHECK(d.eigenvalues[k - 1] >= d.eigenvalues[k]);
  }
}

TEST_CASE("spectral_decomp agrees with independent Jacobi oracle") {
  Rng rng(23);
  const SymMatrix a = oracle::random_symmetric(6, rng);
  const SpectralDecomp d = spectral_decomp(a);
  std::vector<double> vals;
  std::vector<std::vector<double>> vecs;
  oracle::naive_eig(a, vals, vecs);
  for (int k = 0; k < 6; ++k)
    CHECK(d.eigenvalues[k] == doctest::Approx(vals[5 - k]).epsilon(1e-10));
}

TEST_CASE("psd_project: sign split and fixed point") {
  SymMatrix a(2);
  a.set(0, 0, 1.0);
  a.set(1, 1, -2.0);
  const SymMatrix p = psd_project(a);
  CHECK(p(0, 0) == doctest::Approx(1.0));
  CHECK(p(1, 1) == doctest::Approx(0.0));

  Rng rng(5);
  const SymMatrix psd = oracle::random_psd(6, 3, rng);
  SymMatrix diff = psd_project(psd);
  diff -= psd;
  CHECK(frobenius_norm(diff) < 1e-10 * frobenius_norm(psd));
}

TEST_CASE("psd_project matches clip-negative-eigenvalue oracle") {
  Rng rng(31);
  const SymMatrix a = oracle::random_symmetric(6, rng);
  const SymMatrix p = psd_project(a);

  std::vector<double> vals;
  std::vector<std::vector<double>> vecs;
  oracle::naive_eig(a, vals, vecs);
  SymMatrix want(6);
  for (int k = 0; k < 6; ++k) {
    if (vals[k] <= 0.0) continue;
    for (int j = 0; j < 6; ++j)
      for (int i = j; i < 6; ++i) want.add_to(i, j, vals[k] * vecs[k][i] * vecs[k][j]);
  }
  SymMatrix diff = p;
  diff -= want;
  CHECK(frobenius_norm(diff) < 1e-9 * std::max(frobenius_norm(a), 1.0));
}

TEST_CASE("psd_project idempotent and non-expansive") {
  Rng rng(37);
  for (int t = 0; t < 10; ++t) {
    const SymMatrix a = oracle::random_symmetric(5, rng);
    const SymMatrix b = oracle::random_symmetric(5, rng);
    const SymMatrix pa = psd_project(a);
    const SymMatrix pb = psd_project(b);
    SymMatrix twice = psd_project(pa);
    twice -= pa;
    CHECK(frobenius_norm(twice) < 1e-10 * std::max(frobenius_norm(a), 1.0));
    SymMatrix dp = pa;
    dp -= pb;
    SymMatrix dab = a;
    dab -= b;
    CHECK(frobenius_norm(dp) <= frobenius_norm(dab) + 1e-12);
  }
}

TEST_CASE("rank_r_truncate: diagonal case and exact-rank fixed point") {
  SymMatrix a(3);
  a.set(0, 0, 4.0);
  a.set(1, 1, 1.0);
  auto [a1, u] = rank_r_truncate(a, 1);
  CHECK(a1(0, 0) == doctest::Approx(4.0));
  CHECK(a1(1, 1) == doctest::Approx(0.0));
  CHECK(std::abs(u(0, 0)) == doctest::Approx(2.0));
  CHECK(u(1, 0) == doctest::Approx(0.0));

  Rng rng(41);
  const SymMatrix psd = oracle::random_psd(7, 3, rng);
  auto [same, w] = rank_r_truncate(psd, 3);
  SymMatrix d1 = same;
  d1 -= psd;
  CHECK(frobenius_norm(d1) < 1e-10 * frobenius_norm(psd));
  SymMatrix d2 = gram(w);
  d2 -= psd;
  CHECK(frobenius_norm(d2) < 1e-10 * frobenius_norm(psd));
}

TEST_CASE("rank_r_truncate: tail norm identity and PSD guard") {
  Rng rng(43);
  const SymMatrix a = oracle::random_psd(8, 8, rng);
  auto [a3, u] = rank_r_truncate(a, 3);
  (void)u;
  const SpectralDecomp d = spectral_decomp(a);
  double tail = 0.0;
  for (int k = 3; k < 8; ++k) tail += d.eigenvalues[k] * d.eigenvalues[k];
  SymMatrix diff = a;
  diff -= a3;
  CHECK(frobenius_norm(diff) == doctest::Approx(std::sqrt(tail)).epsilon(1e-9));

  SymMatrix indef(2);
  indef.set(0, 0, 1.0);
  indef.set(1, 1, -1.0);
  CHECK_THROWS(rank_r_truncate(indef, 2));
}

TEST_CASE("spectral_norm: simple and random cases") {
  SymMatrix a(2);
  a.set(0, 0, 5.0);
  a.set(1, 1, -7.0);
  CHECK(spectral_norm(a, 1e-10) == doctest::Approx(7.0));

  SymMatrix zero(3);
  CHECK(spectral_norm(zero, 1e-8) == 0.0);

  Rng rng(47);
  const SymMatrix b = oracle::random_symmetric(10, rng);
  const SpectralDecomp d = spectral_decomp(b);
  double want = std::max(std::abs(d.eigenvalues[0]), std::abs(d.eigenvalues[9]));
  CHECK(std::abs(spectral_norm(b, 1e-8) - want) < 1e-7 * frobenius_norm(b));
}

TEST_CASE("dist: identity and rotation invariance") {
  Rng rng(53);
  const Factor u = oracle::random_factor(6, 3, rng);
  CHECK(dist_value(u, u) < 1e-12);

  const Rotation rot = oracle::random_rotation(3, rng);
  const Factor ur = rotate(u, rot);
  CHECK(dist_value(u, ur) < 1e-10 * frobenius_norm(u));
  // invariance to rotating either argument
  const Factor v = oracle::random_factor(6, 3, rng);
  CHECK(dist_value(u, rotate(v, rot)) ==
        doctest::Approx(dist_value(u, v)).epsilon(1e-10));
  CHECK(dist_value(rotate(u, rot), v) ==
        doctest::Approx(dist_value(u, v)).epsilon(1e-10));
  // symmetry in arguments
  CHECK(dist_value(u, v) == doctest::Approx(dist_value(v, u)).epsilon(1e-10));
}

TEST_CASE("dist r=1 equals sign brute force") {
  Rng rng(59);
  for (int t = 0; t < 20; ++t) {
    const Factor u = oracle::random_factor(5, 1, rng);
    const Factor v = oracle::random_factor(5, 1, rng);
    Factor minus = v;
    minus *= -1.0;
    Factor d1 = u;
    d1 -= v;
    Factor d2 = u;
    d2 -= minus;
    const double want = std::min(frobenius_norm(d1), frobenius_norm(d2));
    CHECK(std::abs(dist_value(u, v) - want) < 1e-12);
  }
}

TEST_CASE("dist r=2 matches angle-grid oracle") {
  Rng rng(61);
  for (int t = 0; t < 10; ++t) {
    const Factor u = oracle::random_factor(4, 2, rng);
    const Factor v = oracle::random_factor(4, 2, rng);
    CHECK(std::abs(dist_value(u, v) - oracle::grid_dist_r2(u, v)) < 1e-3);
  }
}

TEST_CASE("dist returns the achieving rotation") {
  Rng rng(67);
  const Factor u = oracle::random_factor(7, 3, rng);
  const Factor v = oracle::random_factor(7, 3, rng);
  const DistResult res = dist(u, v);
  Factor diff = u;
  diff -= rotate(v, res.rotation);
  CHECK(std::abs(frobenius_norm(diff) - res.value) < 1e-12);
  // returned R is orthonormal
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += res.rotation(k, i) * res.rotation(k, j);
      CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-11);
    }
}

TEST_CASE("dist handles rank-deficient cross gram") {
  // V^T U = 0: any orthonormal R attains the minimum, the value must still
  // equal ||U - V R||_F for the returned R.
  Factor u(4, 2);
  u(0, 0) = 1.0;
  u(1, 1) = 1.0;
  Factor v(4, 2);
  v(2, 0) = 1.0;
  v(3, 1) = 1.0;
  const DistResult res = dist(u, v);
  Factor diff = u;
  diff -= rotate(v, res.rotation);
  CHECK(std::abs(frobenius_norm(diff) - res.value) < 1e-12);
  CHECK(res.value == doctest::Approx(2.0));  // sqrt(||U||^2 + ||V||^2)
}

TEST_CASE("inner: identity, symmetry, elementwise oracle") {
  CHECK(inner(SymMatrix::identity(2), SymMatrix::identity(2)) == doctest::Approx(2.0));

  Rng rng(71);
  const SymMatrix a = oracle::random_symmetric(4, rng);
  const SymMatrix b = oracle::random_symmetric(4, rng);
  CHECK(inner(a, b) == doctest::Approx(inner(b, a)));
  double want = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) want += a(i, j) * b(i, j);
  CHECK(std::abs(inner(a, b) - want) < 1e-13 * std::max(1.0, std::abs(want)));
  CHECK(frobenius_norm(a) == doctest::Approx(std::sqrt(inner(a, a))));
}

TEST_CASE("factor-space sandwich invariants inside the assumption ball") {
  Rng rng(73);
  const Factor u_star = oracle::random_factor(8, 3, rng);
  const SymMatrix x_star = gram(u_star);
  const SpectralDecomp d = spectral_decomp(x_star);
  const double sigma1 = d.eigenvalues[0];
  const double sigma_r = d.eigenvalues[2];
  const double rho = 0.01 * sigma_r / sigma1;
  const double sr_u = std::sqrt(sigma_r);
  const double s1_u = std::sqrt(sigma1);

  for (int t = 0; t < 20; ++t) {
    const Factor u = oracle::ball_sample(u_star, rho * sr_u, 0.9, rng);
    const double dv = dist_value(u, u_star);
    REQUIRE(dv <= rho * sr_u);

    SymMatrix gap = gram(u);
    gap -= x_star;
    const double xgap = frobenius_norm(gap);
    CHECK(xgap <= (2.0 + rho) * s1_u * dv + 1e-12);
    CHECK(xgap * xgap >= 2.0 * (std::sqrt(2.0) - 1.0) * sigma_r * dv * dv - 1e-12);

    const std::vector<double> g = cross_gram(u, u);
    SymMatrix utu(3);
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i <= j; ++i) utu.set(i, j, g[i + 3 * j]);
    const SpectralDecomp du = spectral_decomp(utu);
    const double s1 = std::sqrt(du.eigenvalues[0]);
    const double sr = std::sqrt(du.eigenvalues[2]);
    CHECK(s1 >= 0.99 * s1_u);
    CHECK(s1 <= 1.01 * s1_u);
    CHECK(sr >= 0.99 * sr_u);
    CHECK(sr <= 1.01 * sr_u);
  }
}

TEST_CASE("matrix file round trips") {
  Rng rng(79);
  const SymMatrix a = oracle::random_symmetric(5, rng);
  const Factor u = oracle::random_factor(6, 2, rng);

  save_text(a, "linalg_sym.txt");
  save_text(u, "linalg_fac.txt");
  save_binary(a, "linalg_sym.bin");
  save_binary(u, "linalg_fac.bin");

  SymMatrix at = load_sym_text("linalg_sym.txt");
  at -= a;
  CHECK(frobenius_norm(at) == 0.0);
  Factor ut = load_factor_text("linalg_fac.txt");
  ut -= u;
  CHECK(frobenius_norm(ut) == 0.0);
  SymMatrix ab = load_sym_binary("linalg_sym.bin");
  ab -= a;
  CHECK(frobenius_norm(ab) == 0.0);
  Factor ub = load_factor_binary("linalg_fac.bin");
  ub -= u;
  CHECK(frobenius_norm(ub) == 0.0);
}
