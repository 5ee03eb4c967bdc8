#include "fgd/eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fgd/rng.hpp"

namespace fgd {
namespace {

constexpr int kJacobiMaxSweeps = 100;
constexpr int kQlMaxIters = 60;
constexpr int kPowerMaxIters = 200000;

// Cyclic Jacobi with threshold; robust for small n.
void jacobi_eig(int n, std::vector<double>& a, std::vector<double>& v,
                std::vector<double>& d) {
  auto at = [n](std::vector<double>& m, int i, int j) -> double& {
    return m[static_cast<size_t>(i) + static_cast<size_t>(j) * n];
  };
  v.assign(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) at(v, i, i) = 1.0;

  double fro = 0.0;
  for (double x : a) fro += x * x;
  fro = std::sqrt(fro);
  if (fro == 0.0) {
    d.assign(n, 0.0);
    return;
  }

  for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += 2.0 * at(a, p, q) * at(a, p, q);
    if (std::sqrt(off) <= 1e-15 * fro) break;
    if (sweep == kJacobiMaxSweeps - 1)
      throw std::runtime_error("spectral_decomp: Jacobi sweep cap exceeded");

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(a, p, q);
        if (std::abs(apq) <= 1e-18 * fro) continue;
        const double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(a, k, p);
          const double akq = at(a, k, q);
          at(a, k, p) = c * akp - s * akq;
          at(a, k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(a, p, k);
          const double aqk = at(a, q, k);
          at(a, p, k) = c * apk - s * aqk;
          at(a, q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = at(v, k, p);
          const double vkq = at(v, k, q);
          at(v, k, p) = c * vkp - s * vkq;
          at(v, k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  d.resize(n);
  for (int i = 0; i < n; ++i) d[i] = at(a, i, i);
}

// Householder reduction to tridiagonal form with transform accumulation.
// z enters as the matrix and leaves as the orthogonal Q; d/e receive the
// diagonal and subdiagonal.
void tred2(int n, std::vector<double>& z, std::vector<double>& d,
           std::vector<double>& e) {
  auto at = [n](std::vector<double>& m, int i, int j) -> double& {
    return m[static_cast<size_t>(i) + static_cast<size_t>(j) * n];
  };
  d.assign(n, 0.0);
  e.assign(n, 0.0);

  for (int i = n - 1; i >= 1; --i) {
    const int l = i - 1;
    double h = 0.0;
    double scale = 0.0;
    if (l > 0) {
      for (int k = 0; k <= l; ++k) scale += std::abs(at(z, i, k));
      if (scale == 0.0) {
        e[i] = at(z, i, l);
      } else {
        for (int k = 0; k <= l; ++k) {
          at(z, i, k) /= scale;
          h += at(z, i, k) * at(z, i, k);
        }
        double f = at(z, i, l);
        double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        at(z, i, l) = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          at(z, j, i) = at(z, i, j) / h;
          g = 0.0;
          for (int k = 0; k <= j; ++k) g += at(z, j, k) * at(z, i, k);
          for (int k = j + 1; k <= l; ++k) g += at(z, k, j) * at(z, i, k);
          e[j] = g / h;
          f += e[j] * at(z, i, j);
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = at(z, i, j);
          e[j] = g = e[j] - hh * f;
          for (int k = 0; k <= j; ++k)
            at(z, j, k) -= f * e[k] + g * at(z, i, k);
        }
      }
    } else {
      e[i] = at(z, i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    const int l = i - 1;
    if (d[i] != 0.0) {
      for (int j = 0; j <= l; ++j) {
        double g = 0.0;
        for (int k = 0; k <= l; ++k) g += at(z, i, k) * at(z, k, j);
        for (int k = 0; k <= l; ++k) at(z, k, j) -= g * at(z, k, i);
      }
    }
    d[i] = at(z, i, i);
    at(z, i, i) = 1.0;
    for (int j = 0; j <= l; ++j) {
      at(z, j, i) = 0.0;
      at(z, i, j) = 0.0;
    }
  }
}

// Implicit-shift QL on the tridiagonal (d, e), rotating z along.
void tql2(int n, std::vector<double>& d, std::vector<double>& e,
          std::vector<double>& z) {
  auto at = [n](std::vector<double>& m, int i, int j) -> double& {
    return m[static_cast<size_t>(i) + static_cast<size_t>(j) * n];
  };
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m = l;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= 2.3e-16 * dd) break;
      }
      if (m != l) {
        if (iter++ == kQlMaxIters)
          throw std::runtime_error("spectral_decomp: QL iteration cap exceeded");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        for (int i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (int k = 0; k < n; ++k) {
            f = at(z, k, i + 1);
            at(z, k, i + 1) = s * at(z, k, i) + c * f;
            at(z, k, i) = c * at(z, k, i) - s * f;
          }
        }
        if (r == 0.0 && m - 1 >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace

SpectralDecomp spectral_decomp(const SymMatrix& a) {
  const int n = a.n();
  std::vector<double> work(a.data(), a.data() + a.size());
  std::vector<double> vecs;
  std::vector<double> vals;

  if (n <= 64) {
    jacobi_eig(n, work, vecs, vals);
  } else {
    std::vector<double> e;
    tred2(n, work, vals, e);
    tql2(n, vals, e, work);
    vecs = std::move(work);
  }

  // Descending order, then sign convention: largest-magnitude entry positive
  // (lowest index on magnitude ties).
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return vals[i] > vals[j]; });

  SpectralDecomp out;
  out.eigenvalues.resize(n);
  out.eigenvectors.assign(static_cast<size_t>(n) * n, 0.0);
  for (int k = 0; k < n; ++k) {
    const int src = order[k];
    out.eigenvalues[k] = vals[src];
    const double* col = vecs.data() + static_cast<size_t>(src) * n;
    int pivot = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(col[i]) > std::abs(col[pivot])) pivot = i;
    const double sign = (col[pivot] < 0.0) ? -1.0 : 1.0;
    double* dst = out.eigenvectors.data() + static_cast<size_t>(k) * n;
    for (int i = 0; i < n; ++i) dst[i] = sign * col[i];
  }
  return out;
}

SymMatrix reconstruct(const SpectralDecomp& d, const std::vector<int>& keep) {
  const int n = d.n();
  SymMatrix out(n);
  for (int k : keep) {
    const double lam = d.eigenvalues[k];
    const double* v = d.eigenvectors.data() + static_cast<size_t>(k) * n;
    for (int j = 0; j < n; ++j) {
      const double w = lam * v[j];
      if (w == 0.0) continue;
      for (int i = j; i < n; ++i) out.add_to(i, j, v[i] * w);
    }
  }
  return out;
}

SymMatrix psd_project(const SymMatrix& a) {
  const SpectralDecomp d = spectral_decomp(a);
  std::vector<int> keep;
  for (int k = 0; k < d.n(); ++k)
    if (d.eigenvalues[k] > 0.0) keep.push_back(k);
  return reconstruct(d, keep);
}

std::pair<SymMatrix, Factor> rank_r_truncate(const SymMatrix& a, int r) {
  const int n = a.n();
  if (r < 1 || r > n) throw std::invalid_argument("rank_r_truncate: bad rank");
  const SpectralDecomp d = spectral_decomp(a);
  const double top = std::abs(d.eigenvalues[0]);
  for (int k = 0; k < r; ++k)
    if (d.eigenvalues[k] < -1e-12 * top)
      throw std::runtime_error("rank_r_truncate: input not PSD at rank r");

  Factor u(n, r);
  std::vector<int> keep;
  for (int k = 0; k < r; ++k) {
    const double lam = std::max(d.eigenvalues[k], 0.0);
    if (lam > 0.0) keep.push_back(k);
    const double w = std::sqrt(lam);
    double* col = u.col(k);
    const double* v = d.eigenvectors.data() + static_cast<size_t>(k) * n;
    for (int i = 0; i < n; ++i) col[i] = w * v[i];
  }
  return {reconstruct(d, keep), std::move(u)};
}

double spectral_norm(const SymMatrix& a, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("spectral_norm: tol must be > 0");
  const int n = a.n();
  const double fro = frobenius_norm(a);
  if (fro == 0.0) return 0.0;

  // All-ones start plus fixed seeded jitter so the start is never exactly
  // orthogonal to the top eigenspace.
  Rng rng(0x5eedULL);
  std::vector<double> x(n);
  double nrm = 0.0;
  for (int i = 0; i < n; ++i) {
    x[i] = 1.0 + 1e-3 * rng.normal();
    nrm += x[i] * x[i];
  }
  nrm = std::sqrt(nrm);
  for (double& v : x) v /= nrm;

  std::vector<double> y(n);
  const double* ad = a.data();
  double prev = 0.0;
  int stable = 0;
  for (int it = 0; it < kPowerMaxIters; ++it) {
    std::fill(y.begin(), y.end(), 0.0);
    for (int j = 0; j < n; ++j) {
      const double xj = x[j];
      if (xj == 0.0) continue;
      const double* col = ad + static_cast<size_t>(j) * n;
      for (int i = 0; i < n; ++i) y[i] += col[i] * xj;
    }
    double ny = 0.0;
    for (double v : y) ny += v * v;
    ny = std::sqrt(ny);
    if (ny == 0.0) return 0.0;
    if (std::abs(ny - prev) <= 0.1 * tol * fro) {
      if (++stable >= 2 && it >= 10) return ny;
    } else {
      stable = 0;
    }
    prev = ny;
    for (int i = 0; i < n; ++i) x[i] = y[i] / ny;
  }
  throw std::runtime_error("spectral_norm: power iteration cap exceeded");
}

}  // namespace fgd
