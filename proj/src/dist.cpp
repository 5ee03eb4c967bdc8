#include "fgd/dist.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fgd/eig.hpp"

namespace fgd {
namespace {

// Thin SVD of a small dense r x r matrix W = P diag(sigma) Q^T, computed from
// the spectral decomposition of W^T W. Columns of P with sigma ~ 0 are
// completed to an orthonormal basis by Gram-Schmidt over coordinate vectors.
void small_svd(int r, const std::vector<double>& w, std::vector<double>& p,
               std::vector<double>& q, std::vector<double>& sigma) {
  SymMatrix wtw(r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i <= j; ++i) {
      double s = 0.0;
      for (int k = 0; k < r; ++k)
        s += w[static_cast<size_t>(k) + static_cast<size_t>(i) * r] *
             w[static_cast<size_t>(k) + static_cast<size_t>(j) * r];
      wtw.set(i, j, s);
    }
  const SpectralDecomp d = spectral_decomp(wtw);

  sigma.resize(r);
  q.assign(static_cast<size_t>(r) * r, 0.0);
  p.assign(static_cast<size_t>(r) * r, 0.0);
  double smax = 0.0;
  for (int k = 0; k < r; ++k) {
    sigma[k] = std::sqrt(std::max(d.eigenvalues[k], 0.0));
    smax = std::max(smax, sigma[k]);
    for (int i = 0; i < r; ++i)
      q[static_cast<size_t>(i) + static_cast<size_t>(k) * r] = d.vec(i, k);
  }

  const double tol = (smax > 0.0) ? 1e-13 * smax : 0.0;
  std::vector<int> deficient;
  for (int k = 0; k < r; ++k) {
    double* pc = p.data() + static_cast<size_t>(k) * r;
    if (sigma[k] > tol) {
      for (int i = 0; i < r; ++i) {
        double s = 0.0;
        for (int t = 0; t < r; ++t)
          s += w[static_cast<size_t>(i) + static_cast<size_t>(t) * r] *
               q[static_cast<size_t>(t) + static_cast<size_t>(k) * r];
        pc[i] = s / sigma[k];
      }
    } else {
      deficient.push_back(k);
    }
  }
  // Complete the deficient columns against the ones already placed.
  for (int k : deficient) {
    double* pc = p.data() + static_cast<size_t>(k) * r;
    for (int cand = 0; cand < r; ++cand) {
      for (int i = 0; i < r; ++i) pc[i] = (i == cand) ? 1.0 : 0.0;
      for (int other = 0; other < r; ++other) {
        if (other == k) continue;
        const double* oc = p.data() + static_cast<size_t>(other) * r;
        double dot = 0.0;
        for (int i = 0; i < r; ++i) dot += pc[i] * oc[i];
        for (int i = 0; i < r; ++i) pc[i] -= dot * oc[i];
      }
      double nrm = 0.0;
      for (int i = 0; i < r; ++i) nrm += pc[i] * pc[i];
      nrm = std::sqrt(nrm);
      if (nrm > 1e-8) {
        for (int i = 0; i < r; ++i) pc[i] /= nrm;
        break;
      }
    }
  }
}

}  // namespace

DistResult dist(const Factor& u, const Factor& v) {
  if (u.n() != v.n() || u.r() != v.r())
    throw std::invalid_argument("dist: shape mismatch");
  const int r = u.r();

  const std::vector<double> w = cross_gram(v, u);  // V^T U
  std::vector<double> p, q, sigma;
  small_svd(r, w, p, q, sigma);

  DistResult out;
  out.rotation = Rotation(r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < r; ++i) {
      double s = 0.0;
      for (int k = 0; k < r; ++k)
        s += p[static_cast<size_t>(i) + static_cast<size_t>(k) * r] *
             q[static_cast<size_t>(j) + static_cast<size_t>(k) * r];
      out.rotation(i, j) = s;
    }

  const Factor vr = rotate(v, out.rotation);
  double acc = 0.0;
  for (size_t t = 0; t < u.size(); ++t) {
    const double diff = u.data()[t] - vr.data()[t];
    acc += diff * diff;
  }
  out.value = std::sqrt(acc);
  return out;
}

double dist_value(const Factor& u, const Factor& v) { return dist(u, v).value; }

}  // namespace fgd
