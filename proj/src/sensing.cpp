#include "fgd/sensing.hpp"

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "fgd/eig.hpp"
#include "fgd/rng.hpp"

namespace fgd {
namespace {

constexpr double kGaussianCacheBytesMax = 2.0e9;

uint64_t row_seed(uint64_t seed, int row) {
  // splitmix-style mix so each measurement has an independent stream
  uint64_t x = seed ^ (0x9e3779b97f4a7c15ull * (static_cast<uint64_t>(row) + 1));
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  return x;
}

// Packed upper triangle order: (i, j) with i <= j, column-major.
inline size_t packed_index(int i, int j) {
  return static_cast<size_t>(j) * (j + 1) / 2 + i;
}

// w[p] = X_ii on the diagonal and 2 X_ij off it, so a plain dot with raw
// packed entries of A equals trace(A X). Output is zero-padded to `len`.
void pack_doubled(const SymMatrix& x, std::vector<double>& w, size_t len) {
  w.assign(len, 0.0);
  const int n = x.n();
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) w[packed_index(i, j)] = 2.0 * x(i, j);
    w[packed_index(j, j)] = x(j, j);
  }
}

// Sign kernels: bit set means +1. The AVX512 paths process four measurement
// rows per sweep of w so the packed vector stays hot in cache.

#if defined(__AVX512F__)

void sign_dot4(const uint64_t* bits, size_t words, size_t stride, const double* w,
               double* out) {
  __m512d a0 = _mm512_setzero_pd();
  __m512d a1 = a0, a2 = a0, a3 = a0;
  const uint64_t* b0 = bits;
  const uint64_t* b1 = bits + stride;
  const uint64_t* b2 = bits + 2 * stride;
  const uint64_t* b3 = bits + 3 * stride;
  for (size_t t = 0; t < words; ++t) {
    const double* p = w + 64 * t;
    const uint64_t w0 = b0[t], w1 = b1[t], w2 = b2[t], w3 = b3[t];
    for (int c = 0; c < 8; ++c) {
      const __m512d v = _mm512_loadu_pd(p + 8 * c);
      a0 = _mm512_mask_add_pd(_mm512_sub_pd(a0, v), (__mmask8)(w0 >> (8 * c)), a0, v);
      a1 = _mm512_mask_add_pd(_mm512_sub_pd(a1, v), (__mmask8)(w1 >> (8 * c)), a1, v);
      a2 = _mm512_mask_add_pd(_mm512_sub_pd(a2, v), (__mmask8)(w2 >> (8 * c)), a2, v);
      a3 = _mm512_mask_add_pd(_mm512_sub_pd(a3, v), (__mmask8)(w3 >> (8 * c)), a3, v);
    }
  }
  out[0] = _mm512_reduce_add_pd(a0);
  out[1] = _mm512_reduce_add_pd(a1);
  out[2] = _mm512_reduce_add_pd(a2);
  out[3] = _mm512_reduce_add_pd(a3);
}

double sign_dot(const uint64_t* bits, const double* w, size_t nwords) {
  __m512d acc = _mm512_setzero_pd();
  for (size_t t = 0; t < nwords; ++t) {
    const uint64_t b = bits[t];
    const double* p = w + 64 * t;
    for (int c = 0; c < 8; ++c) {
      const __m512d v = _mm512_loadu_pd(p + 8 * c);
      acc = _mm512_mask_add_pd(_mm512_sub_pd(acc, v), (__mmask8)(b >> (8 * c)), acc, v);
    }
  }
  return _mm512_reduce_add_pd(acc);
}

void sign_axpy4(const uint64_t* bits, size_t words, size_t stride,
                const double* coeff, double* t) {
  const __m512d c0 = _mm512_set1_pd(coeff[0]);
  const __m512d c1 = _mm512_set1_pd(coeff[1]);
  const __m512d c2 = _mm512_set1_pd(coeff[2]);
  const __m512d c3 = _mm512_set1_pd(coeff[3]);
  const uint64_t* b0 = bits;
  const uint64_t* b1 = bits + stride;
  const uint64_t* b2 = bits + 2 * stride;
  const uint64_t* b3 = bits + 3 * stride;
  for (size_t w = 0; w < words; ++w) {
    double* p = t + 64 * w;
    const uint64_t w0 = b0[w], w1 = b1[w], w2 = b2[w], w3 = b3[w];
    for (int c = 0; c < 8; ++c) {
      __m512d acc = _mm512_loadu_pd(p + 8 * c);
      acc = _mm512_mask_add_pd(_mm512_sub_pd(acc, c0), (__mmask8)(w0 >> (8 * c)), acc, c0);
      acc = _mm512_mask_add_pd(_mm512_sub_pd(acc, c1), (__mmask8)(w1 >> (8 * c)), acc, c1);
      acc = _mm512_mask_add_pd(_mm512_sub_pd(acc, c2), (__mmask8)(w2 >> (8 * c)), acc, c2);
      acc = _mm512_mask_add_pd(_mm512_sub_pd(acc, c3), (__mmask8)(w3 >> (8 * c)), acc, c3);
      _mm512_storeu_pd(p + 8 * c, acc);
    }
  }
}

#else

double sign_dot(const uint64_t* bits, const double* w, size_t nwords) {
  double acc = 0.0;
  for (size_t t = 0; t < nwords; ++t) {
    const uint64_t b = bits[t];
    const double* p = w + 64 * t;
    double local = 0.0;
    for (int k = 0; k < 64; ++k) {
      // flip the sign bit where the packed bit is clear
      const uint64_t mask = ((~(b >> k)) & 1ull) << 63;
      uint64_t pv;
      std::memcpy(&pv, &p[k], 8);
      pv ^= mask;
      double v;
      std::memcpy(&v, &pv, 8);
      local += v;
    }
    acc += local;
  }
  return acc;
}

#endif

void sign_axpy(const uint64_t* bits, double coeff, double* t, size_t nwords) {
  for (size_t w = 0; w < nwords; ++w) {
    const uint64_t b = bits[w];
    double* p = t + 64 * w;
    for (int k = 0; k < 64; ++k) {
      const double s = static_cast<double>((b >> k) & 1ull) * 2.0 - 1.0;
      p[k] += s * coeff;
    }
  }
}

}  // namespace

SensingOperator SensingOperator::gaussian(int n, int m, uint64_t seed) {
  if (n < 1 || m < 1) throw std::invalid_argument("gaussian_sensing: need n, m >= 1");
  SensingOperator op;
  op.n_ = n;
  op.m_ = m;
  op.seed_ = seed;
  op.ensemble_ = Ensemble::Gaussian;
  op.entry_scale_ = 1.0;  // entries carry the 1/sqrt(m) scale directly
  op.build_gaussian();
  return op;
}

void SensingOperator::build_gaussian() {
  const size_t len = packed_len();
  const double bytes = static_cast<double>(m_) * len * sizeof(double);
  if (bytes > kGaussianCacheBytesMax)
    throw std::invalid_argument(
        "gaussian_sensing: dense cache would exceed 2 GB; use the rademacher "
        "ensemble at this scale");
  dense_rows_.assign(static_cast<size_t>(m_) * len, 0.0);
  // Averaged symmetrization of an i.i.d. N(0, 1/m) draw: diagonal variance
  // 1/m, off-diagonal 1/(2m). Makes E||A(Z)||^2 = ||Z||_F^2, so the
  // restricted spectrum concentrates near 1 for m >> nr.
  const double sd_diag = 1.0 / std::sqrt(static_cast<double>(m_));
  const double sd_off = sd_diag / std::sqrt(2.0);
  for (int i = 0; i < m_; ++i) {
    Rng rng(row_seed(seed_, i));
    double* row = dense_rows_.data() + static_cast<size_t>(i) * len;
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k <= j; ++k)
        row[packed_index(k, j)] = (k == j ? sd_diag : sd_off) * rng.normal();
  }
}

SensingOperator SensingOperator::rademacher(int n, int m, uint64_t seed) {
  if (n < 1 || m < 1) throw std::invalid_argument("rademacher_sensing: need n, m >= 1");
  SensingOperator op;
  op.n_ = n;
  op.m_ = m;
  op.seed_ = seed;
  op.ensemble_ = Ensemble::Rademacher;
  op.entry_scale_ = 1.0 / std::sqrt(static_cast<double>(m));
  op.build_rademacher();
  return op;
}

void SensingOperator::build_rademacher() {
  const size_t words = words_per_row();
  sign_rows_.assign(static_cast<size_t>(m_) * words, 0);
  for (int i = 0; i < m_; ++i) {
    Rng rng(row_seed(seed_, i));
    uint64_t* row = sign_rows_.data() + static_cast<size_t>(i) * words;
    for (size_t w = 0; w < words; ++w) row[w] = rng.next_u64();
  }
}

SensingOperator SensingOperator::from_matrices(std::vector<SymMatrix> mats) {
  if (mats.empty()) throw std::invalid_argument("from_matrices: empty ensemble");
  SensingOperator op;
  op.n_ = mats[0].n();
  op.m_ = static_cast<int>(mats.size());
  op.ensemble_ = Ensemble::Explicit;
  const size_t len = op.packed_len();
  op.dense_rows_.assign(static_cast<size_t>(op.m_) * len, 0.0);
  for (int i = 0; i < op.m_; ++i) {
    if (mats[i].n() != op.n_) throw std::invalid_argument("from_matrices: mixed sizes");
    double* row = op.dense_rows_.data() + static_cast<size_t>(i) * len;
    for (int j = 0; j < op.n_; ++j)
      for (int k = 0; k <= j; ++k) row[packed_index(k, j)] = mats[i](k, j);
  }
  return op;
}

std::vector<double> SensingOperator::forward(const SymMatrix& x) const {
  if (x.n() != n_) throw std::invalid_argument("forward: dimension mismatch");
  std::vector<double> y(m_, 0.0);
  if (ensemble_ == Ensemble::Rademacher) {
    const size_t words = words_per_row();
    std::vector<double> w;
    pack_doubled(x, w, words * 64);
    int i = 0;
#if defined(__AVX512F__)
    for (; i + 4 <= m_; i += 4) {
      double out[4];
      sign_dot4(sign_rows_.data() + static_cast<size_t>(i) * words, words, words,
                w.data(), out);
      for (int j = 0; j < 4; ++j) y[i + j] = entry_scale_ * out[j];
    }
#endif
    for (; i < m_; ++i)
      y[i] = entry_scale_ *
             sign_dot(sign_rows_.data() + static_cast<size_t>(i) * words, w.data(), words);
  } else {
    const size_t len = packed_len();
    std::vector<double> w;
    pack_doubled(x, w, len);
    for (int i = 0; i < m_; ++i) {
      const double* row = dense_rows_.data() + static_cast<size_t>(i) * len;
      double acc = 0.0;
      for (size_t p = 0; p < len; ++p) acc += row[p] * w[p];
      y[i] = acc;
    }
  }
  return y;
}

SymMatrix SensingOperator::adjoint(const std::vector<double>& v) const {
  if (static_cast<int>(v.size()) != m_)
    throw std::invalid_argument("adjoint: dimension mismatch");
  SymMatrix g(n_);
  if (ensemble_ == Ensemble::Rademacher) {
    const size_t words = words_per_row();
    std::vector<double> t(words * 64, 0.0);
    int i = 0;
#if defined(__AVX512F__)
    for (; i + 4 <= m_; i += 4)
      sign_axpy4(sign_rows_.data() + static_cast<size_t>(i) * words, words, words,
                 v.data() + i, t.data());
#endif
    for (; i < m_; ++i) {
      if (v[i] == 0.0) continue;
      sign_axpy(sign_rows_.data() + static_cast<size_t>(i) * words, v[i], t.data(), words);
    }
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i <= j; ++i)
        g.set(i, j, entry_scale_ * t[packed_index(i, j)]);
  } else {
    const size_t len = packed_len();
    std::vector<double> t(len, 0.0);
    for (int i = 0; i < m_; ++i) {
      const double vi = v[i];
      if (vi == 0.0) continue;
      const double* row = dense_rows_.data() + static_cast<size_t>(i) * len;
      for (size_t p = 0; p < len; ++p) t[p] += vi * row[p];
    }
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i <= j; ++i) g.set(i, j, t[packed_index(i, j)]);
  }
  return g;
}

SymMatrix SensingOperator::measurement_matrix(int i) const {
  if (i < 0 || i >= m_) throw std::out_of_range("measurement_matrix: bad index");
  SymMatrix a(n_);
  if (ensemble_ == Ensemble::Rademacher) {
    const uint64_t* row = sign_rows_.data() + static_cast<size_t>(i) * words_per_row();
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k <= j; ++k) {
        const size_t p = packed_index(k, j);
        const double s = ((row[p / 64] >> (p % 64)) & 1ull) ? 1.0 : -1.0;
        a.set(k, j, s * entry_scale_);
      }
  } else {
    const double* row = dense_rows_.data() + static_cast<size_t>(i) * packed_len();
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k <= j; ++k) a.set(k, j, row[packed_index(k, j)]);
  }
  return a;
}

double SensingOperator::estimate_smoothness(int iters) const {
  // Power iteration on Z -> A^*(A(Z)) from a fixed seeded symmetric start.
  Rng rng(seed_ ^ 0xa5a5a5a5a5a5a5a5ull);
  SymMatrix z(n_);
  for (int j = 0; j < n_; ++j)
    for (int i = 0; i <= j; ++i) z.set(i, j, rng.normal());
  double nz = frobenius_norm(z);
  if (nz == 0.0) return 0.0;
  z *= 1.0 / nz;
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    SymMatrix az = adjoint(forward(z));
    lambda = frobenius_norm(az);
    if (lambda == 0.0) return 0.0;
    az *= 1.0 / lambda;
    z = std::move(az);
  }
  return lambda;
}

double SensingOperator::estimate_restricted_smoothness(int rank, int probes) const {
  if (rank < 1 || rank > n_)
    throw std::invalid_argument("estimate_restricted_smoothness: bad rank");
  // Maximum Rayleigh quotient of A^*A over seeded random rank-`rank` probes
  // (grams and gram differences). Random low-rank probes concentrate near the
  // restricted spectrum, so this tracks the RIP-style constant rather than
  // the global lambda_max.
  Rng rng(seed_ ^ 0x5a5a5a5a5a5a5a5aull);
  const int half = std::max(1, rank / 2);
  double hi = 0.0;
  for (int p = 0; p < probes; ++p) {
    Factor a(n_, half);
    Factor b(n_, half);
    for (size_t k = 0; k < a.size(); ++k) a.data()[k] = rng.normal();
    for (size_t k = 0; k < b.size(); ++k) b.data()[k] = rng.normal();
    SymMatrix z = gram(a);
    if (p % 2) z -= gram(b);
    const double nz = frobenius_norm(z);
    if (nz == 0.0) continue;
    z *= 1.0 / nz;
    double s = 0.0;
    for (double v : forward(z)) s += v * v;
    hi = std::max(hi, s);
  }
  return hi;
}

double SensingOperator::probe_restricted_curvature(int rank, int probes,
                                                   uint64_t seed) const {
  Rng rng(seed);
  double lo = std::numeric_limits<double>::infinity();
  for (int p = 0; p < probes; ++p) {
    Factor a(n_, rank);
    Factor b(n_, rank);
    for (size_t k = 0; k < a.size(); ++k) a.data()[k] = rng.normal();
    for (size_t k = 0; k < b.size(); ++k) b.data()[k] = rng.normal();
    SymMatrix z = gram(a);
    z -= gram(b);
    const double nz = frobenius_norm(z);
    if (nz == 0.0) continue;
    z *= 1.0 / nz;
    double s = 0.0;
    for (double v : forward(z)) s += v * v;
    lo = std::min(lo, s);
  }
  return lo;
}

void SensingOperator::save_fixture(const std::string& path,
                                   const std::vector<double>& y) const {
  if (ensemble_ == Ensemble::Explicit)
    throw std::invalid_argument("save_fixture: explicit ensembles do not round-trip");
  if (static_cast<int>(y.size()) != m_)
    throw std::invalid_argument("save_fixture: y length mismatch");
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "FGDSENSE " << (ensemble_ == Ensemble::Gaussian ? "gaussian" : "rademacher")
    << " " << n_ << " " << m_ << " " << seed_ << "\n"
    << std::setprecision(17);
  for (double v : y) f << v << "\n";
}

std::pair<SensingOperator, std::vector<double>> SensingOperator::load_fixture(
    const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::string magic, tag;
  int n = 0, m = 0;
  uint64_t seed = 0;
  if (!(f >> magic >> tag >> n >> m >> seed) || magic != "FGDSENSE")
    throw std::runtime_error("bad sensing fixture header: " + path);
  std::vector<double> y(m);
  for (int i = 0; i < m; ++i)
    if (!(f >> y[i])) throw std::runtime_error("truncated sensing fixture: " + path);
  if (tag == "gaussian") return {gaussian(n, m, seed), std::move(y)};
  if (tag == "rademacher") return {rademacher(n, m, seed), std::move(y)};
  throw std::runtime_error("unknown ensemble tag in fixture: " + tag);
}

Objective sensing_loss(std::shared_ptr<const SensingOperator> op,
                       std::vector<double> y, int restricted_rank) {
  if (!op) throw std::invalid_argument("sensing_loss: null operator");
  if (static_cast<int>(y.size()) != op->m())
    throw std::invalid_argument("sensing_loss: y length mismatch");
  auto yv = std::make_shared<const std::vector<double>>(std::move(y));

  Objective obj;
  obj.value = [op, yv](const SymMatrix& x) {
    const std::vector<double> ax = op->forward(x);
    double acc = 0.0;
    for (size_t i = 0; i < ax.size(); ++i) {
      const double d = (*yv)[i] - ax[i];
      acc += d * d;
    }
    return 0.5 * acc;
  };
  obj.gradient = [op, yv](const SymMatrix& x) {
    std::vector<double> res = op->forward(x);
    for (size_t i = 0; i < res.size(); ++i) res[i] -= (*yv)[i];
    return op->adjoint(res);  // -A^*(y - A(X))
  };
  obj.value_and_gradient = [op, yv](const SymMatrix& x) {
    std::vector<double> res = op->forward(x);
    double acc = 0.0;
    for (size_t i = 0; i < res.size(); ++i) {
      res[i] -= (*yv)[i];
      acc += res[i] * res[i];
    }
    return std::make_pair(0.5 * acc, op->adjoint(res));
  };
  if (restricted_rank > 0) {
    const int k = std::min(2 * restricted_rank, op->n());
    obj.smoothness = op->estimate_restricted_smoothness(k);
    obj.smoothness_global = op->estimate_smoothness();
    obj.rsc = RestrictedConvexity{
        op->probe_restricted_curvature(restricted_rank, 40, op->seed() ^ 0x333ull),
        restricted_rank};
  } else {
    obj.smoothness = op->estimate_smoothness();
  }
  return obj;
}

}  // namespace fgd
