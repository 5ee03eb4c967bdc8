#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fgd {

// Dense real symmetric n x n matrix. Full square storage, column-major.
// Symmetry is enforced on mutation: set() writes both triangles, and the
// symmetrized factory averages the two triangles of arbitrary input.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n) : n_(check_dim(n)), data_(static_cast<size_t>(n) * n, 0.0) {}

  static SymMatrix identity(int n) {
    SymMatrix a(n);
    for (int i = 0; i < n; ++i) a.data_[idx(i, i, n)] = 1.0;
    return a;
  }

  // Builds from a full column-major n*n buffer, averaging A and A^T.
  static SymMatrix symmetrized(int n, const std::vector<double>& full) {
    if (full.size() != static_cast<size_t>(n) * n)
      throw std::invalid_argument("SymMatrix::symmetrized: bad buffer size");
    SymMatrix a(n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i <= j; ++i) {
        const double v = 0.5 * (full[idx(i, j, n)] + full[idx(j, i, n)]);
        a.data_[idx(i, j, n)] = v;
        a.data_[idx(j, i, n)] = v;
      }
    return a;
  }

  int n() const { return n_; }

  double operator()(int i, int j) const { return data_[idx(i, j, n_)]; }

  void set(int i, int j, double v) {
    data_[idx(i, j, n_)] = v;
    data_[idx(j, i, n_)] = v;
  }

  void add_to(int i, int j, double v) {
    data_[idx(i, j, n_)] += v;
    if (i != j) data_[idx(j, i, n_)] += v;
  }

  const double* data() const { return data_.data(); }
  size_t size() const { return data_.size(); }

  SymMatrix& operator+=(const SymMatrix& other) {
    require_same(other);
    for (size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
    return *this;
  }
  SymMatrix& operator-=(const SymMatrix& other) {
    require_same(other);
    for (size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
    return *this;
  }
  SymMatrix& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < n_; ++i) t += data_[idx(i, i, n_)];
    return t;
  }

 private:
  static int check_dim(int n) {
    if (n < 1) throw std::invalid_argument("SymMatrix: n must be >= 1");
    return n;
  }
  static size_t idx(int i, int j, int n) {
    return static_cast<size_t>(i) + static_cast<size_t>(j) * n;
  }
  void require_same(const SymMatrix& other) const {
    if (other.n_ != n_) throw std::invalid_argument("SymMatrix: shape mismatch");
  }

  int n_ = 0;
  std::vector<double> data_;
};

// Dense n x r factor, column-major. gram(U) = U U^T is symmetric by
// construction and has rank <= r.
class Factor {
 public:
  Factor() = default;
  Factor(int n, int r)
      : n_(check(n, r)), r_(r), data_(static_cast<size_t>(n) * r, 0.0) {}

  int n() const { return n_; }
  int r() const { return r_; }

  double operator()(int i, int k) const { return data_[at(i, k)]; }
  double& operator()(int i, int k) { return data_[at(i, k)]; }

  const double* col(int k) const { return data_.data() + static_cast<size_t>(k) * n_; }
  double* col(int k) { return data_.data() + static_cast<size_t>(k) * n_; }

  const double* data() const { return data_.data(); }
  double* data() { return data_.data(); }
  size_t size() const { return data_.size(); }

  Factor& operator+=(const Factor& other) {
    require_same(other);
    for (size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
    return *this;
  }
  Factor& operator-=(const Factor& other) {
    require_same(other);
    for (size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
    return *this;
  }
  Factor& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }
  friend Factor operator+(Factor a, const Factor& b) { return a += b; }
  friend Factor operator-(Factor a, const Factor& b) { return a -= b; }
  friend Factor operator*(Factor a, double s) { return a *= s; }
  friend Factor operator*(double s, Factor a) { return a *= s; }

 private:
  static int check(int n, int r) {
    if (n < 1 || r < 1 || r > n) throw std::invalid_argument("Factor: need 1 <= r <= n");
    return n;
  }
  size_t at(int i, int k) const {
    return static_cast<size_t>(i) + static_cast<size_t>(k) * n_;
  }
  void require_same(const Factor& other) const {
    if (other.n_ != n_ || other.r_ != r_)
      throw std::invalid_argument("Factor: shape mismatch");
  }

  int n_ = 0;
  int r_ = 0;
  std::vector<double> data_;
};

// Small dense r x r matrix; carries the optimal Procrustes rotation.
class Rotation {
 public:
  Rotation() = default;
  explicit Rotation(int r) : r_(r), data_(static_cast<size_t>(r) * r, 0.0) {}

  static Rotation identity(int r) {
    Rotation m(r);
    for (int i = 0; i < r; ++i) m(i, i) = 1.0;
    return m;
  }

  int r() const { return r_; }
  double operator()(int i, int j) const { return data_[static_cast<size_t>(i) + static_cast<size_t>(j) * r_]; }
  double& operator()(int i, int j) { return data_[static_cast<size_t>(i) + static_cast<size_t>(j) * r_]; }

 private:
  int r_ = 0;
  std::vector<double> data_;
};

// trace(A^T B)
inline double inner(const SymMatrix& a, const SymMatrix& b) {
  if (a.n() != b.n()) throw std::invalid_argument("inner: shape mismatch");
  double s = 0.0;
  const double* pa = a.data();
  const double* pb = b.data();
  for (size_t k = 0; k < a.size(); ++k) s += pa[k] * pb[k];
  return s;
}

inline double inner(const Factor& a, const Factor& b) {
  if (a.n() != b.n() || a.r() != b.r()) throw std::invalid_argument("inner: shape mismatch");
  double s = 0.0;
  const double* pa = a.data();
  const double* pb = b.data();
  for (size_t k = 0; k < a.size(); ++k) s += pa[k] * pb[k];
  return s;
}

inline double frobenius_norm(const SymMatrix& a) { return std::sqrt(inner(a, a)); }
inline double frobenius_norm(const Factor& a) { return std::sqrt(inner(a, a)); }

// U U^T
inline SymMatrix gram(const Factor& u) {
  const int n = u.n();
  SymMatrix x(n);
  for (int k = 0; k < u.r(); ++k) {
    const double* c = u.col(k);
    for (int j = 0; j < n; ++j) {
      const double cj = c[j];
      if (cj == 0.0) continue;
      for (int i = j; i < n; ++i) x.add_to(i, j, c[i] * cj);
    }
  }
  return x;
}

// S * U for symmetric S
inline Factor apply(const SymMatrix& s, const Factor& u) {
  if (s.n() != u.n()) throw std::invalid_argument("apply: shape mismatch");
  const int n = u.n();
  Factor out(n, u.r());
  const double* sd = s.data();
  for (int k = 0; k < u.r(); ++k) {
    const double* uc = u.col(k);
    double* oc = out.col(k);
    for (int j = 0; j < n; ++j) {
      const double uj = uc[j];
      if (uj == 0.0) continue;
      const double* scol = sd + static_cast<size_t>(j) * n;
      for (int i = 0; i < n; ++i) oc[i] += scol[i] * uj;
    }
  }
  return out;
}

// A^T B for factors sharing n; returns the r_a x r_b block, column-major.
inline std::vector<double> cross_gram(const Factor& a, const Factor& b) {
  if (a.n() != b.n()) throw std::invalid_argument("cross_gram: shape mismatch");
  std::vector<double> w(static_cast<size_t>(a.r()) * b.r(), 0.0);
  for (int j = 0; j < b.r(); ++j)
    for (int i = 0; i < a.r(); ++i) {
      double s = 0.0;
      const double* ca = a.col(i);
      const double* cb = b.col(j);
      for (int k = 0; k < a.n(); ++k) s += ca[k] * cb[k];
      w[static_cast<size_t>(i) + static_cast<size_t>(j) * a.r()] = s;
    }
  return w;
}

// V * R for r x r rotation R
inline Factor rotate(const Factor& v, const Rotation& rot) {
  if (rot.r() != v.r()) throw std::invalid_argument("rotate: shape mismatch");
  const int n = v.n();
  const int r = v.r();
  Factor out(n, r);
  for (int j = 0; j < r; ++j) {
    double* oc = out.col(j);
    for (int k = 0; k < r; ++k) {
      const double w = rot(k, j);
      if (w == 0.0) continue;
      const double* vc = v.col(k);
      for (int i = 0; i < n; ++i) oc[i] += vc[i] * w;
    }
  }
  return out;
}

inline bool all_finite(const Factor& u) {
  const double* p = u.data();
  for (size_t k = 0; k < u.size(); ++k)
    if (!std::isfinite(p[k])) return false;
  return true;
}

inline bool all_finite(const SymMatrix& a) {
  const double* p = a.data();
  for (size_t k = 0; k < a.size(); ++k)
    if (!std::isfinite(p[k])) return false;
  return true;
}

}  // namespace fgd
