#include "fgd/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace fgd {
namespace {

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return f;
}

void write_u64(std::ofstream& f, uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  f.write(reinterpret_cast<const char*>(buf), 8);
}

uint64_t read_u64(std::ifstream& f) {
  unsigned char buf[8];
  f.read(reinterpret_cast<char*>(buf), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return v;
}

void write_doubles(std::ofstream& f, const double* p, size_t count) {
  for (size_t k = 0; k < count; ++k) {
    uint64_t bits;
    std::memcpy(&bits, &p[k], 8);
    write_u64(f, bits);
  }
}

void read_doubles(std::ifstream& f, double* p, size_t count) {
  for (size_t k = 0; k < count; ++k) {
    const uint64_t bits = read_u64(f);
    std::memcpy(&p[k], &bits, 8);
  }
}

}  // namespace

void save_text(const SymMatrix& a, const std::string& path) {
  auto f = open_out(path, false);
  f << a.n() << "\n" << std::setprecision(17);
  for (int i = 0; i < a.n(); ++i) {
    for (int j = 0; j < a.n(); ++j) f << (j ? " " : "") << a(i, j);
    f << "\n";
  }
}

void save_text(const Factor& u, const std::string& path) {
  auto f = open_out(path, false);
  f << u.n() << " " << u.r() << "\n" << std::setprecision(17);
  for (int i = 0; i < u.n(); ++i) {
    for (int k = 0; k < u.r(); ++k) f << (k ? " " : "") << u(i, k);
    f << "\n";
  }
}

SymMatrix load_sym_text(const std::string& path) {
  auto f = open_in(path, false);
  int n = 0;
  if (!(f >> n) || n < 1) throw std::runtime_error("bad matrix header: " + path);
  std::vector<double> full(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!(f >> full[static_cast<size_t>(i) + static_cast<size_t>(j) * n]))
        throw std::runtime_error("truncated matrix file: " + path);
  return SymMatrix::symmetrized(n, full);
}

Factor load_factor_text(const std::string& path) {
  auto f = open_in(path, false);
  int n = 0;
  int r = 0;
  if (!(f >> n >> r) || n < 1 || r < 1)
    throw std::runtime_error("bad factor header: " + path);
  Factor u(n, r);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < r; ++k)
      if (!(f >> u(i, k))) throw std::runtime_error("truncated factor file: " + path);
  return u;
}

void save_binary(const SymMatrix& a, const std::string& path) {
  auto f = open_out(path, true);
  f.write("SYMF", 4);
  write_u64(f, static_cast<uint64_t>(a.n()));
  write_doubles(f, a.data(), a.size());
}

void save_binary(const Factor& u, const std::string& path) {
  auto f = open_out(path, true);
  f.write("FACF", 4);
  write_u64(f, static_cast<uint64_t>(u.n()));
  write_u64(f, static_cast<uint64_t>(u.r()));
  write_doubles(f, u.data(), u.size());
}

SymMatrix load_sym_binary(const std::string& path) {
  auto f = open_in(path, true);
  char magic[4];
  f.read(magic, 4);
  if (std::memcmp(magic, "SYMF", 4) != 0)
    throw std::runtime_error("bad SYMF magic: " + path);
  const int n = static_cast<int>(read_u64(f));
  std::vector<double> full(static_cast<size_t>(n) * n);
  read_doubles(f, full.data(), full.size());
  if (!f) throw std::runtime_error("truncated SYMF file: " + path);
  return SymMatrix::symmetrized(n, full);
}

Factor load_factor_binary(const std::string& path) {
  auto f = open_in(path, true);
  char magic[4];
  f.read(magic, 4);
  if (std::memcmp(magic, "FACF", 4) != 0)
    throw std::runtime_error("bad FACF magic: " + path);
  const int n = static_cast<int>(read_u64(f));
  const int r = static_cast<int>(read_u64(f));
  Factor u(n, r);
  read_doubles(f, u.data(), u.size());
  if (!f) throw std::runtime_error("truncated FACF file: " + path);
  return u;
}

}  // namespace fgd
