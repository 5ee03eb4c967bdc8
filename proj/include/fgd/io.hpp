#pragma once

#include <string>

#include "fgd/matrix.hpp"

namespace fgd {

// Text fixture format: first line "n" (SymMatrix) or "n r" (Factor),
// followed by whitespace-separated rows. Binary variants carry a 4-byte
// magic ("SYMF" / "FACF"), little-endian uint64 dims, then raw doubles.

void save_text(const SymMatrix& a, const std::string& path);
void save_text(const Factor& u, const std::string& path);
SymMatrix load_sym_text(const std::string& path);
Factor load_factor_text(const std::string& path);

void save_binary(const SymMatrix& a, const std::string& path);
void save_binary(const Factor& u, const std::string& path);
SymMatrix load_sym_binary(const std::string& path);
Factor load_factor_binary(const std::string& path);

}  // namespace fgd
