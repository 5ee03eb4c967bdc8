#pragma once

#include "fgd/matrix.hpp"

namespace fgd {

struct DistResult {
  double value = 0.0;  // min over orthonormal R of ||U - V R||_F
  Rotation rotation;   // the minimizing R = P Q^T from the SVD of V^T U
};

// Rotation-invariant factor distance. When V^T U is rank deficient the
// minimizing R is not unique; any valid P Q^T is returned (the null block of
// P is completed to an orthonormal basis).
DistResult dist(const Factor& u, const Factor& v);

// Distance value only.
double dist_value(const Factor& u, const Factor& v);

}  // namespace fgd
