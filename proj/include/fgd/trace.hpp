#pragma once

#include <limits>
#include <string>
#include <vector>

namespace fgd {

// One record per iteration; dist / rel_err are NaN when no reference was
// supplied. CSV schema: iter,f,grad_factor_norm,dist,rel_err,eta,elapsed_s
struct TraceRecord {
  int iter = 0;
  double f = 0.0;
  double grad_factor_norm = 0.0;
  double dist = std::numeric_limits<double>::quiet_NaN();
  double rel_err = std::numeric_limits<double>::quiet_NaN();
  double eta = 0.0;
  double elapsed_s = 0.0;
};

struct IterationTrace {
  std::vector<TraceRecord> records;

  void write_csv(const std::string& path) const;
};

}  // namespace fgd
