#include "fgd/trace.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace fgd {

void IterationTrace::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "iter,f,grad_factor_norm,dist,rel_err,eta,elapsed_s\n"
    << std::setprecision(17);
  for (const TraceRecord& r : records)
    f << r.iter << "," << r.f << "," << r.grad_factor_norm << "," << r.dist
      << "," << r.rel_err << "," << r.eta << "," << r.elapsed_s << "\n";
}

}  // namespace fgd
