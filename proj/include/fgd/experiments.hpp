#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fgd/matrix.hpp"
#include "fgd/sensing.hpp"
#include "fgd/solver.hpp"

namespace fgd {

// Declarative experiment description; parsed from a key-value text file
// and/or assembled from CLI flags.
struct ExperimentSpec {
  std::string kind = "sensing";  // sensing lowrank qst highrank sweep-step
                                 // sweep-cond compare-svp audit
  std::string name;              // filename tag; defaults to kind
  int n = 64;
  int r = 3;
  double c_sam = 6.0;                // measurements = c_sam * n * r
  std::vector<double> spectrum;      // descending; empty -> ones(r)
  bool trace_normalize = false;      // trace(X*) = 1
  std::vector<uint64_t> seeds = {1};
  std::string step = "fixed";        // fixed | adaptive | const:<v>
  std::string init = "spectral";     // spectral | pgd-switch | random
  std::string ensemble = "gaussian"; // gaussian | rademacher
  double tol = 5e-6;
  int max_iters = 500;
  double ball_radius = 0.0;          // > 0 enables the Frobenius-ball projection
  std::string out_dir = ".";
  int jobs = 1;
  bool zero_timing = false;          // write zeros in timing columns (bitwise reруns)

  void validate() const;
};

ExperimentSpec load_spec_file(const std::string& path);

// Random orthonormal basis (seeded), X* = V diag(spectrum) V^T, U* the
// rank-r factor of the leading r modes. With trace_normalize the spectrum is
// rescaled to unit trace first.
std::pair<SymMatrix, Factor> make_ground_truth(int n, std::vector<double> spectrum,
                                               int r, uint64_t seed,
                                               bool trace_normalize = false);

struct RunSummary {
  std::string label;   // solver or sweep arm, e.g. "fgd", "svp", "const:0.05"
  uint64_t seed = 0;
  std::string status;  // converged | unconverged | diverged
  int iterations = 0;
  double final_rel_err = 0.0;
  double median_iter_s = 0.0;
  double total_s = 0.0;
};

// Runs every seed of the experiment, writes one trace CSV per run plus
// summary.csv into out_dir. Returns 0 unless the harness itself fails.
int run_experiment(const ExperimentSpec& spec);

// FGD vs SVP on identical instances with shared init and step. Writes the
// same artifacts as run_experiment and returns the per-run rows.
std::vector<RunSummary> compare_solvers(const ExperimentSpec& spec);

}  // namespace fgd
