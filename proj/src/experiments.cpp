#include "fgd/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fgd/audit.hpp"
#include "fgd/dist.hpp"
#include "fgd/eig.hpp"
#include "fgd/init.hpp"
#include "fgd/rng.hpp"
#include "fgd/svp.hpp"

namespace fgd {
namespace {

constexpr uint64_t kOperatorSeedSalt = 0x51e55ed5eed5ull;

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::Unconverged: return "unconverged";
    case SolveStatus::Diverged: return "diverged";
  }
  return "unknown";
}

StepRule parse_step(const std::string& s) {
  if (s == "fixed") return StepRule::fixed();
  if (s == "adaptive") return StepRule::adaptive();
  if (s.rfind("const:", 0) == 0) {
    const double v = std::stod(s.substr(6));
    if (!(v > 0.0)) throw std::invalid_argument("step constant must be > 0");
    return StepRule::constant(v);
  }
  throw std::invalid_argument("unknown step rule: " + s);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t h = v.size() / 2;
  return (v.size() % 2) ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double median_iteration_seconds(const IterationTrace& trace) {
  std::vector<double> deltas;
  for (size_t k = 1; k < trace.records.size(); ++k)
    deltas.push_back(trace.records[k].elapsed_s - trace.records[k - 1].elapsed_s);
  return median(std::move(deltas));
}

void write_trace(IterationTrace trace, const std::string& path, bool zero_timing) {
  if (zero_timing)
    for (TraceRecord& r : trace.records) r.elapsed_s = 0.0;
  trace.write_csv(path);
}

std::string arm_file(const ExperimentSpec& spec, const std::string& arm,
                     uint64_t seed, const std::string& prefix = "") {
  std::ostringstream os;
  os << spec.out_dir << "/" << prefix << spec.name;
  if (!arm.empty()) os << "_" << arm;
  os << "_" << seed << ".csv";
  return os.str();
}

struct Instance {
  SymMatrix x_star;
  Factor u_star;
  Objective obj;
  std::shared_ptr<const SensingOperator> op;  // null for quadratic kinds
};

Instance build_instance(const ExperimentSpec& spec, uint64_t seed, bool quadratic) {
  Instance inst;
  std::vector<double> spectrum = spec.spectrum;
  if (spectrum.empty()) spectrum.assign(spec.r, 1.0);
  auto [x_star, u_star] =
      make_ground_truth(spec.n, spectrum, spec.r, seed, spec.trace_normalize);
  inst.x_star = std::move(x_star);
  inst.u_star = std::move(u_star);

  if (quadratic) {
    inst.obj = quad_loss(inst.x_star);
    return inst;
  }
  const int m = static_cast<int>(std::lround(spec.c_sam * spec.n * spec.r));
  auto op = std::make_shared<SensingOperator>(
      spec.ensemble == "rademacher"
          ? SensingOperator::rademacher(spec.n, m, seed ^ kOperatorSeedSalt)
          : SensingOperator::gaussian(spec.n, m, seed ^ kOperatorSeedSalt));
  inst.obj = sensing_loss(op, op->forward(inst.x_star), spec.r);
  inst.op = op;
  return inst;
}

InitReport make_init(const ExperimentSpec& spec, const Instance& inst,
                     uint64_t seed, const Reference& ref) {
  if (spec.init == "spectral")
    return init_spectral(inst.obj, spec.n, spec.r, &ref);
  if (spec.init == "pgd-switch")
    return init_pgd_switch(inst.obj, spec.n, spec.r, 1e-3, &ref);
  if (spec.init == "random") {
    // Scale so ||U0 U0^T||_2 is on the order of ||X*||_2.
    const double scale = std::sqrt(std::max(spectral_norm(inst.x_star, 1e-6), 1e-12));
    InitReport rep;
    rep.u0 = init_random(spec.n, spec.r, scale, seed);
    rep.x0 = gram(rep.u0);
    rep.dist_to_ref = dist_value(rep.u0, ref.u_star);
    return rep;
  }
  throw std::invalid_argument("unknown init: " + spec.init);
}

RunSummary summarize(const std::string& label, uint64_t seed, SolveStatus status,
                     int iterations, const IterationTrace& trace, bool zero_timing) {
  RunSummary row;
  row.label = label;
  row.seed = seed;
  row.status = status_name(status);
  row.iterations = iterations;
  if (!trace.records.empty()) {
    row.final_rel_err = trace.records.back().rel_err;
    if (!zero_timing) {
      row.median_iter_s = median_iteration_seconds(trace);
      row.total_s = trace.records.back().elapsed_s;
    }
  }
  return row;
}

void write_summary(const ExperimentSpec& spec, std::vector<RunSummary> rows) {
  std::sort(rows.begin(), rows.end(), [](const RunSummary& a, const RunSummary& b) {
    return a.seed != b.seed ? a.seed < b.seed : a.label < b.label;
  });

  std::ofstream f(spec.out_dir + "/summary.csv");
  if (!f) throw std::runtime_error("cannot write summary.csv in " + spec.out_dir);
  f << "# kind=" << spec.kind << " n=" << spec.n << " r=" << spec.r
    << " csam=" << spec.c_sam << " ensemble=" << spec.ensemble
    << " step=" << spec.step << " init=" << spec.init << " tol=" << spec.tol
    << "\n";
  f << "# note: i.i.d. gaussian/rademacher ensembles; desk-scale runs target "
       "qualitative orderings across solvers, not absolute figures\n";
  f << "label,seed,status,iterations,final_rel_err,median_iter_s,total_s\n"
    << std::setprecision(17);
  for (const RunSummary& r : rows)
    f << r.label << "," << r.seed << "," << r.status << "," << r.iterations
      << "," << r.final_rel_err << "," << r.median_iter_s << "," << r.total_s
      << "\n";

  // Aggregate block: median over seeds per label.
  std::vector<std::string> labels;
  for (const RunSummary& r : rows)
    if (std::find(labels.begin(), labels.end(), r.label) == labels.end())
      labels.push_back(r.label);
  for (const std::string& label : labels) {
    std::vector<double> err, iters, iter_s, total;
    for (const RunSummary& r : rows)
      if (r.label == label) {
        err.push_back(r.final_rel_err);
        iters.push_back(r.iterations);
        iter_s.push_back(r.median_iter_s);
        total.push_back(r.total_s);
      }
    f << label << ",median,," << median(iters) << "," << median(err) << ","
      << median(iter_s) << "," << median(total) << "\n";
  }
}

// Runs fn(seed) over all seeds, optionally on spec.jobs threads; results are
// flattened in seed order afterwards.
std::vector<RunSummary> for_each_seed(
    const ExperimentSpec& spec,
    const std::function<std::vector<RunSummary>(uint64_t)>& fn) {
  std::vector<std::vector<RunSummary>> per_seed(spec.seeds.size());
  if (spec.jobs <= 1 || spec.seeds.size() <= 1) {
    for (size_t i = 0; i < spec.seeds.size(); ++i) per_seed[i] = fn(spec.seeds[i]);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min<int>(spec.jobs, static_cast<int>(spec.seeds.size()));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&]() {
        for (size_t i = next.fetch_add(1); i < spec.seeds.size();
             i = next.fetch_add(1))
          per_seed[i] = fn(spec.seeds[i]);
      });
    for (std::thread& t : pool) t.join();
  }
  std::vector<RunSummary> rows;
  for (auto& chunk : per_seed) rows.insert(rows.end(), chunk.begin(), chunk.end());
  return rows;
}

std::vector<RunSummary> solve_kind(const ExperimentSpec& spec, uint64_t seed) {
  const bool quadratic = spec.kind == "lowrank" || spec.kind == "sweep-cond";
  const Instance inst = build_instance(spec, seed, quadratic);
  const Reference ref{inst.x_star, inst.u_star};
  const InitReport init = make_init(spec, inst, seed, ref);
  init.write_summary(spec.out_dir + "/init_" + spec.name + "_" +
                     std::to_string(seed) + ".txt");

  SolverConfig cfg;
  cfg.rank = spec.r;
  cfg.max_iters = spec.max_iters;
  cfg.tol = spec.tol;
  cfg.step = parse_step(spec.step);
  if (spec.ball_radius > 0.0) cfg.constraint = FrobeniusBall{spec.ball_radius};

  const SolveResult res = run(inst.obj, init.u0, cfg, &ref);
  write_trace(res.trace, arm_file(spec, "", seed), spec.zero_timing);
  return {summarize("fgd", seed, res.status, res.iterations, res.trace,
                    spec.zero_timing)};
}

std::vector<RunSummary> sweep_step_kind(const ExperimentSpec& spec, uint64_t seed) {
  const Instance inst = build_instance(spec, seed, false);
  const Reference ref{inst.x_star, inst.u_star};
  const InitReport init = init_spectral(inst.obj, spec.n, spec.r, &ref);
  const double eta_rule = step_size_fixed(inst.obj, init.x0).eta;

  std::vector<std::pair<std::string, StepRule>> arms = {
      {"fixed", StepRule::fixed()},
      {"const-aggressive", StepRule::constant(50.0 * eta_rule)},
      {"const-timid", StepRule::constant(eta_rule / 100.0)},
  };

  std::vector<RunSummary> rows;
  for (const auto& [label, rule] : arms) {
    SolverConfig cfg;
    cfg.rank = spec.r;
    cfg.max_iters = spec.max_iters;
    cfg.tol = spec.tol;
    cfg.step = rule;
    const SolveResult res = run(inst.obj, init.u0, cfg, &ref);
    write_trace(res.trace, arm_file(spec, label, seed), spec.zero_timing);
    rows.push_back(
        summarize(label, seed, res.status, res.iterations, res.trace, spec.zero_timing));
  }
  return rows;
}

std::vector<RunSummary> sweep_cond_kind(const ExperimentSpec& spec, uint64_t seed) {
  std::vector<RunSummary> rows;
  for (double sigma3 : {1.0, 10.0, 20.0}) {
    ExperimentSpec arm = spec;
    arm.spectrum = {100.0, 100.0, sigma3};
    arm.init = "random";
    const Instance inst = build_instance(arm, seed, true);
    const Reference ref{inst.x_star, inst.u_star};
    const InitReport init = make_init(arm, inst, seed, ref);

    SolverConfig cfg;
    cfg.rank = spec.r;
    cfg.max_iters = spec.max_iters;
    cfg.tol = spec.tol;
    cfg.step = parse_step(spec.step);
    const SolveResult res = run(inst.obj, init.u0, cfg, &ref);

    std::ostringstream label;
    label << "sigma3:" << sigma3;
    write_trace(res.trace, arm_file(spec, "sigma3-" + std::to_string(static_cast<int>(sigma3)), seed),
                spec.zero_timing);
    rows.push_back(summarize(label.str(), seed, res.status, res.iterations,
                             res.trace, spec.zero_timing));
  }
  return rows;
}

std::vector<RunSummary> compare_kind(const ExperimentSpec& spec, uint64_t seed) {
  const Instance inst = build_instance(spec, seed, false);
  const Reference ref{inst.x_star, inst.u_star};
  const InitReport init = init_spectral(inst.obj, spec.n, spec.r, &ref);
  const double eta = step_size_fixed(inst.obj, gram(init.u0)).eta;

  std::vector<RunSummary> rows;
  {
    SolverConfig cfg;
    cfg.rank = spec.r;
    cfg.max_iters = spec.max_iters;
    cfg.tol = spec.tol;
    cfg.step = StepRule::constant(eta);
    const SolveResult res = run(inst.obj, init.u0, cfg, &ref);
    write_trace(res.trace, arm_file(spec, "fgd", seed), spec.zero_timing);
    rows.push_back(
        summarize("fgd", seed, res.status, res.iterations, res.trace, spec.zero_timing));
  }
  {
    SvpConfig cfg;
    cfg.rank = spec.r;
    cfg.max_iters = spec.max_iters;
    cfg.tol = spec.tol;
    cfg.eta = eta;  // shared step; 0 would select the standard 1/M
    const SvpResult res = svp_run(inst.obj, gram(init.u0), cfg, &ref);
    write_trace(res.trace, arm_file(spec, "svp", seed), spec.zero_timing);
    rows.push_back(
        summarize("svp", seed, res.status, res.iterations, res.trace, spec.zero_timing));
  }
  return rows;
}

std::vector<RunSummary> audit_kind(const ExperimentSpec& spec, uint64_t seed) {
  Instance inst = build_instance(spec, seed, false);
  const Reference ref{inst.x_star, inst.u_star};
  const InitReport init = init_spectral(inst.obj, spec.n, spec.r, &ref);

  SolverConfig cfg;
  cfg.rank = spec.r;
  cfg.max_iters = spec.max_iters;
  cfg.tol = spec.tol;
  cfg.step = parse_step(spec.step);
  const SolveResult res = run(inst.obj, init.u0, cfg, &ref);
  write_trace(res.trace, arm_file(spec, "", seed), spec.zero_timing);

  AuditReport report = audit_ball_membership(init.u0, inst.u_star, inst.x_star,
                                             BallMode::A1);
  report.append(audit_sandwich(res.factor, inst.u_star, inst.x_star));
  report.append(
      audit_step_equivalence(inst.obj, res.factor, init.x0, inst.x_star));
  report.append(audit_descent(inst.obj, res.factor, inst.u_star, inst.x_star,
                              {res.trace.records.back().eta, StepProvenance::FixedAtX0}));
  report.append(audit_contraction_rate(res.trace, inst.obj, inst.x_star, inst.u_star));
  report.write_csv(arm_file(spec, "", seed, "audit_"));

  std::cout << spec.name << " seed " << seed << ": " << report.checks.size()
            << " checks, worst margin " << report.worst_margin() << "\n";
  return {summarize("fgd", seed, res.status, res.iterations, res.trace,
                    spec.zero_timing)};
}

}  // namespace

void ExperimentSpec::validate() const {
  if (n < 1 || r < 1 || r > n) throw std::invalid_argument("spec: need 1 <= r <= n");
  if (c_sam <= 0.0 && kind != "lowrank" && kind != "sweep-cond")
    throw std::invalid_argument("spec: c_sam must be > 0");
  if (tol <= 0.0 || max_iters < 1) throw std::invalid_argument("spec: bad tol/max_iters");
  if (seeds.empty()) throw std::invalid_argument("spec: need at least one seed");
  if (!spectrum.empty()) {
    if (static_cast<int>(spectrum.size()) < r)
      throw std::invalid_argument("spec: spectrum shorter than r");
    for (size_t i = 1; i < spectrum.size(); ++i)
      if (spectrum[i] > spectrum[i - 1] || spectrum[i] < 0.0)
        throw std::invalid_argument("spec: spectrum must be nonnegative descending");
  }
  (void)parse_step(step);
}

ExperimentSpec load_spec_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open spec file: " + path);
  ExperimentSpec spec;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "kind") is >> spec.kind;
    else if (key == "name") is >> spec.name;
    else if (key == "n") is >> spec.n;
    else if (key == "r") is >> spec.r;
    else if (key == "csam") is >> spec.c_sam;
    else if (key == "trace_normalize") { int v; is >> v; spec.trace_normalize = v != 0; }
    else if (key == "zero_timing") { int v; is >> v; spec.zero_timing = v != 0; }
    else if (key == "step") is >> spec.step;
    else if (key == "init") is >> spec.init;
    else if (key == "ensemble") is >> spec.ensemble;
    else if (key == "tol") is >> spec.tol;
    else if (key == "max_iters") is >> spec.max_iters;
    else if (key == "ball_radius") is >> spec.ball_radius;
    else if (key == "out") is >> spec.out_dir;
    else if (key == "jobs") is >> spec.jobs;
    else if (key == "spectrum") {
      spec.spectrum.clear();
      double v;
      while (is >> v) spec.spectrum.push_back(v);
    } else if (key == "seeds") {
      spec.seeds.clear();
      uint64_t v;
      while (is >> v) spec.seeds.push_back(v);
    } else {
      throw std::runtime_error("unknown spec key: " + key);
    }
  }
  return spec;
}

std::pair<SymMatrix, Factor> make_ground_truth(int n, std::vector<double> spectrum,
                                               int r, uint64_t seed,
                                               bool trace_normalize) {
  if (spectrum.empty() || static_cast<int>(spectrum.size()) > n || r < 1 ||
      r > static_cast<int>(spectrum.size()))
    throw std::invalid_argument("make_ground_truth: bad spectrum/rank");
  for (size_t i = 0; i < spectrum.size(); ++i) {
    if (spectrum[i] < 0.0 || (i > 0 && spectrum[i] > spectrum[i - 1]))
      throw std::invalid_argument("make_ground_truth: spectrum must be nonnegative descending");
  }
  if (trace_normalize) {
    double total = 0.0;
    for (double v : spectrum) total += v;
    if (!(total > 0.0)) throw std::invalid_argument("make_ground_truth: zero trace");
    for (double& v : spectrum) v /= total;
  }

  const int width = static_cast<int>(spectrum.size());
  Rng rng(seed);
  Factor basis(n, width);
  for (size_t k = 0; k < basis.size(); ++k) basis.data()[k] = rng.normal();
  // Gram-Schmidt
  for (int c = 0; c < width; ++c) {
    double* col = basis.col(c);
    for (int b = 0; b < c; ++b) {
      const double* prev = basis.col(b);
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += col[i] * prev[i];
      for (int i = 0; i < n; ++i) col[i] -= dot * prev[i];
    }
    double nrm = 0.0;
    for (int i = 0; i < n; ++i) nrm += col[i] * col[i];
    nrm = std::sqrt(nrm);
    if (nrm < 1e-12) throw std::runtime_error("make_ground_truth: basis degenerated");
    for (int i = 0; i < n; ++i) col[i] /= nrm;
  }

  SymMatrix x_star(n);
  for (int k = 0; k < width; ++k) {
    const double lam = spectrum[k];
    if (lam == 0.0) continue;
    const double* v = basis.col(k);
    for (int j = 0; j < n; ++j) {
      const double w = lam * v[j];
      for (int i = j; i < n; ++i) x_star.add_to(i, j, v[i] * w);
    }
  }
  Factor u_star(n, r);
  for (int k = 0; k < r; ++k) {
    const double w = std::sqrt(spectrum[k]);
    const double* v = basis.col(k);
    double* c = u_star.col(k);
    for (int i = 0; i < n; ++i) c[i] = w * v[i];
  }
  return {std::move(x_star), std::move(u_star)};
}

std::vector<RunSummary> compare_solvers(const ExperimentSpec& raw) {
  ExperimentSpec spec = raw;
  if (spec.name.empty()) spec.name = spec.kind;
  spec.validate();
  std::filesystem::create_directories(spec.out_dir);
  std::vector<RunSummary> rows = for_each_seed(
      spec, [&spec](uint64_t seed) { return compare_kind(spec, seed); });
  write_summary(spec, rows);
  std::sort(rows.begin(), rows.end(), [](const RunSummary& a, const RunSummary& b) {
    return a.seed != b.seed ? a.seed < b.seed : a.label < b.label;
  });
  return rows;
}

int run_experiment(const ExperimentSpec& raw) {
  ExperimentSpec spec = raw;
  if (spec.name.empty()) spec.name = spec.kind;
  if (spec.kind == "qst" && spec.ball_radius == 0.0) spec.ball_radius = 1.0;
  if (spec.kind == "qst" || spec.kind == "highrank") spec.trace_normalize = true;
  spec.validate();

  try {
    std::filesystem::create_directories(spec.out_dir);
    std::vector<RunSummary> rows;
    if (spec.kind == "sensing" || spec.kind == "lowrank" || spec.kind == "qst" ||
        spec.kind == "highrank") {
      rows = for_each_seed(spec, [&spec](uint64_t s) { return solve_kind(spec, s); });
    } else if (spec.kind == "sweep-step") {
      rows = for_each_seed(spec, [&spec](uint64_t s) { return sweep_step_kind(spec, s); });
    } else if (spec.kind == "sweep-cond") {
      rows = for_each_seed(spec, [&spec](uint64_t s) { return sweep_cond_kind(spec, s); });
    } else if (spec.kind == "compare-svp") {
      rows = for_each_seed(spec, [&spec](uint64_t s) { return compare_kind(spec, s); });
    } else if (spec.kind == "audit") {
      rows = for_each_seed(spec, [&spec](uint64_t s) { return audit_kind(spec, s); });
    } else {
      throw std::invalid_argument("unknown experiment kind: " + spec.kind);
    }
    write_summary(spec, rows);
  } catch (const std::exception& e) {
    std::cerr << "experiment failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace fgd
