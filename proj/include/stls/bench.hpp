#pragma once

// Experiment suites: seeded instance samplers and a parallel trial runner
// producing per-cell success rates.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "stls/baseline.hpp"
#include "stls/extract.hpp"
#include "stls/structure.hpp"

namespace stls {

/// Size of one experiment cell: (m, n) for Hankel suites, (4 or 12, l) for
/// multi-view suites where n holds the number of cameras or points.
struct CellSize {
  int m = 0;
  int n = 0;
};

struct ExperimentSpec {
  std::string suite;
  int trials = 20;
  std::uint64_t seed = 0;
  std::vector<double> noise_levels;
  std::vector<CellSize> sizes;
  std::string layout = "sphere";  ///< triangulation cameras: sphere or line
  std::string pattern = "38";     ///< realization-missing: 38 or 76 (% missing)
  bool baseline = false;
  bool timing = true;
  int threads = 0;  ///< 0: STLS_THREADS or hardware concurrency
  SolverConfig solver;

  void validate() const;
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"hankel-random", "realization", "realization-missing",
                                              "gcd",           "triangulation", "resectioning"};
  return names;
}

/// Spec with the desk-scale defaults of a suite.
inline ExperimentSpec default_spec(const std::string& suite) {
  ExperimentSpec s;
  s.suite = suite;
  if (suite == "hankel-random") {
    s.trials = 50;
    s.noise_levels = {0.0};
    s.sizes = {{3, 3}, {3, 4}, {3, 5}, {3, 6}};
  } else if (suite == "realization" || suite == "realization-missing") {
    s.noise_levels = {0.0, 0.1, 0.2};
    s.sizes = {{3, 20}};
  } else if (suite == "gcd") {
    s.noise_levels = {0.0, 0.05, 0.1};
    s.sizes = {{9, 10}};
  } else if (suite == "triangulation") {
    s.noise_levels = {0.0, 0.1, 0.2};
    s.sizes = {{4, 3}};
  } else if (suite == "resectioning") {
    s.noise_levels = {0.0, 0.05, 0.1};
    s.sizes = {{12, 6}};
  } else {
    throw std::invalid_argument("unknown suite '" + suite + "'");
  }
  return s;
}

inline void ExperimentSpec::validate() const {
  bool known = false;
  for (const auto& n : suite_names()) known = known || n == suite;
  if (!known) throw std::invalid_argument("unknown suite '" + suite + "'");
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (noise_levels.empty()) throw std::invalid_argument("at least one noise level is required");
  for (double s : noise_levels) {
    if (!(s >= 0.0)) throw std::invalid_argument("noise levels must be non-negative");
  }
  if (sizes.empty()) throw std::invalid_argument("at least one size is required");
  for (const auto& c : sizes) {
    if (c.m < 1 || c.n < 1) throw std::invalid_argument("sizes must be positive");
    const bool hankel = suite == "hankel-random" || suite == "realization" || suite == "realization-missing";
    if (hankel && c.m > c.n) throw std::invalid_argument("Hankel sizes need m <= n");
    if (suite == "triangulation" && c.n < 2) throw std::invalid_argument("triangulation needs at least 2 views");
    if (suite == "resectioning" && c.n < 6) throw std::invalid_argument("resectioning needs at least 6 points");
  }
  if (layout != "sphere" && layout != "line") throw std::invalid_argument("layout must be 'sphere' or 'line'");
  if (pattern != "38" && pattern != "76") throw std::invalid_argument("pattern must be '38' or '76'");
  solver.validate();
}

// ---------------------------------------------------------------------------
// Samplers

/// Impulse response h_1, h_2, ... of (z - 1) / (z^2 - 1.6 z + 0.8).
inline Vector impulse_response(int count) {
  Vector h = Vector::Zero(count);
  if (count > 0) h(0) = 1.0;
  if (count > 1) h(1) = 0.6;
  for (int t = 2; t < count; ++t) h(t) = 1.6 * h(t - 1) - 0.8 * h(t - 2);
  return h;
}

/// Observation mask over y_1..y_count. Pattern "38" deletes i = 0, 3 (mod 5);
/// pattern "76" keeps only i = 1, 2 (mod 10). Indices are 1-based.
inline Vector missing_pattern(int count, const std::string& pattern) {
  Vector obs = Vector::Ones(count);
  for (int i = 1; i <= count; ++i) {
    const bool keep = pattern == "38" ? (i % 5 != 0 && i % 5 != 3) : (i % 10 == 1 || i % 10 == 2);
    if (!keep) obs(i - 1) = 0.0;
  }
  return obs;
}

/// Coefficients (f || g) of f = (t^2 - 2)(t^4 + 2) and g = (t^2 - 2)(t^3 - 1),
/// highest degree first, each normalized to unit norm.
inline Vector gcd_coefficients() {
  Vector f(7);
  f << 1, 0, -2, 0, 2, 0, -4;
  Vector g(6);
  g << 1, 0, -2, -1, 0, 2;
  Vector out(13);
  out << f.normalized(), g.normalized();
  return out;
}

inline Eigen::Vector3d sample_sphere(std::mt19937_64& rng, double radius) {
  std::normal_distribution<double> nd;
  Eigen::Vector3d v;
  do {
    v << nd(rng), nd(rng), nd(rng);
  } while (v.norm() < 1e-12);
  return radius * v.normalized();
}

/// Camera at c looking at the origin: P = [-R c | R] with rows of R the
/// forward, right and up directions, so the first image coordinate is depth.
inline Matrix look_at_origin(const Eigen::Vector3d& c) {
  const Eigen::Vector3d fwd = (-c).normalized();
  Eigen::Vector3d up_hint(0, 0, 1);
  if (std::abs(fwd.dot(up_hint)) > 0.9) up_hint = Eigen::Vector3d(0, 1, 0);
  const Eigen::Vector3d right = fwd.cross(up_hint).normalized();
  const Eigen::Vector3d up = right.cross(fwd);
  Eigen::Matrix3d R;
  R.row(0) = fwd.transpose();
  R.row(1) = right.transpose();
  R.row(2) = up.transpose();
  Matrix P(3, 4);
  P.col(0) = -R * c;
  P.rightCols(3) = R;
  return P;
}

/// Point uniform in [-1, 1]^3, homogeneous with leading 1.
inline Eigen::Vector4d sample_cube_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  return {1.0, ud(rng), ud(rng), ud(rng)};
}

/// Instance of the given suite and cell with i.i.d. Gaussian noise of
/// standard deviation `noise` added to the exact data.
inline ProblemInstance sample_instance(const ExperimentSpec& spec, const CellSize& size, double noise,
                                       std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  auto add_noise = [&](Vector v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += noise * nd(rng);
    return v;
  };
  const auto& suite = spec.suite;
  if (suite == "hankel-random") {
    // Uniform on the unit sphere; the noise level does not apply.
    auto s = hankel_structure(size.m, size.n);
    Vector th(s.num_params());
    do {
      for (Eigen::Index i = 0; i < th.size(); ++i) th(i) = nd(rng);
    } while (th.norm() < 1e-12);
    return ProblemInstance(std::move(s), th.normalized());
  }
  if (suite == "realization" || suite == "realization-missing") {
    auto s = hankel_structure(size.m, size.n);
    Vector th = add_noise(impulse_response(s.num_params()));
    if (suite == "realization") return ProblemInstance(std::move(s), th);
    const Vector obs = missing_pattern(s.num_params(), spec.pattern);
    th = th.cwiseProduct(obs);
    return ProblemInstance(std::move(s), th, WeightSpec::mask(obs));
  }
  if (suite == "gcd") {
    return ProblemInstance(sylvester_structure(6, 5, 2), add_noise(gcd_coefficients()));
  }
  if (suite == "triangulation") {
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::vector<Matrix> cams;
    for (int c = 0; c < size.n; ++c) {
      const Eigen::Vector3d pos = spec.layout == "line" ? Eigen::Vector3d(2.0, 0.0, ud(rng)) : sample_sphere(rng, 2.0);
      cams.push_back(look_at_origin(pos));
    }
    const Eigen::Vector4d x = sample_cube_point(rng);
    Vector th(2 * size.n);
    for (int c = 0; c < size.n; ++c) th.segment<2>(2 * c) = project(cams[static_cast<std::size_t>(c)], x);
    return ProblemInstance(triangulation_structure(cams), add_noise(th));
  }
  if (suite == "resectioning") {
    const Matrix P = look_at_origin(sample_sphere(rng, 2.0));
    std::vector<Eigen::Vector4d> pts;
    Vector th(2 * size.n);
    for (int j = 0; j < size.n; ++j) {
      pts.push_back(sample_cube_point(rng));
      th.segment<2>(2 * j) = project(P, pts.back());
    }
    return ProblemInstance(resectioning_structure(pts), add_noise(th));
  }
  throw std::invalid_argument("unknown suite '" + suite + "'");
}

// ---------------------------------------------------------------------------
// Runner

struct TrialResult {
  bool sdp_exact = false;
  bool baseline_success = false;
  bool weak_duality_ok = true;
  bool failed = false;
  double runtime_ms = 0.0;
  double gamma = 0.0;
  double sdp_objective = 0.0;
  double local_objective = 0.0;
  std::string error;
};

struct CellResult {
  CellSize size;
  double noise = 0.0;
  int trials = 0;
  double sdp_exact_pct = 0.0;
  double baseline_pct = 0.0;
  double mean_runtime_ms = 0.0;
  int weak_duality_violations = 0;
  int failures = 0;
};

/// Per-trial generator; depends only on (seed, cell, trial).
inline std::mt19937_64 trial_rng(std::uint64_t seed, int cell, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(cell), static_cast<std::uint32_t>(trial)};
  return std::mt19937_64(seq);
}

/// Worker count: explicit value, else the STLS_THREADS environment variable,
/// else the hardware concurrency.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("STLS_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

inline TrialResult run_trial(const ProblemInstance& instance, const ExperimentSpec& spec) {
  TrialResult r;
  const auto t0 = std::chrono::steady_clock::now();
  const auto sol = solve_stls(instance, spec.solver);
  r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  r.sdp_exact = sol.exact();
  r.gamma = sol.gamma;
  r.sdp_objective = sol.objective;
  // The local solution is a feasible point, so a valid dual bound may not exceed it.
  const auto loc = local_solve(instance);
  r.local_objective = loc.objective;
  const bool feasible = rank_deficiency_residual(instance.structure.evaluate(loc.u)) <= 1e-8;
  if (sol.certificate_valid && feasible) r.weak_duality_ok = sol.gamma <= loc.objective + 1e-6 * (1.0 + loc.objective);
  r.baseline_success = r.sdp_exact && feasible &&
                       std::abs(loc.objective - sol.objective) <= 1e-6 * (1.0 + std::abs(sol.objective));
  return r;
}

/// Runs every (size, noise) cell; results are independent of the thread count.
inline std::vector<CellResult> run_bench(const ExperimentSpec& spec, std::ostream* log = nullptr) {
  spec.validate();
  const int ncell = static_cast<int>(spec.sizes.size() * spec.noise_levels.size());
  const int total = ncell * spec.trials;
  std::vector<TrialResult> trials(static_cast<std::size_t>(total));
  std::atomic<int> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (int job = next++; job < total; job = next++) {
      const int cell = job / spec.trials;
      const int trial = job % spec.trials;
      const auto& size = spec.sizes[static_cast<std::size_t>(cell) / spec.noise_levels.size()];
      const double noise = spec.noise_levels[static_cast<std::size_t>(cell) % spec.noise_levels.size()];
      auto rng = trial_rng(spec.seed, cell, trial);
      auto& out = trials[static_cast<std::size_t>(job)];
      try {
        out = run_trial(sample_instance(spec, size, noise, rng), spec);
      } catch (const std::exception& e) {
        out = TrialResult{};
        out.failed = true;
        out.error = e.what();
      }
      if (log && (out.failed || !out.weak_duality_ok)) {
        std::lock_guard<std::mutex> lock(log_mutex);
        *log << "cell " << cell << " trial " << trial << ": "
             << (out.failed ? "failed: " + out.error : std::string("weak duality violated")) << '\n';
      }
    }
  };
  const int nthreads = std::min(resolve_threads(spec.threads), std::max(total, 1));
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<CellResult> cells;
  for (int cell = 0; cell < ncell; ++cell) {
    CellResult c;
    c.size = spec.sizes[static_cast<std::size_t>(cell) / spec.noise_levels.size()];
    c.noise = spec.noise_levels[static_cast<std::size_t>(cell) % spec.noise_levels.size()];
    c.trials = spec.trials;
    int exact = 0;
    int base = 0;
    double time = 0.0;
    for (int t = 0; t < spec.trials; ++t) {
      const auto& r = trials[static_cast<std::size_t>(cell * spec.trials + t)];
      exact += r.sdp_exact;
      base += r.baseline_success;
      time += r.runtime_ms;
      c.weak_duality_violations += !r.weak_duality_ok;
      c.failures += r.failed;
    }
    c.sdp_exact_pct = 100.0 * exact / spec.trials;
    c.baseline_pct = 100.0 * base / spec.trials;
    c.mean_runtime_ms = time / spec.trials;
    cells.push_back(c);
  }
  return cells;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string format_noise(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// CSV with header suite,m,n,noise,trials,sdp_exact_pct,baseline_pct,mean_runtime_ms.
/// Empty baseline_pct without --baseline, empty runtime without timing.
inline void write_csv(const ExperimentSpec& spec, const std::vector<CellResult>& cells, std::ostream& os) {
  os << "suite,m,n,noise,trials,sdp_exact_pct,baseline_pct,mean_runtime_ms\n";
  for (const auto& c : cells) {
    os << spec.suite << ',' << c.size.m << ',' << c.size.n << ',' << format_noise(c.noise) << ',' << c.trials << ','
       << format_fixed(c.sdp_exact_pct, 1) << ',' << (spec.baseline ? format_fixed(c.baseline_pct, 1) : "") << ','
       << (spec.timing ? format_fixed(c.mean_runtime_ms, 1) : "") << '\n';
  }
}

inline void write_table(const ExperimentSpec& spec, const std::vector<CellResult>& cells, std::ostream& os) {
  const bool multiview = spec.suite == "triangulation" || spec.suite == "resectioning";
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %4s %4s %7s %7s %9s %9s %12s\n", "suite", "m", multiview ? "l" : "n",
                "noise", "trials", "sdp_exact", "baseline", "runtime_ms");
  os << line;
  for (const auto& c : cells) {
    std::snprintf(line, sizeof line, "%-20s %4d %4d %7s %7d %8.1f%% %9s %12s\n", spec.suite.c_str(), c.size.m,
                  c.size.n, format_noise(c.noise).c_str(), c.trials, c.sdp_exact_pct,
                  spec.baseline ? (format_fixed(c.baseline_pct, 1) + "%").c_str() : "-",
                  spec.timing ? format_fixed(c.mean_runtime_ms, 1).c_str() : "-");
    os << line;
  }
}

}  // namespace stls
