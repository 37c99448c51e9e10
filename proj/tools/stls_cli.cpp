// Command-line front end.
//
//   stls solve <file> [--baseline] [--export path]
//   stls bench <suite> [--trials N] [--seed S] [--noise a,b,c] [--size ...]
//              [--baseline] [--csv path] [--no-timing] [--layout sphere|line]
//              [--pattern 38|76] [--threads T]
//
// solve exits with 0 when the solution is certified globally optimal, 2 when
// it is not, and 1 on errors.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stls/bench.hpp"
#include "stls/io.hpp"
#include "stls/stls.hpp"

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int parse_int(const std::string& s) {
  std::size_t pos = 0;
  const int v = std::stoi(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad integer '" + s + "'");
  return v;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

// "3x5,4x10" for Hankel suites; plain "20,40" (n or l) elsewhere.
std::vector<stls::CellSize> parse_sizes(const std::string& text, const std::string& suite) {
  std::vector<stls::CellSize> out;
  const int fixed_m = suite == "triangulation" ? 4 : suite == "resectioning" ? 12 : 3;
  for (const auto& tok : split(text, ',')) {
    const auto x = tok.find('x');
    if (x != std::string::npos) {
      out.push_back({parse_int(tok.substr(0, x)), parse_int(tok.substr(x + 1))});
    } else {
      out.push_back({fixed_m, parse_int(tok)});
    }
  }
  return out;
}

int cmd_solve(const std::string& path, bool baseline, const std::string& export_path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  stls::Json j;
  try {
    j = stls::Json::parse(in);
  } catch (const stls::Json::parse_error& e) {
    throw std::runtime_error(std::string("malformed JSON: ") + e.what());
  }
  const auto instance = stls::instance_from_json(j);
  const auto lifted = stls::build_lifted(instance);
  const auto problem = stls::assemble_primal(lifted, instance.weight);
  if (!export_path.empty()) {
    std::ofstream out(export_path);
    if (!out) throw std::runtime_error("cannot write '" + export_path + "'");
    stls::export_sparse(problem, out);
  }
  const auto sol = stls::extract_solution(stls::solve(problem), lifted, instance);
  stls::Json report = stls::to_json(sol);
  if (baseline) report["baseline"] = stls::to_json(stls::local_solve(instance), instance);
  std::cout << report.dump(2) << '\n';
  return sol.certified ? 0 : 2;
}

int cmd_bench(stls::ExperimentSpec spec, const std::string& csv_path) {
  const auto cells = stls::run_bench(spec, &std::cerr);
  stls::write_table(spec, cells, std::cout);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write '" + csv_path + "'");
    stls::write_csv(spec, cells, out);
  }
  int violations = 0;
  for (const auto& c : cells) violations += c.weak_duality_violations;
  if (violations > 0) std::cerr << "warning: " << violations << " weak duality violations\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured total least squares via a semidefinite relaxation"};
  app.require_subcommand(1);

  auto* solve = app.add_subcommand("solve", "Solve one instance from a JSON file");
  std::string file;
  std::string export_path;
  bool solve_baseline = false;
  solve->add_option("file", file, "Instance file")->required();
  solve->add_flag("--baseline", solve_baseline, "Also run the local baseline");
  solve->add_option("--export", export_path, "Write the SDP in sparse text format");

  auto* bench = app.add_subcommand("bench", "Run an experiment suite");
  std::string suite;
  int trials = 0;
  std::uint64_t seed = 0;
  std::string noise;
  std::string size;
  std::string csv;
  std::string layout = "sphere";
  std::string pattern = "38";
  bool bench_baseline = false;
  bool no_timing = false;
  int threads = 0;
  bench->add_option("suite", suite, "hankel-random | realization | realization-missing | gcd | triangulation | resectioning")
      ->required();
  bench->add_option("--trials", trials, "Trials per cell (suite default if omitted)");
  bench->add_option("--seed", seed, "Random seed");
  bench->add_option("--noise", noise, "Comma-separated noise levels");
  bench->add_option("--size", size, "Comma-separated sizes: mxn, or n / l");
  bench->add_flag("--baseline", bench_baseline, "Report the local baseline success rate");
  bench->add_option("--csv", csv, "Write results as CSV");
  bench->add_flag("--no-timing", no_timing, "Leave the runtime column empty (byte-stable CSV)");
  bench->add_option("--layout", layout, "Triangulation cameras: sphere or line");
  bench->add_option("--pattern", pattern, "Missing-data pattern: 38 or 76");
  bench->add_option("--threads", threads, "Worker threads (default: STLS_THREADS or all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (solve->parsed()) return cmd_solve(file, solve_baseline, export_path);
    auto spec = stls::default_spec(suite);
    if (bench->count("--trials") > 0) spec.trials = trials;
    spec.seed = seed;
    if (!noise.empty()) {
      spec.noise_levels.clear();
      for (const auto& t : split(noise, ',')) spec.noise_levels.push_back(parse_double(t));
    }
    if (!size.empty()) spec.sizes = parse_sizes(size, suite);
    spec.layout = layout;
    spec.pattern = pattern;
    spec.baseline = bench_baseline;
    spec.timing = !no_timing;
    spec.threads = threads;
    return cmd_bench(spec, csv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
