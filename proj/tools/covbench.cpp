#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "covstruct/bench.hpp"
#include "covstruct/conic.hpp"
#include "covstruct/estimators.hpp"
#include "covstruct/sampler.hpp"
#include "covstruct/structures.hpp"

namespace {

using namespace covstruct;

int cmd_run(const std::string& config_path, const std::string& preset_name,
            const std::string& out_path, const std::string& format,
            int threads) {
  bench::ExperimentConfig cfg;
  if (!config_path.empty() && !preset_name.empty()) {
    std::cerr << "run: --config and --preset are mutually exclusive\n";
    return 1;
  }
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) {
      std::cerr << "run: cannot open config " << config_path << "\n";
      return 1;
    }
    std::stringstream ss;
    ss << f.rdbuf();
    cfg = bench::parse_config(ss.str());
  } else if (!preset_name.empty()) {
    cfg = bench::preset(preset_name);
  } else {
    std::cerr << "run: need --config PATH or --preset NAME\n";
    return 1;
  }
  const bench::ResultTable table = bench::run_experiment(cfg, threads);
  const bench::EmitFormat fmt =
      (format == "json") ? bench::EmitFormat::Json : bench::EmitFormat::Csv;
  bench::emit(table, fmt, out_path);

  int total_failures = 0;
  for (const auto& c : table.cells) total_failures += c.failures;
  if (total_failures > 0)
    std::cerr << "run: " << total_failures
              << " trial failure(s) recorded in the table\n";
  return 0;
}

int cmd_solve_debug(int p, int n, std::uint64_t seed,
                    const std::string& structure, int bandwidth,
                    const std::string& norm, const std::string& out_path,
                    bool also_solve) {
  StructureSpec spec = StructureSpec::unconstrained();
  if (structure == "toeplitz")
    spec = StructureSpec::toeplitz();
  else if (structure == "banded")
    spec = StructureSpec::banded(bandwidth);
  else if (structure != "unconstrained") {
    std::cerr << "solve-debug: unknown structure " << structure << "\n";
    return 1;
  }
  const MatrixNorm nrm =
      (norm == "frobenius") ? MatrixNorm::Frobenius : MatrixNorm::Spectral;

  const SymMatrix truth = make_toeplitz_target(p, 0.8);
  const SampleSet x = sample_elliptical(truth, TextureLaw::chi_square(1), n, seed);
  const conic::ConicProblem prob = coca_problem(x, spec, nrm);

  if (out_path == "-") {
    conic::dump_problem(prob, std::cout);
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) {
      std::cerr << "solve-debug: cannot open " << out_path << "\n";
      return 1;
    }
    conic::dump_problem(prob, f);
    f.flush();
    if (!f) {
      std::cerr << "solve-debug: write failed for " << out_path << "\n";
      return 1;
    }
  }

  if (also_solve) {
    const conic::ConicSolution sol = conic::solve(prob, {});
    const conic::KktResiduals kkt = conic::kkt_residuals(prob, sol);
    std::cerr << "status " << conic::to_string(sol.status) << "\n"
              << "objective " << sol.objective << "\n"
              << "iterations " << sol.iterations << "\n"
              << "kkt_primal " << kkt.primal << "\n"
              << "kkt_dual " << kkt.dual << "\n"
              << "kkt_gap " << kkt.gap << "\n";
    if (sol.status != conic::SolveStatus::Optimal) return 1;
  }
  return 0;
}

int cmd_selftest() {
  int failed = 0;
  const auto check = [&](const char* name, bool ok) {
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << name << "\n";
    if (!ok) ++failed;
  };

  try {
    // svec/smat round trip preserves the Frobenius inner product.
    Eigen::MatrixXd m(3, 3);
    m << 2, 1, 0, 1, 3, -1, 0, -1, 4;
    const SymMatrix sm(m);
    const Eigen::VectorXd v = conic::svec(sm);
    const SymMatrix back = conic::smat(v);
    check("svec/smat round trip",
          (back.mat() - sm.mat()).norm() < 1e-14 &&
              std::abs(v.squaredNorm() - sm.mat().squaredNorm()) < 1e-12);

    // Scalar LP: min x s.t. x >= 1.
    conic::ConicProblem lp;
    lp.c = Eigen::VectorXd::Constant(1, 1.0);
    lp.A.resize(1, 1);
    lp.A.insert(0, 0) = -1.0;
    lp.b = Eigen::VectorXd::Constant(1, -1.0);
    lp.cone.nonneg_dim = 1;
    const conic::ConicSolution sol = conic::solve(lp, {});
    check("conic LP oracle", sol.status == conic::SolveStatus::Optimal &&
                                 std::abs(sol.objective - 1.0) < 1e-5);

    // Tyler fixed point residual on a well-conditioned draw.
    const SymMatrix truth = make_toeplitz_target(4, 0.5);
    const SampleSet x = sample_elliptical(truth, TextureLaw::chi_square(1), 40, 7);
    const EstimatorResult ty = tyler(x);
    const SymMatrix next = trace_normalize(moment_map(ty.shape, x));
    check("tyler fixed point",
          ty.status == conic::SolveStatus::Optimal &&
              (next.mat() - ty.shape.mat()).norm() <= 1e-9);

    // COCA with a single sample: C = xx'/||x||^2, d_1 = 1/||x||^2.
    SampleSet one;
    one.samples.resize(2, 1);
    one.samples << 3.0, 4.0;
    const EstimatorResult co =
        coca(one, StructureSpec::unconstrained(), MatrixNorm::Spectral, {});
    const Eigen::Vector2d xv(3.0, 4.0);
    const Eigen::MatrixXd want = xv * xv.transpose() / xv.squaredNorm();
    check("coca single-sample closed form",
          co.status == conic::SolveStatus::Optimal &&
              (co.shape.mat() - want).norm() < 1e-4 &&
              std::abs(co.d_values[0] - 1.0 / xv.squaredNorm()) < 1e-4);

    // Benchmark determinism at smoke scale.
    const bench::ExperimentConfig cfg = bench::preset("smoke");
    const bench::ResultTable t1 = bench::run_experiment(cfg, 1);
    const bench::ResultTable t2 = bench::run_experiment(cfg, 2);
    std::ostringstream c1, c2;
    bench::emit_csv(t1, c1);
    bench::emit_csv(t2, c2);
    check("benchmark determinism", c1.str() == c2.str());
  } catch (const std::exception& e) {
    std::cout << "[FAIL] unexpected exception: " << e.what() << "\n";
    ++failed;
  }

  std::cout << (failed == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covbench: structured shape-matrix estimation benchmarks"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a Monte Carlo benchmark sweep");
  std::string config_path, preset_name, out_path = "-", format = "csv";
  int threads = 1;
  run->add_option("--config", config_path, "JSON config file path");
  run->add_option("--preset", preset_name,
                  "Named preset: smoke, toeplitz-paper, banded-paper, "
                  "toeplitz-paper-full, banded-paper-full");
  run->add_option("--out", out_path, "Output path ('-' = stdout)")
      ->capture_default_str();
  run->add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  run->add_option("--threads", threads, "Worker thread count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* dbg = app.add_subcommand(
      "solve-debug", "Emit one COCA conic program in the text dump format");
  int dbg_p = 3, dbg_n = 2, dbg_bandwidth = 1;
  std::uint64_t dbg_seed = 1;
  std::string dbg_structure = "toeplitz", dbg_norm = "spectral",
              dbg_out = "-";
  bool dbg_solve = false;
  dbg->add_option("--p", dbg_p, "Dimension")->check(CLI::PositiveNumber)
      ->capture_default_str();
  dbg->add_option("--n", dbg_n, "Sample count")->check(CLI::PositiveNumber)
      ->capture_default_str();
  dbg->add_option("--seed", dbg_seed, "Sampling seed")->capture_default_str();
  dbg->add_option("--structure", dbg_structure, "Structure set")
      ->check(CLI::IsMember({"unconstrained", "toeplitz", "banded"}))
      ->capture_default_str();
  dbg->add_option("--bandwidth", dbg_bandwidth, "Bandwidth for banded")
      ->capture_default_str();
  dbg->add_option("--norm", dbg_norm, "Objective norm")
      ->check(CLI::IsMember({"spectral", "frobenius"}))
      ->capture_default_str();
  dbg->add_option("--out", dbg_out, "Dump path ('-' = stdout)")
      ->capture_default_str();
  dbg->add_flag("--solve", dbg_solve, "Also solve and report KKT residuals");

  auto* st = app.add_subcommand("selftest", "Run the built-in invariant suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, preset_name, out_path, format, threads);
    if (dbg->parsed())
      return cmd_solve_debug(dbg_p, dbg_n, dbg_seed, dbg_structure,
                             dbg_bandwidth, dbg_norm, dbg_out, dbg_solve);
    if (st->parsed()) return cmd_selftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
