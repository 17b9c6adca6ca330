#include "gapflow/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "gapflow/checks.hpp"
#include "gapflow/errors.hpp"
#include "gapflow/problem_io.hpp"
#include "gapflow/solver.hpp"

namespace gapflow {

namespace {

struct Loaded {
  ProblemFile file;
  Reformulation reformulation;
  GapConfig gap;
};

Loaded load(const RunConfig& cfg) {
  Loaded l;
  l.file = load_problem_file(cfg.problem_path.empty() ? bundled_problem_path()
                                                      : std::filesystem::path(cfg.problem_path));
  l.reformulation = cfg.reformulation.value_or(l.file.reformulation);
  l.gap = l.file.gap;
  if (cfg.gap_c) l.gap.c = *cfg.gap_c;
  if (cfg.gap_a) l.gap.a = *cfg.gap_a;
  if (cfg.gap_b) l.gap.b = *cfg.gap_b;
  l.gap.validate();
  cfg.flow.validate(cfg.allow_unstable);
  return l;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  return os;
}

std::string sci(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*e", digits, v);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Maps library exceptions onto exit codes; anything else propagates.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const InitFailure& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::init_failure;
  } catch (const SingularKkt& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::singular_kkt;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::config_error;
  } catch (const UnsupportedSet& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::config_error;
  } catch (const DimensionMismatch& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::config_error;
  }
}

SolveOptions solve_options(const RunConfig& cfg, const DiscretizationConfig& disc) {
  SolveOptions o;
  o.flow = cfg.flow;
  o.init = driver_init_options(disc);
  o.allow_unstable = cfg.allow_unstable;
  return o;
}

constexpr double kConvergedResidual = 1e-8;

}  // namespace

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Loaded l = load(cfg);
    const auto& disc = l.file.discretization;
    out << "problem: N=" << disc.stages << " dt=" << disc.dt
        << " reformulation=" << to_string(l.reformulation) << '\n';

    const SolveResult r = solve_ocpec(l.file.problem, disc, l.reformulation, l.gap,
                                      solve_options(cfg, disc));
    out << "initialization: " << r.init.iterations << " iterations, scaled residual "
        << sci(r.init.scaled_residual)
        << (r.init_fallback ? " (shifted retry)" : "") << '\n';

    if (!cfg.out_trace.empty()) {
      auto os = open_output(cfg.out_trace);
      write_trace_csv(os, r.run.trace);
    }
    if (!cfg.out_solution.empty()) {
      auto os = open_output(cfg.out_solution);
      write_solution_csv(os, r.solution);
    }

    const double final_res = r.run.trace.back().scaled_residual;
    out << "continuation: " << r.run.trace.size() - 1 << " steps, final scaled residual "
        << sci(final_res) << ", " << sci(r.wall_ms / 1e3, 2) << " s\n";
    if (!r.run.completed) {
      err << "non-contracting trace: " << r.run.failure << '\n';
      return exit_code::singular_kkt;
    }
    if (!(final_res <= kConvergedResidual)) {
      err << "warning: non-contracting trace, final scaled residual " << sci(final_res)
          << " above " << sci(kConvergedResidual, 0) << '\n';
    }
    return exit_code::ok;
  });
}

int cmd_check_derivatives(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Loaded l = load(cfg);
    CheckOptions opt;
    opt.seed = cfg.seed;
    opt.gap = l.gap;
    opt.inject_gradient_fault = cfg.inject_gradient_fault;

    auto suites = run_gap_property_suites(opt);
    const auto deriv = run_derivative_suites(l.file.problem, opt);
    suites.insert(suites.end(), deriv.begin(), deriv.end());

    for (const auto& s : suites) {
      out << (s.passed ? "PASS  " : "FAIL  ") << "max_err=" << sci(s.max_error, 2)
          << "  tol=" << sci(s.tolerance, 0) << "  points=" << s.points << "  "
          << s.name << '\n';
    }
    if (!all_passed(suites)) {
      err << "derivative checks failed\n";
      return exit_code::check_failure;
    }
    return exit_code::ok;
  });
}

int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Loaded l = load(cfg);
    auto csv = open_output(cfg.out_bench);
    csv << "reformulation,N,l,step_time_ms,scaled_residual\n";

    struct Row {
      Reformulation reform;
      long n;
      double median_ms, max_ms, total_s, final_res;
      DenseMatrix x;
    };
    std::vector<Row> rows;
    int code = exit_code::ok;
    for (Reformulation reform : {Reformulation::primal_gap, Reformulation::d_gap}) {
      for (long n : cfg.bench_sizes) {
        const auto disc = DiscretizationConfig::uniform(l.file.problem.horizon, n);
        const SolveResult r =
            solve_ocpec(l.file.problem, disc, reform, l.gap, solve_options(cfg, disc));
        std::vector<double> times;
        for (const auto& rec : r.run.trace) {
          if (rec.l >= static_cast<int>(r.run.trace.size()) - 1) break;
          times.push_back(rec.step_time_ms);
          csv << to_string(reform) << ',' << n << ',' << rec.l << ','
              << sci(rec.step_time_ms, 6) << ',' << sci(rec.scaled_residual, 6) << '\n';
        }
        if (!r.run.completed) {
          err << to_string(reform) << " N=" << n << ": " << r.run.failure << '\n';
          code = exit_code::singular_kkt;
        }
        rows.push_back({reform, n, median(times),
                        times.empty() ? 0.0 : *std::max_element(times.begin(), times.end()),
                        r.wall_ms / 1e3, r.run.trace.back().scaled_residual, r.solution.x});
      }
    }

    char line[160];
    std::snprintf(line, sizeof line, "%-12s %6s %12s %12s %10s %14s\n", "reform", "N",
                  "median_ms", "max_ms", "total_s", "final_resid");
    out << line;
    for (const auto& r : rows) {
      std::snprintf(line, sizeof line, "%-12s %6ld %12.3f %12.3f %10.2f %14.3e\n",
                    to_string(r.reform).c_str(), r.n, r.median_ms, r.max_ms, r.total_s,
                    r.final_res);
      out << line;
    }

    const std::size_t sizes = cfg.bench_sizes.size();
    for (std::size_t i = 0; i < sizes; ++i) {
      const auto& p = rows[i];
      const auto& d = rows[sizes + i];
      out << "N=" << p.n << ": primal-gap vs d-gap state sup-norm difference "
          << sci((p.x - d.x).cwiseAbs().maxCoeff()) << '\n';
    }
    for (std::size_t k = 0; k < 2; ++k) {
      bool monotone = true;
      for (std::size_t i = 1; i < sizes; ++i) {
        monotone = monotone && rows[k * sizes + i].median_ms >= rows[k * sizes + i - 1].median_ms;
      }
      out << to_string(rows[k * sizes].reform) << ": median step time "
          << (monotone ? "nondecreasing" : "NOT nondecreasing") << " in N\n";
    }
    return code;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gap-constraint continuation solver for LCS optimal control"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string reform_text;
  double gap_c = 0, gap_a = 0, gap_b = 0;
  double nu_h = cfg.flow.reg.equality, nu_c = cfg.flow.reg.complementarity,
         nu_hess = cfg.flow.reg.hessian;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--problem", cfg.problem_path, "Problem JSON (default: bundled benchmark)");
    sub->add_option("--reformulation", reform_text, "primal-gap or d-gap");
    sub->add_option("--gap-c", gap_c, "Primal gap parameter c");
    sub->add_option("--gap-a", gap_a, "D-gap parameter a");
    sub->add_option("--gap-b", gap_b, "D-gap parameter b");
    sub->add_option("--eps-s", cfg.flow.eps_s, "Parameter flow rate")->capture_default_str();
    sub->add_option("--eps-t", cfg.flow.eps_t, "Newton flow rate")->capture_default_str();
    sub->add_option("--s0", cfg.flow.s0, "Initial relaxation")->capture_default_str();
    sub->add_option("--se", cfg.flow.se, "Final relaxation")->capture_default_str();
    sub->add_option("--dtau", cfg.flow.dtau, "Fictitious time step")->capture_default_str();
    sub->add_option("--lmax", cfg.flow.l_max, "Continuation steps")->capture_default_str();
    sub->add_option("--nu-h", nu_h, "Equality regularization")->capture_default_str();
    sub->add_option("--nu-c", nu_c, "Complementarity regularization")->capture_default_str();
    sub->add_option("--nu-hess", nu_hess, "Hessian regularization")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "Seed for randomized checks")->capture_default_str();
    sub->add_flag("--allow-unstable", cfg.allow_unstable,
                  "Permit |1 - eps_t * dtau| >= 1");
  };

  auto* solve = app.add_subcommand("solve", "Solve one problem and write CSV output");
  add_common(solve);
  cfg.out_trace = "trace.csv";
  cfg.out_solution = "solution.csv";
  solve->add_option("--out-trace", cfg.out_trace, "Trace CSV path")->capture_default_str();
  solve->add_option("--out-solution", cfg.out_solution, "Solution CSV path")
      ->capture_default_str();

  auto* check = app.add_subcommand("check-derivatives",
                                   "Finite-difference and property checks");
  add_common(check);
  check->add_flag("--inject-gradient-fault", cfg.inject_gradient_fault)
      ->group("");  // test hook, hidden from --help

  auto* bench = app.add_subcommand("bench", "Timing runs over several grid sizes");
  add_common(bench);
  bench->add_option("--sizes", cfg.bench_sizes, "Stage counts")->capture_default_str();
  bench->add_option("--out-bench", cfg.out_bench, "Per-step timing CSV")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_code::ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_code::ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::config_error;
  }

  CLI::App* active = app.get_subcommands().front();
  const auto given = [&](const char* name) { return active->count(name) > 0; };
  try {
    if (!reform_text.empty()) cfg.reformulation = parse_reformulation(reform_text);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::config_error;
  }
  if (given("--gap-c")) cfg.gap_c = gap_c;
  if (given("--gap-a")) cfg.gap_a = gap_a;
  if (given("--gap-b")) cfg.gap_b = gap_b;
  cfg.flow.reg = {nu_hess, nu_h, nu_c};
  try {
    cfg.flow.reg.validate();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::config_error;
  }

  if (active == solve) return cmd_solve(cfg, out, err);
  if (active == check) return cmd_check_derivatives(cfg, out, err);
  return cmd_bench(cfg, out, err);
}

}  // namespace gapflow
