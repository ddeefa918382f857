#pragma once
// Command-line front end.  Four subcommands:
//   state2   algebraic reflection state for one wedge angle
//   solve    full free-boundary run, emits CSV fields and a summary
//   sweep    wedge-angle study toward the head-on limit
//   verify   re-run the verification battery on emitted files
// Exit codes: 0 success, 1 usage/config error, 2 solver failure,
// 3 verification failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "reflect/io.hpp"

namespace reflect {

namespace detail {

inline std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace detail

inline int run_state2(double gamma, double rho0, double rho1, double theta_w,
                      double sigma_max, std::ostream& out) {
  const GasSetup<double> gas = incident_shock(gamma, rho0, rho1);
  StateTwoOptions opt;
  opt.sigma_max = sigma_max;
  const StateTwo<double> st = state2_solve(gas, theta_w, opt);
  using detail::fmt12;
  auto put = [&out](std::string_view k, double v) {
    out << k << '=' << fmt12(v) << '\n';
  };
  put("gamma", gamma);
  put("rho0", rho0);
  put("rho1", rho1);
  put("theta_w", st.theta_w);
  put("sigma", st.sigma);
  put("rho2bar", st.nr.rho2bar);
  put("xibar", st.nr.xibar);
  put("c2bar", st.nr.c2bar);
  put("rho2", st.rho2);
  put("theta_s", st.theta_s);
  put("xitilde", st.xitilde);
  put("u2", st.u2);
  put("v2", st.v2);
  put("c2", st.c2);
  put("xihat", st.xihat);
  put("P0_xi", st.P0[0]);
  put("P0_eta", st.P0[1]);
  put("P1_xi", st.P1[0]);
  put("P1_eta", st.P1[1]);
  return 0;
}

inline int run_solve(const std::string& config_path,
                     const std::string& out_override, std::ostream& out) {
  const RunConfig cfg = parse_config(read_text_file(config_path));
  const std::uint64_t hash = config_hash(cfg);
  const ReflectionSolution sol =
      run_to_fixed_point(cfg.gas(), cfg.wedge_angle(), cfg.iteration());
  const VerificationReport rep = verify_solution(sol);

  double xi_min = cfg.global_xi_min, xi_max = cfg.global_xi_max;
  double eta_min = cfg.global_eta_min, eta_max = cfg.global_eta_max;
  if (xi_min == 0 && xi_max == 0 && eta_min == 0 && eta_max == 0) {
    xi_min = -1.5 * sol.st.nr.c2bar;
    xi_max = 1.2 * sol.st.gas.xi0;
    eta_min = 0;
    eta_max = 1.5 * sol.st.nr.c2bar;
  }
  const GlobalField g = assemble_global(sol, cfg.global_nx, cfg.global_ny,
                                        xi_min, xi_max, eta_min, eta_max);

  const std::filesystem::path dir =
      out_override.empty() ? cfg.out_dir : out_override;
  std::filesystem::create_directories(dir);
  write_text_file(dir / "config.echo", serialize(cfg));
  write_text_file(dir / "summary.txt", summary_text(cfg, sol, rep));
  write_text_file(dir / "free_boundary.csv", curve_csv(sol.fb, hash));
  if (cfg.emit_psi_field) {
    write_text_file(dir / "psi_field.csv",
                    field_csv(sol.domain, sol.psi, hash));
  }
  if (cfg.emit_polyline) {
    write_text_file(dir / "shock_polyline.csv",
                    polyline_csv(g.shock_polyline, hash));
  }
  if (cfg.emit_global_field) {
    write_text_file(dir / "global_field.csv", global_csv(g, sol.st, hash));
  }

  out << format(rep);
  out << "converged=" << (sol.converged ? "true" : "false")
      << " outer_iterations=" << sol.outer_iterations
      << " fb_residual=" << detail::fmt12(sol.fb_residual) << '\n';
  out << "out_dir=" << dir.string() << '\n';
  return sol.converged ? 0 : 2;
}

inline int run_sweep(const std::string& config_path,
                     const std::vector<double>& sigmas,
                     const std::string& out_dir, std::ostream& out) {
  const RunConfig cfg = parse_config(read_text_file(config_path));
  const LimitStudy study =
      normal_reflection_limit(cfg.gas(), sigmas, cfg.iteration());
  std::filesystem::create_directories(out_dir);
  write_text_file(std::filesystem::path(out_dir) / "sweep.csv",
                  study_csv(study, config_hash(cfg)));
  bool all_converged = true;
  for (const auto& r : study.rows) {
    char line[160];
    std::snprintf(line, sizeof line,
                  "sigma=%.6g sup_f_deviation=%.6e w11_distance=%.6e "
                  "endpoint_error=%.6e converged=%s\n",
                  r.sigma, r.sup_f_deviation, r.w11_distance, r.endpoint_error,
                  r.converged ? "true" : "false");
    out << line;
    all_converged = all_converged && r.converged;
  }
  return all_converged ? 0 : 2;
}

inline int run_verify(const std::string& dir_arg, std::ostream& out) {
  const std::filesystem::path dir = dir_arg;
  const RunConfig cfg = parse_config(read_text_file(dir / "config.echo"));
  const std::string hex = hash_hex(config_hash(cfg));
  const CsvTable fbt = read_csv(dir / "free_boundary.csv");
  const CsvTable ft = read_csv(dir / "psi_field.csv");
  if (fbt.config_hash != hex || ft.config_hash != hex) {
    throw ParseError("verify: emitted files do not match config.echo");
  }

  const StateTwo<double> st = [&] {
    StateTwoOptions opt;
    opt.sigma_max = cfg.sigma_max;
    return state2_solve(cfg.gas(), cfg.wedge_angle(), opt);
  }();

  const int m = static_cast<int>(fbt.rows.size());
  VectorXd eta(m), val(m);
  for (int k = 0; k < m; ++k) {
    eta[k] = fbt.rows[k][0];
    val[k] = fbt.rows[k][1];
  }
  const FreeBoundaryCurve fb(std::move(eta), std::move(val),
                             std::cos(st.theta_s) / std::sin(st.theta_s));
  const IterationConfig it = cfg.iteration();
  const ReflectionDomain dom =
      build_domain(st, fb, cfg.resolution, cfg.resolution, it.epsilon_for(st));

  const int n = cfg.resolution;
  if (static_cast<int>(ft.rows.size()) != (n + 1) * (n + 1)) {
    throw ParseError("verify: field size does not match resolution");
  }
  ArrayXXd psi(n + 1, n + 1);
  const double tol = 1e-9 * st.c2;
  for (const auto& r : ft.rows) {
    const int i = static_cast<int>(r[0]);
    const int j = static_cast<int>(r[1]);
    if (i < 0 || i > n || j < 0 || j > n) {
      throw ParseError("verify: field index out of range");
    }
    if (std::abs(r[2] - dom.xi(i, j)) > tol ||
        std::abs(r[3] - dom.eta(i, j)) > tol) {
      throw ParseError("verify: stored nodes disagree with the rebuilt mesh");
    }
    psi(i, j) = r[6];
  }

  const VerificationReport rep = verify_solution(dom, psi);
  out << format(rep);
  return rep.all_pass() ? 0 : 3;
}

inline int cli_main(int argc, const char* const* argv,
                    std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Self-similar regular shock reflection by a large-angle wedge"};
  app.require_subcommand(1);

  auto* s2 = app.add_subcommand("state2", "print the reflection state");
  double gamma = 2.0, rho0 = 1.0, rho1 = 2.0;
  double theta_w = 0.0, sigma = 0.0, sigma_max = 0.15;
  s2->add_option("--gamma", gamma, "adiabatic exponent")->required();
  s2->add_option("--rho0", rho0, "upstream density")->required();
  s2->add_option("--rho1", rho1, "post-incident density")->required();
  auto* ot = s2->add_option("--theta-w", theta_w, "wedge angle (radians)");
  auto* os = s2->add_option("--sigma", sigma, "pi/2 - theta_w");
  ot->excludes(os);
  os->excludes(ot);
  s2->add_option("--sigma-max", sigma_max, "largest accepted sigma");

  auto* sv = app.add_subcommand("solve", "run the free-boundary solver");
  std::string config_path, out_override;
  sv->add_option("config", config_path, "key=value configuration file")
      ->required();
  sv->add_option("--out", out_override, "override the output directory");

  auto* sw = app.add_subcommand("sweep", "sigma study toward head-on");
  std::string sweep_config, sweep_out;
  std::vector<double> sigmas;
  sw->add_option("--config", sweep_config, "base configuration")->required();
  sw->add_option("--sigma", sigmas, "sigma values to run")->required();
  sw->add_option("--out", sweep_out, "output directory")->required();

  auto* vf = app.add_subcommand("verify", "re-check emitted run files");
  std::string verify_dir;
  vf->add_option("--dir", verify_dir, "directory written by solve")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*s2) {
      if (!ot->count() && !os->count()) {
        err << "error: state2 needs --theta-w or --sigma\n";
        return 1;
      }
      const double tw =
          ot->count() ? theta_w : std::numbers::pi / 2 - sigma;
      return run_state2(gamma, rho0, rho1, tw, sigma_max, out);
    }
    if (*sv) return run_solve(config_path, out_override, out);
    if (*sw) return run_sweep(sweep_config, sigmas, sweep_out, out);
    if (*vf) return run_verify(verify_dir, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace reflect
