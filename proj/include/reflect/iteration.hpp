#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "reflect/solver.hpp"

namespace reflect {

struct IterationConfig {
  int resolution = 64;         // grid cells per direction
  double epsilon = 0.0;        // 0: use 0.1 * (c2bar - |xibar|)
  double omega = 0.7;          // boundary relaxation in (0, 1]
  double tol_fb = 0.0;         // 0: use 1e-8 * c2bar
  int max_outer = 200;
  double sigma_max = 0.15;
  std::vector<double> delta_schedule = make_delta_schedule();
  PicardOptions picard{};

  void validate() const {
    if (!(omega > 0.0 && omega <= 1.0)) {
      throw InvariantViolated("IterationConfig: omega outside (0, 1]");
    }
    if (tol_fb < 0 || epsilon < 0 || resolution < 8 || max_outer < 1) {
      throw InvariantViolated("IterationConfig: nonsensical field");
    }
  }
  double epsilon_for(const StateTwo<double>& st) const {
    return epsilon > 0 ? epsilon
                       : 0.1 * (st.nr.c2bar - std::abs(st.nr.xibar));
  }
  double tol_fb_for(const StateTwo<double>& st) const {
    return tol_fb > 0 ? tol_fb : 1e-8 * st.nr.c2bar;
  }
};

struct ReflectionSolution {
  StateTwo<double> st;
  ReflectionDomain domain;  // built from the final boundary
  FreeBoundaryCurve fb;
  ArrayXXd psi;
  std::vector<SolveReport> reports;
  std::vector<double> fb_residual_history;
  int outer_iterations = 0;
  bool converged = false;
  double fb_residual = 0;
  double sup_f_minus_l = 0;       // boundary displacement from the straight shock
  double shock_trace_gap = 0;     // max |psi - (phi1 - phi2)| on shock nodes
  NormPair norms{};               // near-sonic / bulk regularity estimates
  double barrier_sigma = 0;       // max psi / sigma (sigma > 0)
  double barrier_sonic = 0;       // sup |psi| / x over the near-sonic region
};

// Background uniform-state potential of the subsonic side on the grid nodes.
inline ArrayXXd background_phi2_field(const ReflectionDomain& dom) {
  const int ni = dom.na + 1, nj = dom.nb + 1;
  ArrayXXd out(ni, nj);
  for (int i = 0; i < ni; ++i) {
    for (int j = 0; j < nj; ++j) {
      out(i, j) = background_potentials(
                      dom.st, Vec2<double>{dom.xi(i, j), dom.eta(i, j)})
                      .phi2;
    }
  }
  return out;
}

struct OuterStep {
  FreeBoundaryCurve fb;
  ArrayXXd psi;        // solved field, carried by grid index
  SolveReport report;
  double fb_change = 0;  // sup |relaxed - previous| over the sample stations
};

// One sweep of the outer map: solve at the frozen boundary, read the shock
// off the solution, relax toward it.  The grid lattice is the same for every
// boundary, so the field transfers to the next domain by index.
inline OuterStep outer_step(const StateTwo<double>& st,
                            const FreeBoundaryCurve& fb, const ArrayXXd& psi,
                            const IterationConfig& cfg) {
  cfg.validate();
  const auto dom =
      build_domain(st, fb, cfg.resolution, cfg.resolution, cfg.epsilon_for(st));
  auto [solved, report] = solve_nonlinear_bvp(
      dom, st, psi, cfg.epsilon_for(st), cfg.delta_schedule, cfg.picard);
  const auto raw = extract_free_boundary(dom, solved, st);

  // Both curves are sampled at the same eta stations.
  VectorXd eta = fb.samples_eta();
  VectorXd mixed(eta.size());
  double change = 0;
  for (int k = 0; k < eta.size(); ++k) {
    const double old_v = fb.samples_val()[k];
    mixed[k] = cfg.omega * raw.samples_val()[k] + (1 - cfg.omega) * old_v;
    change = std::max(change, std::abs(mixed[k] - old_v));
  }
  OuterStep out{FreeBoundaryCurve(eta, mixed, 1.0 / std::tan(st.theta_s)),
                std::move(solved), std::move(report), change};
  return out;
}

// Iterate the outer map from the straight-shock configuration until the
// boundary stops moving.
inline ReflectionSolution run_to_fixed_point(const GasSetup<double>& gas,
                                             double theta_w,
                                             const IterationConfig& cfg) {
  cfg.validate();
  const auto st =
      state2_solve(gas, theta_w, StateTwoOptions{.sigma_max = cfg.sigma_max});
  const double tol = cfg.tol_fb_for(st);

  ReflectionSolution sol;
  sol.st = st;
  sol.fb = FreeBoundaryCurve::straight_reference(st, cfg.resolution);
  sol.psi = ArrayXXd::Zero(cfg.resolution + 1, cfg.resolution + 1);

  for (int k = 0; k < cfg.max_outer; ++k) {
    auto step = outer_step(st, sol.fb, sol.psi, cfg);
    sol.fb = std::move(step.fb);
    sol.psi = std::move(step.psi);
    sol.reports.push_back(std::move(step.report));
    sol.fb_residual_history.push_back(step.fb_change);
    sol.outer_iterations = k + 1;
    sol.fb_residual = step.fb_change;
    if (step.fb_change <= tol) {
      sol.converged = true;
      break;
    }
  }
  if (!sol.converged) {
    throw MaxOuterExceeded("run_to_fixed_point: boundary still moving");
  }

  sol.domain = build_domain(st, sol.fb, cfg.resolution, cfg.resolution,
                            cfg.epsilon_for(st));

  // Diagnostics on the converged pair (domain, psi).
  for (int k = 0; k < sol.fb.samples_eta().size(); ++k) {
    const double e = sol.fb.samples_eta()[k];
    sol.sup_f_minus_l = std::max(
        sol.sup_f_minus_l, std::abs(sol.fb.samples_val()[k] - l_line(st, e)));
  }
  for (int j = 0; j <= sol.domain.nb; ++j) {
    const auto bg = background_potentials(
        st, Vec2<double>{sol.domain.xi(sol.domain.na, j),
                         sol.domain.eta(sol.domain.na, j)});
    sol.shock_trace_gap =
        std::max(sol.shock_trace_gap,
                 std::abs(sol.psi(sol.domain.na, j) - (bg.phi1 - bg.phi2)));
  }
  sol.norms = discrete_norms(sol.domain, sol.psi);
  if (st.sigma > 0) {
    sol.barrier_sigma = sol.psi.maxCoeff() / st.sigma;
  }
  for (int i = 0; i <= sol.domain.na; ++i) {
    for (int j = 0; j <= sol.domain.nb; ++j) {
      const double x = sol.domain.x(i, j);
      if (x > 1e-8 && (sol.domain.region(i, j) & ReflectionDomain::near_sonic_bit)) {
        sol.barrier_sonic =
            std::max(sol.barrier_sonic, std::abs(sol.psi(i, j)) / x);
      }
    }
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Global assembly over the physical half-plane.

enum class FlowRegion : uint8_t {
  wedge_solid = 0,
  ahead = 1,       // undisturbed incident state
  behind = 2,      // behind the incident shock
  uniform2 = 3,    // uniform reflected state
  subsonic = 4,    // the solved region
};

struct GlobalField {
  VectorXd xi, eta;  // sample coordinates (physical frame)
  ArrayXXd phi;      // pseudo-potential, NaN inside the wedge
  Eigen::Array<uint8_t, Eigen::Dynamic, Eigen::Dynamic> label;
  std::vector<Vec2<double>> shock_polyline;  // reflection point -> symmetry
};

// Bilinear interpolation of a node field at fractional lattice coordinates.
namespace detail {
inline double bilinear(const ReflectionDomain& dom, const ArrayXXd& f,
                       double a, double b) {
  const double fi = std::clamp(a, 0.0, 1.0) * dom.na;
  const double fj = std::clamp(b, 0.0, 1.0) * dom.nb;
  const int i = std::min(static_cast<int>(fi), dom.na - 1);
  const int j = std::min(static_cast<int>(fj), dom.nb - 1);
  const double s = fi - i, t = fj - j;
  return (1 - s) * (1 - t) * f(i, j) + s * (1 - t) * f(i + 1, j) +
         (1 - s) * t * f(i, j + 1) + s * t * f(i + 1, j + 1);
}
}  // namespace detail

// Sample the assembled solution on a box of the physical half-plane.  The
// wedge interior is labeled and carries no value; every flow point receives
// the pseudo-potential of its region, with the solved field inside the
// subsonic domain.
inline GlobalField assemble_global(const ReflectionSolution& sol, int nx,
                                   int ny, double xi_min, double xi_max,
                                   double eta_min, double eta_max) {
  const auto& st = sol.st;
  const double u2 = st.u2, v2 = st.v2;
  const double tan_w = std::tan(st.theta_w);
  const double eta_p1 = st.eta1 + v2;          // sonic corner, physical frame
  const double eta_p0 = st.P0[1] + v2;         // reflection point height
  const double cot_s = 1.0 / std::tan(st.theta_s);

  GlobalField out;
  out.xi = VectorXd::LinSpaced(nx + 1, xi_min, xi_max);
  out.eta = VectorXd::LinSpaced(ny + 1, eta_min, eta_max);
  out.phi.resize(nx + 1, ny + 1);
  out.label.resize(nx + 1, ny + 1);

  for (int ix = 0; ix <= nx; ++ix) {
    for (int iy = 0; iy <= ny; ++iy) {
      const double xu = out.xi[ix], yu = out.eta[iy];
      const Vec2<double> sh{xu - u2, yu - v2};  // shifted-frame point
      const auto bg = background_potentials(st, sh);

      FlowRegion reg;
      double value = 0;
      if (yu >= 0 && yu < xu * tan_w) {
        reg = FlowRegion::wedge_solid;
        value = std::numeric_limits<double>::quiet_NaN();
      } else if (xu >= st.gas.xi0) {
        reg = FlowRegion::ahead;
        value = bg.phi0;
      } else {
        // Composite reflected-shock abscissa at this height.
        double shock_xi;
        if (yu >= eta_p0) {
          shock_xi = -std::numeric_limits<double>::infinity();  // no shock
        } else if (yu >= eta_p1) {
          shock_xi = u2 + l_line(st, yu - v2);
        } else {
          shock_xi = u2 + sol.fb(yu - v2);
        }
        if (xu < shock_xi || yu >= eta_p0) {
          reg = FlowRegion::behind;
          value = bg.phi1;
        } else if (sh.norm() >= st.c2) {
          reg = FlowRegion::uniform2;
          value = bg.phi2;
        } else {
          reg = FlowRegion::subsonic;
          const auto ab = sol.domain.locate(sh);
          if (ab) {
            value = bg.phi2 +
                    detail::bilinear(sol.domain, sol.psi, (*ab)[0], (*ab)[1]);
          } else {
            // Sliver between the sampled boundary and the true arc.
            value = bg.phi2;
          }
        }
      }
      out.phi(ix, iy) = value;
      out.label(ix, iy) = static_cast<uint8_t>(reg);
    }
  }

  // Composite shock polyline: straight segment from the reflection point to
  // the sonic corner, then the free boundary down to the symmetry line.
  if (std::isfinite(eta_p0)) {
    const int m = 32;
    for (int k = 0; k <= m; ++k) {
      const double e = eta_p0 + (eta_p1 - eta_p0) * k / m;
      out.shock_polyline.push_back(
          Vec2<double>{u2 + l_line(st, e - v2), e});
    }
  }
  const auto& se = sol.fb.samples_eta();
  for (int k = se.size() - 1; k >= 0; --k) {
    if (se[k] + v2 >= eta_p1 - 1e-13) continue;  // corner already emitted
    out.shock_polyline.push_back(
        Vec2<double>{u2 + sol.fb.samples_val()[k], se[k] + v2});
  }
  return out;
}

}  // namespace reflect
