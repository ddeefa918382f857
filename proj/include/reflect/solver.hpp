#pragma once

#include <Eigen/Sparse>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "reflect/assembly.hpp"

namespace reflect {

// Coefficient matrix field of one linear problem, in (xi, eta) components.
struct CoefficientField {
  ArrayXXd a11, a12, a22;
  // Difference the radial first-order terms one-sided on the layer next to
  // the sonic boundary (used when the ellipticity pad is switched off).
  bool sonic_one_sided = false;
};

// One side of the boundary: either a Dirichlet trace or oblique rows
// b1 psi_xi + b2 psi_eta + b3 psi = rhs, sampled along the side.
struct SideCondition {
  bool dirichlet = false;
  VectorXd value;  // Dirichlet
  VectorXd b1, b2, b3, rhs;

  static SideCondition fixed(VectorXd v) {
    SideCondition s;
    s.dirichlet = true;
    s.value = std::move(v);
    return s;
  }
  static SideCondition oblique(VectorXd b1v, VectorXd b2v, VectorXd b3v,
                               VectorXd r) {
    SideCondition s;
    s.b1 = std::move(b1v);
    s.b2 = std::move(b2v);
    s.b3 = std::move(b3v);
    s.rhs = std::move(r);
    return s;
  }
};

// Sides are indexed as in ReflectionDomain: sonic j=nb (owns its corners),
// symmetry j=0 (owns its corners), shock i=na and wedge i=0 in between.
struct BoundaryConditions {
  SideCondition sonic, shock, wedge, symmetry;
};

struct LinearSystem {
  Eigen::SparseMatrix<double> matrix;
  VectorXd rhs;
  double entry_scale = 0;  // largest assembled entry, for residual scaling
};

struct LinearSolution {
  ArrayXXd psi;
  double residual = 0;  // scaled linear residual of the assembled system
};

namespace detail {

struct RowBuilder {
  std::vector<Eigen::Triplet<double>>& trip;
  int row;
  void add(int col, double v) {
    if (v != 0.0) trip.emplace_back(row, col, v);
  }
};

// Append the stencil of the directional derivative d/da (dir=0) or d/db
// (dir=1) at node (i,j), scaled by w.
inline void add_diff1(RowBuilder& rb, const ReflectionDomain& dom, int i,
                      int j, int dir, double w, bool one_sided_back = false) {
  const double h = dir == 0 ? dom.da : dom.db;
  const int n = dir == 0 ? dom.na : dom.nb;
  const int k = dir == 0 ? i : j;
  auto id = [&](int kk) {
    return dir == 0 ? dom.index(kk, j) : dom.index(i, kk);
  };
  if (one_sided_back && k >= 2) {
    rb.add(id(k), w * 3 / (2 * h));
    rb.add(id(k - 1), -w * 4 / (2 * h));
    rb.add(id(k - 2), w * 1 / (2 * h));
  } else if (k == 0) {
    rb.add(id(0), -w * 3 / (2 * h));
    rb.add(id(1), w * 4 / (2 * h));
    rb.add(id(2), -w * 1 / (2 * h));
  } else if (k == n) {
    rb.add(id(n), w * 3 / (2 * h));
    rb.add(id(n - 1), -w * 4 / (2 * h));
    rb.add(id(n - 2), w * 1 / (2 * h));
  } else {
    rb.add(id(k + 1), w / (2 * h));
    rb.add(id(k - 1), -w / (2 * h));
  }
}

// Oblique boundary row at (i,j): coefficients are given in (xi,eta)
// components and mapped to index space through the discrete metric.
inline void add_oblique_row(std::vector<Eigen::Triplet<double>>& trip,
                            const ReflectionDomain& dom, int i, int j,
                            double b1, double b2, double b3) {
  if (std::abs(b1) + std::abs(b2) + std::abs(b3) < 1e-14) {
    throw IllPosedRow("boundary row has no coefficients");
  }
  RowBuilder rb{trip, dom.index(i, j)};
  const double det = dom.jac(i, j);
  // (psi_xi, psi_eta) = Jinv^T (psi_a, psi_b).
  const double wa = (b1 * dom.eta_b(i, j) - b2 * dom.xi_b(i, j)) / det;
  const double wb = (-b1 * dom.eta_a(i, j) + b2 * dom.xi_a(i, j)) / det;
  add_diff1(rb, dom, i, j, 0, wa);
  add_diff1(rb, dom, i, j, 1, wb);
  rb.add(dom.index(i, j), b3);
}

}  // namespace detail

// Assemble one linear boundary-value problem on the grid.  The interior
// operator is a11 psi_xixi + 2 a12 psi_xieta + a22 psi_etaeta = source,
// rewritten in index space through the discrete metric (map curvature
// appears as first-order terms).
inline LinearSystem assemble_system(const ReflectionDomain& dom,
                                    const CoefficientField& A,
                                    const BoundaryConditions& bc,
                                    const ArrayXXd& source) {
  const int ni = dom.na + 1, nj = dom.nb + 1;
  const int N = ni * nj;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(N) * 10);
  LinearSystem sys;
  sys.rhs = VectorXd::Zero(N);

  auto check_side = [](const SideCondition& s, int needed, const char* side) {
    const auto len = s.dirichlet ? s.value.size() : s.b1.size();
    if (len != needed) {
      throw IllPosedRow(std::string("boundary side has wrong length: ") + side);
    }
  };
  check_side(bc.sonic, ni, "sonic");
  check_side(bc.symmetry, ni, "symmetry");
  check_side(bc.shock, nj, "shock");
  check_side(bc.wedge, nj, "wedge");

  auto side_row = [&](const SideCondition& s, int i, int j, int along) {
    const int row = dom.index(i, j);
    if (s.dirichlet) {
      trip.emplace_back(row, row, 1.0);
      sys.rhs[row] = s.value[along];
    } else {
      detail::add_oblique_row(trip, dom, i, j, s.b1[along], s.b2[along],
                              s.b3[along]);
      sys.rhs[row] = s.rhs[along];
    }
  };

  for (int i = 0; i < ni; ++i) {
    for (int j = 0; j < nj; ++j) {
      const int row = dom.index(i, j);
      switch (dom.side(i, j)) {
        case Side::interior: {
          const double det = dom.jac(i, j);
          const double ixa = dom.eta_b(i, j) / det,
                       ixb = -dom.xi_b(i, j) / det;
          const double iya = -dom.eta_a(i, j) / det,
                       iyb = dom.xi_a(i, j) / det;
          // At = Jinv A Jinv^T with Jinv rows (ixa, ixb), (iya, iyb).
          const double a11 = A.a11(i, j), a12 = A.a12(i, j),
                       a22 = A.a22(i, j);
          const double t11 = ixa * a11 + ixb * a12,
                       t12 = ixa * a12 + ixb * a22;
          const double u11 = iya * a11 + iyb * a12,
                       u12 = iya * a12 + iyb * a22;
          const double At11 = t11 * ixa + t12 * ixb;
          const double At12 = t11 * iya + t12 * iyb;
          const double At22 = u11 * iya + u12 * iyb;
          // Map curvature: w = At : Hessian(map component).
          const double w1 = At11 * dom.xi_aa(i, j) +
                            2 * At12 * dom.xi_ab(i, j) +
                            At22 * dom.xi_bb(i, j);
          const double w2 = At11 * dom.eta_aa(i, j) +
                            2 * At12 * dom.eta_ab(i, j) +
                            At22 * dom.eta_bb(i, j);
          const double beta_a =
              -(dom.eta_b(i, j) * w1 - dom.xi_b(i, j) * w2) / det;
          const double beta_b =
              -(-dom.eta_a(i, j) * w1 + dom.xi_a(i, j) * w2) / det;

          detail::RowBuilder rb{trip, row};
          const double da2 = dom.da * dom.da, db2 = dom.db * dom.db;
          rb.add(dom.index(i + 1, j), At11 / da2);
          rb.add(dom.index(i - 1, j), At11 / da2);
          rb.add(row, -2 * At11 / da2);
          rb.add(dom.index(i, j + 1), At22 / db2);
          rb.add(dom.index(i, j - 1), At22 / db2);
          rb.add(row, -2 * At22 / db2);
          const double cx = 2 * At12 / (4 * dom.da * dom.db);
          rb.add(dom.index(i + 1, j + 1), cx);
          rb.add(dom.index(i - 1, j - 1), cx);
          rb.add(dom.index(i + 1, j - 1), -cx);
          rb.add(dom.index(i - 1, j + 1), -cx);
          detail::add_diff1(rb, dom, i, j, 0, beta_a);
          const bool one_sided = A.sonic_one_sided && j == dom.nb - 1;
          detail::add_diff1(rb, dom, i, j, 1, beta_b, one_sided);
          sys.rhs[row] = source(i, j);
          break;
        }
        case Side::sonic:
          side_row(bc.sonic, i, j, i);
          break;
        case Side::symmetry:
          side_row(bc.symmetry, i, j, i);
          break;
        case Side::shock:
          side_row(bc.shock, i, j, j);
          break;
        case Side::wedge:
          side_row(bc.wedge, i, j, j);
          break;
      }
    }
  }

  for (const auto& t : trip) {
    sys.entry_scale = std::max(sys.entry_scale, std::abs(t.value()));
  }
  sys.matrix.resize(N, N);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  sys.matrix.makeCompressed();
  return sys;
}

inline LinearSolution solve_linear_bvp(const ReflectionDomain& dom,
                                       const CoefficientField& A,
                                       const BoundaryConditions& bc,
                                       const ArrayXXd& source) {
  const auto sys = assemble_system(dom, A, bc, source);
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(sys.matrix);
  lu.factorize(sys.matrix);
  if (lu.info() != Eigen::Success) {
    throw LinearSolveStalled("solve_linear_bvp: factorization failed");
  }
  const VectorXd sol = lu.solve(sys.rhs);
  if (!sol.allFinite()) {
    throw LinearSolveStalled("solve_linear_bvp: non-finite solution");
  }
  const double raw = (sys.matrix * sol - sys.rhs).lpNorm<Eigen::Infinity>();
  const double scale = sys.rhs.lpNorm<Eigen::Infinity>() +
                       sys.entry_scale * sol.lpNorm<Eigen::Infinity>() + 1e-13;
  LinearSolution out;
  out.residual = raw / scale;
  if (out.residual > 1e-10) {
    throw LinearSolveStalled("solve_linear_bvp: residual above tolerance");
  }
  const int ni = dom.na + 1, nj = dom.nb + 1;
  out.psi.resize(ni, nj);
  for (int i = 0; i < ni; ++i) {
    for (int j = 0; j < nj; ++j) out.psi(i, j) = sol[dom.index(i, j)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Nonlinear solve at a frozen free boundary: Picard on the trial gradient
// (cutoff slot and shock rows), marched down an ellipticity-pad schedule.

inline std::vector<double> make_delta_schedule(double delta0 = 0.1,
                                               int levels = 11) {
  std::vector<double> s;
  for (int k = 0; k < levels; ++k) s.push_back(delta0 * std::pow(2.0, -k));
  s.push_back(0.0);
  return s;
}

struct PicardOptions {
  double tol = 1e-9;
  int max_iterations = 60;
  int relax_after = 20;
  double relax = 0.5;
};

struct SolveReport {
  std::vector<double> delta_values;
  std::vector<int> picard_iterations;
  std::vector<double> level_residuals;
  std::vector<double> residual_history;  // every accepted update, in order
  int total_picard = 0;
  bool delta_zero_stalled = false;
  double min_ellipticity = std::numeric_limits<double>::infinity();
  double max_linear_residual = 0;
  int cutoff_active_final = 0;
  double min_psi = 0, max_psi = 0;
};

struct AssembledStep {
  CoefficientField A;
  BoundaryConditions bc;
  int cutoff_active = 0;
  double min_eig = std::numeric_limits<double>::infinity();
};

// Coefficients and boundary rows of one Picard step: the equation families
// are evaluated at the outer iterate phi, the slope cutoff and the jump rows
// at the current trial.
inline AssembledStep assemble_step(const ReflectionDomain& dom,
                                   const StateTwo<double>& st,
                                   const ArrayXXd& phi,
                                   const DerivativeFields& dphi,
                                   const ArrayXXd& trial,
                                   const DerivativeFields& dtrial, double eps,
                                   double delta) {
  const int ni = dom.na + 1, nj = dom.nb + 1;
  AssembledStep out;
  out.A.a11.setZero(ni, nj);
  out.A.a12.setZero(ni, nj);
  out.A.a22.setZero(ni, nj);
  out.A.sonic_one_sided = delta == 0.0;
  for (int i = 1; i < ni - 1; ++i) {
    for (int j = 1; j < nj - 1; ++j) {
      const Vec2<double> pt{dom.xi(i, j), dom.eta(i, j)};
      const Vec2<double> pg{dphi.f_xi(i, j), dphi.f_eta(i, j)};
      const Vec2<double> tg{dtrial.f_xi(i, j), dtrial.f_eta(i, j)};
      const auto e = coeffs_combined(st, tg, phi(i, j), pg, pt, eps, delta);
      out.A.a11(i, j) = e.a11;
      out.A.a12(i, j) = e.a12;
      out.A.a22(i, j) = e.a22;
      if (e.cutoff_active) ++out.cutoff_active;
      const double tr = e.a11 + e.a22;
      const double disc =
          std::sqrt((e.a11 - e.a22) * (e.a11 - e.a22) + 4 * e.a12 * e.a12);
      out.min_eig = std::min(out.min_eig, (tr - disc) / 2);
    }
  }

  const auto fixed = fixed_bc_rows(dom);
  out.bc.sonic =
      SideCondition::fixed(VectorXd::Constant(ni, fixed.sonic_value));
  out.bc.symmetry = SideCondition::oblique(
      VectorXd::Zero(ni), VectorXd::Ones(ni), VectorXd::Zero(ni),
      VectorXd::Constant(ni, fixed.symmetry_rhs));
  out.bc.wedge = SideCondition::oblique(
      VectorXd::Constant(nj, fixed.wedge_normal[0]),
      VectorXd::Constant(nj, fixed.wedge_normal[1]), VectorXd::Zero(nj),
      VectorXd::Zero(nj));
  VectorXd sb1(nj), sb2(nj), sb3(nj), srhs(nj);
  for (int j = 0; j < nj; ++j) {
    const double eta = dom.eta(dom.na, j);
    const Vec2<double> tg{dtrial.f_xi(dom.na, j), dtrial.f_eta(dom.na, j)};
    const auto row = rh_condition_row(st, trial(dom.na, j), tg, eta);
    sb1[j] = row.b1;
    sb2[j] = row.b2;
    sb3[j] = row.b3;
    srhs[j] = row.rhs;
  }
  out.bc.shock = SideCondition::oblique(std::move(sb1), std::move(sb2),
                                        std::move(sb3), std::move(srhs));
  return out;
}

// Solve the nonlinear problem at a frozen domain, warm-starting each pad
// level from the previous one.  If the final unpadded level stalls, the last
// padded solution is returned with a flag instead of an error.
inline std::pair<ArrayXXd, SolveReport> solve_nonlinear_bvp(
    const ReflectionDomain& dom, const StateTwo<double>& st,
    const ArrayXXd& phi, double eps, const std::vector<double>& schedule,
    const PicardOptions& opt = {}) {
  const int ni = dom.na + 1, nj = dom.nb + 1;
  const ArrayXXd zero = ArrayXXd::Zero(ni, nj);
  const DerivativeFields dphi = compute_derivatives(dom, phi);

  ArrayXXd trial = phi;
  SolveReport rep;
  ArrayXXd last_converged = phi;
  bool have_converged_level = false;

  for (double delta : schedule) {
    int iters = 0;
    double res = std::numeric_limits<double>::infinity();
    bool level_ok = false;
    try {
      for (; iters < opt.max_iterations;) {
        const DerivativeFields dtrial = compute_derivatives(dom, trial);
        const auto step =
            assemble_step(dom, st, phi, dphi, trial, dtrial, eps, delta);
        rep.min_ellipticity = std::min(rep.min_ellipticity, step.min_eig);
        auto lin = solve_linear_bvp(dom, step.A, step.bc, zero);
        rep.max_linear_residual =
            std::max(rep.max_linear_residual, lin.residual);
        ++iters;
        if (iters > opt.relax_after) {
          lin.psi = opt.relax * lin.psi + (1 - opt.relax) * trial;
        }
        res = (lin.psi - trial).abs().maxCoeff();
        trial = std::move(lin.psi);
        rep.residual_history.push_back(res);
        if (res <= opt.tol) {
          level_ok = true;
          break;
        }
      }
    } catch (const Error&) {
      if (delta == 0.0 && have_converged_level) {
        level_ok = false;
      } else {
        throw;
      }
    }
    rep.delta_values.push_back(delta);
    rep.picard_iterations.push_back(iters);
    rep.level_residuals.push_back(res);
    rep.total_picard += iters;
    if (!level_ok) {
      if (delta == 0.0 && have_converged_level) {
        rep.delta_zero_stalled = true;
        trial = last_converged;
        break;
      }
      throw PicardDiverged("solve_nonlinear_bvp: level failed to contract");
    }
    last_converged = trial;
    have_converged_level = true;
  }

  // Barrier accounting: the solution must stay essentially nonnegative and
  // below the physical energy scale.
  rep.min_psi = trial.minCoeff();
  rep.max_psi = trial.maxCoeff();
  const double h = std::max(dom.da, dom.db);
  const double tol_low = std::max(1e-8, 10 * h * h);
  if (rep.min_psi < -tol_low) {
    throw BarrierViolated("solve_nonlinear_bvp: negative excursion");
  }
  if (rep.max_psi > st.nr.c2bar * st.nr.c2bar / 2) {
    throw BarrierViolated("solve_nonlinear_bvp: solution above energy scale");
  }
  // Final assembly at the converged state reports cutoff activity.
  const DerivativeFields dfinal = compute_derivatives(dom, trial);
  const auto final_step =
      assemble_step(dom, st, phi, dphi, trial, dfinal, eps, 0.0);
  rep.cutoff_active_final = final_step.cutoff_active;
  return {trial, rep};
}

}  // namespace reflect
