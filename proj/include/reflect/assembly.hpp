#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "reflect/geometry.hpp"

namespace reflect {

// ---------------------------------------------------------------------------
// Gradient cutoff: identity on [-s0, s0], saturating at 5/(3(gamma+1)) for
// |s| >= s1 = 2/(gamma+1), odd, C^1, with a quintic-free Hermite blend whose
// slope stays in [0,1] and whose curvature never changes sign on s > 0.

template <typename T>
T zeta1(T s, T gamma) {
  const T s0 = T(4) / (3 * (gamma + 1));
  const T s1 = T(2) / (gamma + 1);
  const T h = s1 - s0;
  const T a = std::abs(s);
  T v;
  if (a <= s0) {
    v = a;
  } else if (a >= s1) {
    v = T(5) / (3 * (gamma + 1));
  } else {
    const T t = (a - s0) / h;
    v = s0 + h * (t - t * t * t + t * t * t * t / 2);
  }
  return s < 0 ? -v : v;
}

template <typename T>
T zeta1_prime(T s, T gamma) {
  const T s0 = T(4) / (3 * (gamma + 1));
  const T s1 = T(2) / (gamma + 1);
  const T a = std::abs(s);
  if (a <= s0) return T(1);
  if (a >= s1) return T(0);
  const T t = (a - s0) / (s1 - s0);
  return (1 - t) * (1 - t) * (1 + 2 * t);
}

// Region blend between the two coefficient families, as a function of the
// depth t = c2 - r inside the sonic circle: 0 (pure near-sonic family) up to
// 2*eps, 1 (pure uniform family) beyond 4*eps, quintic smoothstep between.
template <typename T>
T zeta2(T t, T eps) {
  if (t <= 2 * eps) return T(0);
  if (t >= 4 * eps) return T(1);
  const T s = (t - 2 * eps) / (2 * eps);
  return s * s * s * (10 + s * (-15 + 6 * s));
}

// ---------------------------------------------------------------------------
// Coefficient families for the linearized interior operator
// A11 psi_xixi + 2 A12 psi_xieta + A22 psi_etaeta = 0.
// "phi" is the frozen outer iterate of psi; "trial" is the Picard gradient
// that feeds the cutoff slot of the near-sonic family.

struct CoefficientEntry {
  double a11 = 0, a12 = 0, a22 = 0;
  bool cutoff_active = false;
};

template <typename T>
CoefficientEntry coeffs_uniform(const StateTwo<T>& st, T phi_value,
                                const Vec2<T>& phi_grad, const Vec2<T>& pt) {
  const T xi = pt[0], eta = pt[1];
  const T g = st.gas.gamma;
  const T csq = st.c2 * st.c2 +
                (g - 1) * (xi * phi_grad[0] + eta * phi_grad[1] -
                           phi_grad.squaredNorm() / 2 - phi_value);
  CoefficientEntry e;
  e.a11 = csq - (phi_grad[0] - xi) * (phi_grad[0] - xi);
  e.a22 = csq - (phi_grad[1] - eta) * (phi_grad[1] - eta);
  e.a12 = -(phi_grad[0] - xi) * (phi_grad[1] - eta);
  return e;
}

template <typename T>
CoefficientEntry coeffs_sonic(const StateTwo<T>& st, const Vec2<T>& trial_grad,
                              T phi_value, const Vec2<T>& phi_grad,
                              const Vec2<T>& pt) {
  const T xi = pt[0], eta = pt[1];
  const T r2 = xi * xi + eta * eta;
  const T r = std::sqrt(r2);
  if (!(r > 1e-12 * st.c2)) {
    throw OriginSingularity("coeffs_sonic: point at the circle center");
  }
  const T g = st.gas.gamma;
  const T depth = st.c2 - r;
  // The cutoff argument is the radial trial slope over the sonic depth; the
  // depth in the denominator is floored so that points on the circle itself
  // stay finite (the factor r*depth in front sends W to zero there anyway).
  const T num = xi * trial_grad[0] + eta * trial_grad[1];
  const T arg = num / (r * std::max(depth, T(1e-13) * st.c2));
  const T W = r * depth * zeta1(arg, g);
  const T Tt = xi * phi_grad[1] - eta * phi_grad[0];
  const T common =
      st.c2 * st.c2 + (g - 1) * (W - phi_grad.squaredNorm() / 2 - phi_value);
  CoefficientEntry e;
  e.a11 = common - (phi_grad[0] * phi_grad[0] + xi * xi) +
          2 * xi * ((xi / r2) * W - (eta / r2) * Tt);
  e.a22 = common - (phi_grad[1] * phi_grad[1] + eta * eta) +
          2 * eta * ((eta / r2) * W + (xi / r2) * Tt);
  e.a12 = -(phi_grad[0] * phi_grad[1] + xi * eta) + 2 * (xi * eta / r2) * W +
          ((xi * xi - eta * eta) / r2) * Tt;
  const T s0 = T(4) / (3 * (g + 1));
  e.cutoff_active = std::abs(arg) > s0;
  return e;
}

template <typename T>
CoefficientEntry coeffs_combined(const StateTwo<T>& st,
                                 const Vec2<T>& trial_grad, T phi_value,
                                 const Vec2<T>& phi_grad, const Vec2<T>& pt,
                                 T eps, T delta) {
  const T r = pt.norm();
  const T w = zeta2(st.c2 - r, eps);
  CoefficientEntry e;
  if (w >= T(1)) {
    e = coeffs_uniform(st, phi_value, phi_grad, pt);
  } else if (w <= T(0)) {
    e = coeffs_sonic(st, trial_grad, phi_value, phi_grad, pt);
  } else {
    const CoefficientEntry u = coeffs_uniform(st, phi_value, phi_grad, pt);
    const CoefficientEntry s = coeffs_sonic(st, trial_grad, phi_value,
                                            phi_grad, pt);
    e.a11 = w * u.a11 + (1 - w) * s.a11;
    e.a12 = w * u.a12 + (1 - w) * s.a12;
    e.a22 = w * u.a22 + (1 - w) * s.a22;
    e.cutoff_active = s.cutoff_active;
  }
  e.a11 += delta;
  e.a22 += delta;
  return e;
}

// Principal part of the same operator written in sonic-frame coordinates,
// contracted twice with the radial direction: the coefficient of psi_xx after
// dividing the equation by c2.  Used to cross-check the near-sonic family
// against its (x, y) normal form 2x - (gamma+1) x zeta1(p1/x) + lower order.
template <typename T>
T xy_xx_coefficient(const StateTwo<T>& st, T p1, T p2, T z, T x) {
  const T g = st.gas.gamma, c2 = st.c2;
  const T zt = zeta1(p1 / x, g);
  const T lower = -x * x / c2 +
                  ((g + 1) / (2 * c2)) * (2 * x * x * zt - p1 * p1) -
                  ((g - 1) / c2) * (z + p2 * p2 / (2 * (c2 - x) * (c2 - x)));
  return 2 * x - (g + 1) * x * zt + lower;
}

// ---------------------------------------------------------------------------
// Downstream density of the psi formulation (base state 2).

template <typename T>
T psi_density(const StateTwo<T>& st, const Vec2<T>& pt, T z, const Vec2<T>& p,
              bool* clamped = nullptr) {
  using std::pow;
  const T head = pow(st.rho2, st.gas.gamma - 1) + pt[0] * p[0] + pt[1] * p[1] -
                 p.squaredNorm() / 2 - z;
  return density_from_head(st.gas.gamma, head, clamped);
}

// ---------------------------------------------------------------------------
// Shock condition as a scalar functional of the trace (p, z) = (D psi, psi)
// at height eta: the mass-flux jump across the curve where phi1 - phi
// vanishes, with the shock position substituted from the level-set relation
// xi = (z + v2 eta)/(u1 - u2) + xihat.

template <typename T>
struct JumpParts {
  T value;
  Vec3<T> gradient;  // d/dp1, d/dp2, d/dz
  Vec2<T> normal;    // unit normal at the trial trace
};

template <typename T>
JumpParts<T> psi_jump(const StateTwo<T>& st, const Vec2<T>& p, T z, T eta) {
  using std::pow, std::sqrt;
  const T g = st.gas.gamma, rho1 = st.gas.rho1;
  const T du = st.gas.u1 - st.u2;
  const T xs = (z + st.v2 * eta) / du + st.xihat;

  const T B = pow(st.rho2, g - 1) + xs * p[0] + eta * p[1] -
              p.squaredNorm() / 2 - z;
  const T rho = density_from_head(g, B);
  const T drho = pow(rho, 2 - g) / (g - 1);

  const Vec2<T> rel{p[0] - xs, p[1] - eta};       // p - X
  const Vec2<T> rel1{du - xs, -st.v2 - eta};      // U - X
  const Vec2<T> m = rho * rel - rho1 * rel1;
  const Vec2<T> n{du - p[0], -st.v2 - p[1]};
  const T N = n.norm();
  if (!(N > 1e-8)) {
    throw ObliquenessLost("psi_jump: shock normal degenerate");
  }

  JumpParts<T> out;
  out.value = m.dot(n) / N;
  out.normal = n / N;

  const auto dPsi = [&](const Vec2<T>& dm, const Vec2<T>& dn) {
    return (dm.dot(n) + m.dot(dn)) / N -
           m.dot(n) * n.dot(dn) / (N * N * N);
  };
  // d/dp1: B varies through xs p1 and -p1^2/2; n loses e1.
  {
    const T dB = xs - p[0];
    const Vec2<T> dm = drho * dB * rel + rho * Vec2<T>{1, 0};
    out.gradient[0] = dPsi(dm, Vec2<T>{-1, 0});
  }
  {
    const T dB = eta - p[1];
    const Vec2<T> dm = drho * dB * rel + rho * Vec2<T>{0, 1};
    out.gradient[1] = dPsi(dm, Vec2<T>{0, -1});
  }
  // d/dz: both the Bernoulli head and the substituted position move.
  {
    const T dB = p[0] / du - 1;
    const Vec2<T> dm = drho * dB * rel + (rho1 - rho) * Vec2<T>{1 / du, 0};
    out.gradient[2] = dm.dot(n) / N;
  }
  return out;
}

// One linear boundary row b1 psi_xi + b2 psi_eta + b3 psi = rhs.
struct BoundaryConditionRow {
  double b1 = 0, b2 = 0, b3 = 0, rhs = 0;
  Vec2<double> normal{0, 0};
  double obliqueness = 0;
};

inline double obliqueness_floor(const StateTwo<double>& st) {
  const double rho2p = st.rho2 / (st.c2 * st.c2);
  return 0.25 * rho2p * (st.c2 * st.c2 - st.xihat * st.xihat);
}

// Newton linearization of the jump functional about the current trace: the
// row reproduces -psi_jump at the expansion point, so a solved row drives the
// jump toward zero quadratically.
inline BoundaryConditionRow rh_condition_row(const StateTwo<double>& st,
                                             double psi_value,
                                             const Vec2<double>& psi_grad,
                                             double eta) {
  const auto jump = psi_jump(st, psi_grad, psi_value, eta);
  BoundaryConditionRow row;
  row.b1 = jump.gradient[0];
  row.b2 = jump.gradient[1];
  row.b3 = jump.gradient[2];
  row.rhs = jump.gradient[0] * psi_grad[0] + jump.gradient[1] * psi_grad[1] +
            jump.gradient[2] * psi_value - jump.value;
  row.normal = jump.normal;
  row.obliqueness = row.b1 * jump.normal[0] + row.b2 * jump.normal[1];
  if (row.obliqueness < obliqueness_floor(st)) {
    throw ObliquenessLost("rh_condition_row: boundary coefficient lost its floor");
  }
  return row;
}

// Fixed boundary data: the sonic arc is a homogeneous Dirichlet side, the
// wedge side reflects (zero normal derivative), and the symmetry line carries
// the inhomogeneous slope left over from shifting the frame.
struct FixedBcs {
  Vec2<double> wedge_normal;
  double symmetry_rhs;
  double sonic_value;
};

inline FixedBcs fixed_bc_rows(const ReflectionDomain& dom) {
  FixedBcs bc;
  bc.wedge_normal =
      Vec2<double>{-std::sin(dom.st.theta_w), std::cos(dom.st.theta_w)};
  bc.symmetry_rhs = -dom.st.v2;
  bc.sonic_value = 0.0;
  return bc;
}

}  // namespace reflect
