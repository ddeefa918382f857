#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "reflect/gas.hpp"

namespace reflect {

template <typename T>
using Vec3 = Eigen::Matrix<T, 3, 1>;
template <typename T>
using Mat3 = Eigen::Matrix<T, 3, 3>;

template <typename T>
struct NormalReflection {
  T rho2bar;  // density behind the normally reflected shock
  T xibar;    // standing position of that shock (negative)
  T c2bar;    // sound speed of the reflected state
};

// Density behind a head-on reflection off a vertical wall.  The defining
// scalar equation F(s) = s^{g-1} - rho1^{g-1} - u1^2/2 - rho1 u1^2/(s-rho1)
// is strictly increasing on (rho1, inf) with F -> -inf at rho1+ and
// F -> +inf, so the root is bracketed by doubling and polished by Newton.
template <typename T>
NormalReflection<T> normal_reflection(const GasSetup<T>& gas) {
  using std::pow, std::sqrt;
  const T g = gas.gamma, rho1 = gas.rho1, u1 = gas.u1;
  const auto F = [&](T s) {
    return pow(s, g - 1) - pow(rho1, g - 1) - u1 * u1 / 2 -
           rho1 * u1 * u1 / (s - rho1);
  };
  T step = rho1;
  T hi = rho1 + step;
  int guard = 0;
  while (F(hi) < T(0)) {
    step *= 2;
    hi = rho1 + step;
    if (++guard > 200) {
      throw RootNotBracketed("normal_reflection: no sign change found");
    }
  }
  T lo = hi - step / 2 > rho1 ? hi - step / 2 : rho1 * (1 + T(1e-14));
  while (F(lo) > T(0)) lo = rho1 + (lo - rho1) / 2;
  // Bisection with a Newton polish inside the bracket.
  T s = (lo + hi) / 2;
  for (int it = 0; it < 200; ++it) {
    const T f = F(s);
    (f > 0 ? hi : lo) = s;
    const T dF =
        (g - 1) * pow(s, g - 2) + rho1 * u1 * u1 / ((s - rho1) * (s - rho1));
    T snext = s - f / dF;
    if (!(snext > lo && snext < hi)) snext = (lo + hi) / 2;
    if (std::abs(snext - s) <= 8 * std::numeric_limits<T>::epsilon() * s) {
      s = snext;
      break;
    }
    s = snext;
  }
  NormalReflection<T> nr;
  nr.rho2bar = s;
  nr.xibar = -rho1 * u1 / (s - rho1);
  nr.c2bar = sqrt(sound_speed_sq(g, s));
  if (!(std::abs(nr.xibar) < nr.c2bar)) {
    throw InvariantViolated("normal_reflection: reflected state not subsonic");
  }
  return nr;
}

// Algebraic closure for the reflected oblique shock: unknowns are the
// downstream density rho2, the shock inclination theta_s, and the signed
// position xitilde where the straight shock meets the wedge-normal axis.
// Rows: (1) the shock passes through the tip of the incident shock trace,
// (2) Bernoulli matching between states 0 and 2 at that point,
// (3) mass conservation across the straight shock.
template <typename T>
Vec3<T> vn_residual(const GasSetup<T>& gas, T theta_w, const Vec3<T>& trial) {
  using std::sin, std::cos, std::tan, std::pow;
  const T rho2 = trial[0], ts = trial[1], xt = trial[2];
  const T g = gas.gamma, u1 = gas.u1, xi0 = gas.xi0;
  const T cw = cos(theta_w), sw = sin(theta_w);
  const T cs = cos(ts), ss = sin(ts), cws = cos(theta_w - ts);
  Vec3<T> r;
  r[0] = (xt - xi0) * cw + xi0 * sw * (cs / ss);
  r[1] = pow(rho2, g - 1) + u1 * u1 * cs * cs / (2 * cws * cws) +
         u1 * sw * ss * xt / cws - u1 * xi0 - pow(gas.rho0, g - 1);
  r[2] = (u1 * cs * tan(ts - theta_w) - xt * ss) * rho2 -
         gas.rho1 * (u1 - xt) * ss;
  return r;
}

template <typename T>
Mat3<T> vn_jacobian(const GasSetup<T>& gas, T theta_w, const Vec3<T>& trial) {
  using std::sin, std::cos, std::tan, std::pow;
  const T rho2 = trial[0], ts = trial[1], xt = trial[2];
  const T g = gas.gamma, u1 = gas.u1, xi0 = gas.xi0;
  const T cw = cos(theta_w), sw = sin(theta_w);
  const T cs = cos(ts), ss = sin(ts), cws = cos(theta_w - ts);
  Mat3<T> J;
  J(0, 0) = T(0);
  J(0, 1) = -xi0 * sw / (ss * ss);
  J(0, 2) = cw;
  J(1, 0) = (g - 1) * pow(rho2, g - 2);
  // d/dts[cs/cws] = -sw/cws^2 and d/dts[ss/cws] = cw/cws^2.
  J(1, 1) = -u1 * u1 * cs * sw / (cws * cws * cws) +
            u1 * xt * sw * cw / (cws * cws);
  J(1, 2) = u1 * sw * ss / cws;
  const T tsw = tan(ts - theta_w), csw = cos(ts - theta_w);
  J(2, 0) = u1 * cs * tsw - xt * ss;
  J(2, 1) = rho2 * (-u1 * ss * tsw + u1 * cs / (csw * csw) - xt * cs) -
            gas.rho1 * (u1 - xt) * cs;
  J(2, 2) = (gas.rho1 - rho2) * ss;
  return J;
}

// Everything the downstream construction needs about the reflected state:
// primary unknowns, the frame velocity (u2, v2), the sonic radius c2, the
// shock's axis intercept xihat in the shifted frame, and the corner points
// of the subsonic region.
template <typename T>
struct StateTwo {
  GasSetup<T> gas;
  NormalReflection<T> nr;
  T theta_w{}, sigma{};
  T rho2{}, theta_s{}, xitilde{};
  T u2{}, v2{}, c2{}, xihat{};
  T eta1{}, xi1{}, y1{};        // sonic-arc / shock meeting point and its angle
  Vec2<T> P0, P1, P4;           // shifted coordinates
  int newton_iterations{};
};

struct StateTwoOptions {
  double sigma_max = 0.15;
  double tol = 1e-12;
  int max_iterations = 40;
  int max_halvings = 8;
};

namespace detail {

// l(eta) = eta cot(theta_s) + xihat, the straight reflected shock in the
// shifted frame; P1 is its intersection with the sonic circle at eta > 0.
template <typename T>
T solve_eta1(T cot_ts, T xihat, T c2) {
  using std::sqrt;
  T eta = sqrt(c2 * c2 - xihat * xihat);
  for (int it = 0; it < 60; ++it) {
    const T l = eta * cot_ts + xihat;
    const T gval = l * l + eta * eta - c2 * c2;
    const T dg = 2 * l * cot_ts + 2 * eta;
    const T enext = eta - gval / dg;
    if (std::abs(enext - eta) <= T(1e-15) * c2) return enext;
    eta = enext;
  }
  throw NewtonDiverged("state2_solve: sonic intersection did not converge");
}

}  // namespace detail

template <typename T>
StateTwo<T> state2_solve(const GasSetup<T>& gas, T theta_w,
                         const StateTwoOptions& opt = {}) {
  using std::sin, std::cos, std::sqrt, std::atan2, std::abs;
  const T half_pi = T(2) * atan2(T(1), T(1));
  const T sigma = half_pi - theta_w;
  if (!(sigma >= T(0)) || sigma >= T(opt.sigma_max)) {
    throw NewtonDiverged("state2_solve: wedge angle outside configured basin");
  }
  StateTwo<T> st;
  st.gas = gas;
  st.nr = normal_reflection(gas);
  st.theta_w = theta_w;
  st.sigma = sigma;

  Vec3<T> z{st.nr.rho2bar, half_pi, st.nr.xibar};
  Vec3<T> r = vn_residual(gas, theta_w, z);
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (r.template lpNorm<Eigen::Infinity>() <= T(opt.tol)) break;
    const Mat3<T> J = vn_jacobian(gas, theta_w, z);
    const Vec3<T> dz = J.colPivHouseholderQr().solve(-r);
    T lambda = T(1);
    Vec3<T> znew, rnew;
    bool improved = false;
    for (int h = 0; h <= opt.max_halvings; ++h) {
      znew = z + lambda * dz;
      rnew = vn_residual(gas, theta_w, znew);
      if (rnew.template lpNorm<Eigen::Infinity>() <
          r.template lpNorm<Eigen::Infinity>()) {
        improved = true;
        break;
      }
      lambda /= 2;
    }
    if (!improved) {
      throw NewtonDiverged("state2_solve: damping failed to reduce residual");
    }
    z = znew;
    r = rnew;
  }
  if (r.template lpNorm<Eigen::Infinity>() > T(opt.tol)) {
    throw NewtonDiverged("state2_solve: residual tolerance not reached");
  }
  st.newton_iterations = it;
  st.rho2 = z[0];
  st.theta_s = z[1];
  st.xitilde = z[2];

  const T cw = cos(theta_w), sw = sin(theta_w);
  const T cs = cos(st.theta_s), ss = sin(st.theta_s);
  const T cws = cos(theta_w - st.theta_s);
  st.u2 = gas.u1 * cw * cs / cws;
  st.v2 = gas.u1 * sw * cs / cws;
  st.c2 = sqrt(sound_speed_sq(gas.gamma, st.rho2));
  st.xihat = st.xitilde - st.u2 + st.v2 * cs / ss;

  const bool at_limit = sigma < T(1e-12);
  if (!at_limit) {
    const T quarter_pi = half_pi / 2;
    if (!(st.theta_s > quarter_pi && st.theta_s < theta_w)) {
      throw InvariantViolated("state2_solve: shock inclination out of range");
    }
    if (!(st.xitilde < T(0) && st.xitilde < st.xihat)) {
      throw InvariantViolated("state2_solve: shock intercepts out of order");
    }
  }
  if (!(abs(st.xitilde) < st.c2)) {
    throw InvariantViolated("state2_solve: reflection point not subsonic");
  }
  // The sonic gap may shrink with sigma but never below half its head-on value.
  if (st.c2 - abs(st.xitilde) < (st.nr.c2bar - abs(st.nr.xibar)) / 2) {
    throw InvariantViolated("state2_solve: sonic gap collapsed");
  }

  st.eta1 = detail::solve_eta1(cs / ss, st.xihat, st.c2);
  st.xi1 = st.eta1 * cs / ss + st.xihat;
  if (!at_limit && !(-st.c2 < st.xitilde && st.xihat < st.xi1 && st.xi1 < T(0))) {
    throw InvariantViolated("state2_solve: sonic intersection out of order");
  }
  st.y1 = atan2(st.eta1, st.xi1) - theta_w;
  st.P1 = Vec2<T>(st.xi1, st.eta1);
  st.P4 = st.c2 * Vec2<T>(cw, sw);
  // P0 is where the incident shock trace meets the wedge side; its height
  // blows up as sigma -> 0 (the two lines become parallel).
  const T sws = sin(theta_w - st.theta_s);
  const T eta0 = at_limit ? std::numeric_limits<T>::infinity()
                          : abs(st.xihat) * ss * sw / sws;
  st.P0 = Vec2<T>(gas.xi0 - st.u2, eta0);
  return st;
}

// Pseudo-potentials of the three uniform states in the shifted frame
// (origin at the sonic-circle center), with gradients.
template <typename T>
struct BackgroundPotentials {
  T phi0, phi1, phi2;
  Vec2<T> d0, d1, d2;
};

template <typename T>
BackgroundPotentials<T> background_potentials(const StateTwo<T>& st,
                                              const Vec2<T>& pt) {
  const T xi = pt[0], eta = pt[1];
  const T r2 = xi * xi + eta * eta;
  const T q2 = st.u2 * st.u2 + st.v2 * st.v2;
  const T u1 = st.gas.u1, xi0 = st.gas.xi0;
  BackgroundPotentials<T> b;
  b.phi0 = -r2 / 2 - (st.u2 * xi + st.v2 * eta) - q2 / 2;
  b.phi1 = -r2 / 2 + (u1 - st.u2) * xi - st.v2 * eta - q2 / 2 +
           u1 * (st.u2 - xi0);
  b.phi2 = -r2 / 2 - q2 / 2 + (u1 - st.u2) * st.xihat + u1 * (st.u2 - xi0);
  b.d0 = Vec2<T>(-xi - st.u2, -eta - st.v2);
  b.d1 = Vec2<T>(u1 - st.u2 - xi, -st.v2 - eta);
  b.d2 = Vec2<T>(-xi, -eta);
  return b;
}

}  // namespace reflect
