#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "reflect/states.hpp"

namespace reflect {

using Eigen::ArrayXXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Sonic frame: x is depth inside the sonic circle, y the angle past the wedge
// side.  Singular at the circle center.

template <typename T>
Vec2<T> to_sonic_frame(const StateTwo<T>& st, const Vec2<T>& pt) {
  using std::atan2, std::hypot;
  const T r = hypot(pt[0], pt[1]);
  if (!(r > T(0))) {
    throw OriginSingularity("to_sonic_frame: point at the circle center");
  }
  return {st.c2 - r, atan2(pt[1], pt[0]) - st.theta_w};
}

template <typename T>
Vec2<T> from_sonic_frame(const StateTwo<T>& st, const Vec2<T>& xy) {
  using std::cos, std::sin;
  const T r = st.c2 - xy[0];
  const T th = xy[1] + st.theta_w;
  return {r * cos(th), r * sin(th)};
}

// Straight reflected shock in the shifted frame.
template <typename T>
T l_line(const StateTwo<T>& st, T eta) {
  return eta * std::cos(st.theta_s) / std::sin(st.theta_s) + st.xihat;
}

// The same line expressed as an angle offset y = fhat0(x) in the sonic frame;
// only defined while the line still meets the circle of radius c2 - x.
template <typename T>
T fhat0(const StateTwo<T>& st, T x) {
  using std::asin, std::abs, std::sin;
  const T arg = abs(st.xihat) * sin(st.theta_s) / (st.c2 - x);
  if (!(arg >= T(-1) && arg <= T(1))) {
    throw ArcsineDomain("fhat0: line does not reach this radius");
  }
  return asin(arg) - st.theta_w + st.theta_s;
}

// ---------------------------------------------------------------------------
// Free boundary: monotone cubic Hermite interpolant of shock samples
// (eta_k, xi_k), with the end slope clamped to the straight-shock slope so the
// curve meets the sonic circle at the same angle as the line.

class FreeBoundaryCurve {
 public:
  FreeBoundaryCurve() = default;

  FreeBoundaryCurve(VectorXd eta, VectorXd val, double end_slope)
      : eta_(std::move(eta)), val_(std::move(val)) {
    const int n = static_cast<int>(eta_.size());
    if (n < 3) throw NonMonotone("free boundary needs at least 3 samples");
    for (int k = 0; k + 1 < n; ++k) {
      if (!(eta_[k + 1] > eta_[k])) {
        throw NonMonotone("free boundary samples must increase in eta");
      }
      if (!std::isfinite(val_[k])) {
        throw NonMonotone("free boundary sample not finite");
      }
    }
    slope_ = fritsch_carlson(eta_, val_);
    slope_[n - 1] = end_slope;
  }

  static FreeBoundaryCurve straight_reference(const StateTwo<double>& st,
                                              int n_samples) {
    VectorXd eta = VectorXd::LinSpaced(n_samples + 1, -st.v2, st.eta1);
    VectorXd val(n_samples + 1);
    for (int k = 0; k <= n_samples; ++k) val[k] = l_line(st, eta[k]);
    return {std::move(eta), std::move(val),
            std::cos(st.theta_s) / std::sin(st.theta_s)};
  }

  double operator()(double eta) const { return hermite(eta).first; }
  double derivative(double eta) const { return hermite(eta).second; }

  const VectorXd& samples_eta() const { return eta_; }
  const VectorXd& samples_val() const { return val_; }
  double eta_min() const { return eta_[0]; }
  double eta_max() const { return eta_[eta_.size() - 1]; }

 private:
  static VectorXd fritsch_carlson(const VectorXd& x, const VectorXd& v) {
    const int n = static_cast<int>(x.size());
    VectorXd h(n - 1), delta(n - 1), d(n);
    for (int k = 0; k < n - 1; ++k) {
      h[k] = x[k + 1] - x[k];
      delta[k] = (v[k + 1] - v[k]) / h[k];
    }
    d[0] = ((2 * h[0] + h[1]) * delta[0] - h[0] * delta[1]) / (h[0] + h[1]);
    d[n - 1] = ((2 * h[n - 2] + h[n - 3]) * delta[n - 2] -
                h[n - 2] * delta[n - 3]) /
               (h[n - 2] + h[n - 3]);
    for (int k = 1; k < n - 1; ++k) {
      d[k] = (h[k] * delta[k - 1] + h[k - 1] * delta[k]) / (h[k - 1] + h[k]);
    }
    const auto limit = [](double& s, double lo_delta, double hi_delta) {
      if (lo_delta * hi_delta <= 0) {
        s = 0;
      } else {
        const double cap = 3 * std::min(std::abs(lo_delta), std::abs(hi_delta));
        if (s * lo_delta <= 0) s = 0;
        s = std::clamp(s, -cap, cap);
      }
    };
    limit(d[0], delta[0], delta[0]);
    limit(d[n - 1], delta[n - 2], delta[n - 2]);
    for (int k = 1; k < n - 1; ++k) limit(d[k], delta[k - 1], delta[k]);
    return d;
  }

  std::pair<double, double> hermite(double eta) const {
    const int n = static_cast<int>(eta_.size());
    // Linear extension beyond the sampled span.
    if (eta <= eta_[0]) {
      return {val_[0] + slope_[0] * (eta - eta_[0]), slope_[0]};
    }
    if (eta >= eta_[n - 1]) {
      return {val_[n - 1] + slope_[n - 1] * (eta - eta_[n - 1]),
              slope_[n - 1]};
    }
    const double* lo = std::upper_bound(eta_.data(), eta_.data() + n, eta);
    int i = static_cast<int>(lo - eta_.data()) - 1;
    i = std::clamp(i, 0, n - 2);
    const double h = eta_[i + 1] - eta_[i];
    const double t = (eta - eta_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double value = val_[i] * (2 * t3 - 3 * t2 + 1) +
                         h * slope_[i] * (t3 - 2 * t2 + t) +
                         val_[i + 1] * (-2 * t3 + 3 * t2) +
                         h * slope_[i + 1] * (t3 - t2);
    const double deriv = (val_[i] * (6 * t2 - 6 * t) +
                          h * slope_[i] * (3 * t2 - 4 * t + 1) +
                          val_[i + 1] * (6 * t - 6 * t2) +
                          h * slope_[i + 1] * (3 * t2 - 2 * t)) /
                         h;
    return {value, deriv};
  }

  VectorXd eta_, val_, slope_;
};

// ---------------------------------------------------------------------------
// Curvilinear grid over the subsonic region: a in [0,1] runs wedge -> shock,
// b in [0,1] runs symmetry line -> sonic arc.  Metric terms are finite
// differences of the node coordinates so that every discrete operator sees
// one consistent geometry.

enum class Side { interior, sonic, shock, wedge, symmetry };

struct ReflectionDomain {
  StateTwo<double> st;
  FreeBoundaryCurve fb;
  int na = 0, nb = 0;  // cell counts in a and b
  double epsilon = 0;
  double da = 0, db = 0;

  ArrayXXd xi, eta;          // node coordinates, (na+1) x (nb+1)
  ArrayXXd x, y;             // sonic-frame coordinates of the nodes
  ArrayXXd xi_a, xi_b, eta_a, eta_b, jac;
  ArrayXXd xi_aa, xi_ab, xi_bb, eta_aa, eta_ab, eta_bb;
  Eigen::Array<uint8_t, Eigen::Dynamic, Eigen::Dynamic> region;  // 1=near-sonic 2=bulk

  static constexpr uint8_t near_sonic_bit = 1;
  static constexpr uint8_t bulk_bit = 2;

  Side side(int i, int j) const {
    if (j == nb) return Side::sonic;
    if (j == 0) return Side::symmetry;
    if (i == 0) return Side::wedge;
    if (i == na) return Side::shock;
    return Side::interior;
  }
  int index(int i, int j) const { return i + (na + 1) * j; }
  int n_nodes() const { return (na + 1) * (nb + 1); }

  // Continuous transfinite map of the four sides (used for point location;
  // the node arrays above are exact samples of it).
  Vec2<double> map(double a, double b) const {
    const Vec2<double> B = corner_p3() + a * (corner_p2() - corner_p3());
    const Vec2<double> T = sonic_arc(a);
    const Vec2<double> L = corner_p3() + b * (corner_p4() - corner_p3());
    const Vec2<double> R = shock_side(b);
    return (1 - b) * B + b * T + (1 - a) * L + a * R -
           ((1 - a) * (1 - b) * corner_p3() + a * (1 - b) * corner_p2() +
            (1 - a) * b * corner_p4() + a * b * corner_p1());
  }

  Eigen::Matrix2d map_jacobian(double a, double b) const {
    const Vec2<double> Bp = corner_p2() - corner_p3();
    const Vec2<double> Tp = sonic_arc_deriv(a);
    const Vec2<double> Lp = corner_p4() - corner_p3();
    const Vec2<double> Rp = shock_side_deriv(b);
    const Vec2<double> Xa = (1 - b) * Bp + b * Tp + shock_side(b) -
                            (corner_p3() + b * (corner_p4() - corner_p3())) -
                            (-(1 - b) * corner_p3() + (1 - b) * corner_p2() -
                             b * corner_p4() + b * corner_p1());
    const Vec2<double> Xb =
        sonic_arc(a) - (corner_p3() + a * (corner_p2() - corner_p3())) +
        (1 - a) * Lp + a * Rp -
        (-(1 - a) * corner_p3() - a * corner_p2() + (1 - a) * corner_p4() +
         a * corner_p1());
    Eigen::Matrix2d J;
    J.col(0) = Xa;
    J.col(1) = Xb;
    return J;
  }

  // Newton inversion of the map; empty when the point is outside the patch.
  std::optional<Vec2<double>> locate(const Vec2<double>& pt) const {
    const double scale = st.c2;
    for (const auto& seed : {Vec2<double>{0.5, 0.5}, Vec2<double>{0.2, 0.8},
                             Vec2<double>{0.8, 0.2}, Vec2<double>{0.1, 0.1},
                             Vec2<double>{0.9, 0.9}}) {
      Vec2<double> ab = seed;
      bool ok = false;
      for (int it = 0; it < 50; ++it) {
        const Vec2<double> res = map(ab[0], ab[1]) - pt;
        if (res.norm() < 1e-12 * scale) {
          ok = true;
          break;
        }
        Eigen::Matrix2d J = map_jacobian(ab[0], ab[1]);
        Vec2<double> step = J.partialPivLu().solve(res);
        step = step.cwiseMax(-0.5).cwiseMin(0.5);
        ab -= step;
        ab = ab.cwiseMax(-0.25).cwiseMin(1.25);
      }
      if (ok && ab[0] > -1e-9 && ab[0] < 1 + 1e-9 && ab[1] > -1e-9 &&
          ab[1] < 1 + 1e-9) {
        return ab.cwiseMax(0.0).cwiseMin(1.0);
      }
    }
    return std::nullopt;
  }

  Vec2<double> corner_p1() const { return {st.xi1, st.eta1}; }
  Vec2<double> corner_p2() const { return {fb(-st.v2), -st.v2}; }
  Vec2<double> corner_p3() const { return {-st.u2, -st.v2}; }
  Vec2<double> corner_p4() const {
    return {st.c2 * std::cos(st.theta_w), st.c2 * std::sin(st.theta_w)};
  }
  Vec2<double> sonic_arc(double a) const {
    const double th = st.theta_w + a * st.y1;
    return {st.c2 * std::cos(th), st.c2 * std::sin(th)};
  }
  Vec2<double> sonic_arc_deriv(double a) const {
    const double th = st.theta_w + a * st.y1;
    return {-st.c2 * st.y1 * std::sin(th), st.c2 * st.y1 * std::cos(th)};
  }
  Vec2<double> shock_side(double b) const {
    const double e = -st.v2 + b * (st.eta1 + st.v2);
    return {fb(e), e};
  }
  Vec2<double> shock_side_deriv(double b) const {
    const double e = -st.v2 + b * (st.eta1 + st.v2);
    const double de = st.eta1 + st.v2;
    return {fb.derivative(e) * de, de};
  }

  double area() const {
    double total = 0;
    for (int i = 0; i < na; ++i) {
      for (int j = 0; j < nb; ++j) {
        const double x0 = xi(i, j), y0 = eta(i, j);
        const double x1 = xi(i + 1, j), y1c = eta(i + 1, j);
        const double x2 = xi(i + 1, j + 1), y2 = eta(i + 1, j + 1);
        const double x3 = xi(i, j + 1), y3 = eta(i, j + 1);
        total += 0.5 * std::abs(x0 * y1c - x1 * y0 + x1 * y2 - x2 * y1c +
                                x2 * y3 - x3 * y2 + x3 * y0 - x0 * y3);
      }
    }
    return total;
  }
};

namespace detail {

// Second-order first derivative along one index direction.
inline void diff1(const ArrayXXd& u, double h, int dir, ArrayXXd& out) {
  const int ni = static_cast<int>(u.rows()), nj = static_cast<int>(u.cols());
  out.resize(ni, nj);
  for (int i = 0; i < ni; ++i) {
    for (int j = 0; j < nj; ++j) {
      const int n = dir == 0 ? ni : nj;
      const int k = dir == 0 ? i : j;
      auto v = [&](int kk) { return dir == 0 ? u(kk, j) : u(i, kk); };
      double d;
      if (k == 0) {
        d = (-3 * v(0) + 4 * v(1) - v(2)) / (2 * h);
      } else if (k == n - 1) {
        d = (3 * v(n - 1) - 4 * v(n - 2) + v(n - 3)) / (2 * h);
      } else {
        d = (v(k + 1) - v(k - 1)) / (2 * h);
      }
      out(i, j) = d;
    }
  }
}

// Second-order second derivative along one index direction.
inline void diff2(const ArrayXXd& u, double h, int dir, ArrayXXd& out) {
  const int ni = static_cast<int>(u.rows()), nj = static_cast<int>(u.cols());
  out.resize(ni, nj);
  for (int i = 0; i < ni; ++i) {
    for (int j = 0; j < nj; ++j) {
      const int n = dir == 0 ? ni : nj;
      const int k = dir == 0 ? i : j;
      auto v = [&](int kk) { return dir == 0 ? u(kk, j) : u(i, kk); };
      double d;
      if (k == 0) {
        d = (2 * v(0) - 5 * v(1) + 4 * v(2) - v(3)) / (h * h);
      } else if (k == n - 1) {
        d = (2 * v(n - 1) - 5 * v(n - 2) + 4 * v(n - 3) - v(n - 4)) / (h * h);
      } else {
        d = (v(k + 1) - 2 * v(k) + v(k - 1)) / (h * h);
      }
      out(i, j) = d;
    }
  }
}

}  // namespace detail

inline ReflectionDomain build_domain(const StateTwo<double>& st,
                                     const FreeBoundaryCurve& fb, int n_angular,
                                     int n_radial, double epsilon) {
  if (n_angular < 8 || n_radial < 8) {
    throw MeshFold("build_domain: resolution below 8x8");
  }
  ReflectionDomain dom;
  dom.st = st;
  dom.fb = fb;
  dom.na = n_angular;
  dom.nb = n_radial;
  dom.epsilon = epsilon;
  dom.da = 1.0 / n_angular;
  dom.db = 1.0 / n_radial;

  // The curve must span the symmetry line to the sonic circle and stay on or
  // right of the straight shock.
  const double scale = st.nr.c2bar;
  if (std::abs(fb.eta_min() + st.v2) > 1e-9 * scale ||
      std::abs(fb.eta_max() - st.eta1) > 1e-9 * scale) {
    throw MeshFold("build_domain: free boundary does not span the domain");
  }
  if (std::abs(fb(st.eta1) - l_line(st, st.eta1)) > 1e-9 * scale) {
    throw MeshFold("build_domain: free boundary misses the sonic circle");
  }
  for (int k = 0; k < fb.samples_eta().size(); ++k) {
    const double e = fb.samples_eta()[k];
    if (fb.samples_val()[k] < l_line(st, e) - 1e-9 * scale) {
      throw MeshFold("build_domain: free boundary crosses the straight shock");
    }
  }

  const int ni = dom.na + 1, nj = dom.nb + 1;
  dom.xi.resize(ni, nj);
  dom.eta.resize(ni, nj);
  dom.x.resize(ni, nj);
  dom.y.resize(ni, nj);
  dom.region.resize(ni, nj);
  for (int i = 0; i < ni; ++i) {
    for (int j = 0; j < nj; ++j) {
      const Vec2<double> p = dom.map(i * dom.da, j * dom.db);
      dom.xi(i, j) = p[0];
      dom.eta(i, j) = p[1];
      const double r = std::hypot(p[0], p[1]);
      dom.x(i, j) = st.c2 - r;
      dom.y(i, j) = r > 1e-12 * st.c2
                        ? std::atan2(p[1], p[0]) - st.theta_w
                        : 0.0;
      uint8_t tag = 0;
      if (dom.x(i, j) < 2 * epsilon) tag |= ReflectionDomain::near_sonic_bit;
      if (dom.x(i, j) > epsilon) tag |= ReflectionDomain::bulk_bit;
      dom.region(i, j) = tag;
    }
  }

  detail::diff1(dom.xi, dom.da, 0, dom.xi_a);
  detail::diff1(dom.xi, dom.db, 1, dom.xi_b);
  detail::diff1(dom.eta, dom.da, 0, dom.eta_a);
  detail::diff1(dom.eta, dom.db, 1, dom.eta_b);
  detail::diff2(dom.xi, dom.da, 0, dom.xi_aa);
  detail::diff2(dom.xi, dom.db, 1, dom.xi_bb);
  detail::diff2(dom.eta, dom.da, 0, dom.eta_aa);
  detail::diff2(dom.eta, dom.db, 1, dom.eta_bb);
  ArrayXXd tmp;
  detail::diff1(dom.xi_a, dom.db, 1, tmp);
  dom.xi_ab = tmp;
  detail::diff1(dom.eta_a, dom.db, 1, tmp);
  dom.eta_ab = tmp;

  dom.jac = dom.xi_a * dom.eta_b - dom.xi_b * dom.eta_a;
  const double jref = dom.jac(ni / 2, nj / 2);
  const double jfloor = 1e-10 * std::abs(jref);
  for (int i = 0; i < ni; ++i) {
    for (int j = 0; j < nj; ++j) {
      if (!(dom.jac(i, j) * jref > 0) || std::abs(dom.jac(i, j)) < jfloor) {
        throw MeshFold("build_domain: grid Jacobian degenerate or reversed");
      }
    }
  }
  return dom;
}

// Shock update: read the level-set position of phi1 - phi out of psi along
// the shock side of the grid.  Dips below the straight shock within roundoff
// and discretization slack are clamped onto it; anything worse is refused.
inline FreeBoundaryCurve extract_free_boundary(const ReflectionDomain& dom,
                                               const ArrayXXd& psi,
                                               const StateTwo<double>& st) {
  const int i = dom.na;
  VectorXd eta(dom.nb + 1), val(dom.nb + 1);
  const double du = st.gas.u1 - st.u2;
  const double slack = 1e-6 * st.nr.c2bar;
  for (int j = 0; j <= dom.nb; ++j) {
    eta[j] = -st.v2 + (static_cast<double>(j) / dom.nb) * (st.eta1 + st.v2);
    double f = (psi(i, j) + st.v2 * eta[j]) / du + st.xihat;
    if (!std::isfinite(f)) {
      throw NonMonotone("extract_free_boundary: non-finite shock position");
    }
    const double l = l_line(st, eta[j]);
    if (f < l) {
      if (f < l - slack) {
        throw NonMonotone(
            "extract_free_boundary: shock position fell behind the straight "
            "shock");
      }
      f = l;
    }
    val[j] = f;
  }
  val[dom.nb] = l_line(st, st.eta1);  // pinned to the sonic circle
  return {std::move(eta), std::move(val),
          std::cos(st.theta_s) / std::sin(st.theta_s)};
}

// ---------------------------------------------------------------------------
// Derivative fields of a grid function, mapped through the discrete metric.

struct DerivativeFields {
  ArrayXXd f_xi, f_eta, f_xixi, f_xieta, f_etaeta;
  ArrayXXd f_x, f_y, f_xx, f_xy, f_yy;  // sonic frame
};

inline DerivativeFields compute_derivatives(const ReflectionDomain& dom,
                                            const ArrayXXd& f) {
  DerivativeFields d;
  ArrayXXd f_a, f_b, f_aa, f_bb, f_ab;
  detail::diff1(f, dom.da, 0, f_a);
  detail::diff1(f, dom.db, 1, f_b);
  detail::diff2(f, dom.da, 0, f_aa);
  detail::diff2(f, dom.db, 1, f_bb);
  detail::diff1(f_a, dom.db, 1, f_ab);

  const ArrayXXd& det = dom.jac;
  d.f_xi = (dom.eta_b * f_a - dom.eta_a * f_b) / det;
  d.f_eta = (-dom.xi_b * f_a + dom.xi_a * f_b) / det;

  const ArrayXXd G11 = f_aa - d.f_xi * dom.xi_aa - d.f_eta * dom.eta_aa;
  const ArrayXXd G12 = f_ab - d.f_xi * dom.xi_ab - d.f_eta * dom.eta_ab;
  const ArrayXXd G22 = f_bb - d.f_xi * dom.xi_bb - d.f_eta * dom.eta_bb;
  const ArrayXXd det2 = det * det;
  d.f_xixi = (dom.eta_b * dom.eta_b * G11 - 2 * dom.eta_a * dom.eta_b * G12 +
              dom.eta_a * dom.eta_a * G22) /
             det2;
  d.f_xieta = (-dom.eta_b * dom.xi_b * G11 +
               (dom.eta_a * dom.xi_b + dom.eta_b * dom.xi_a) * G12 -
               dom.eta_a * dom.xi_a * G22) /
              det2;
  d.f_etaeta = (dom.xi_b * dom.xi_b * G11 - 2 * dom.xi_a * dom.xi_b * G12 +
                dom.xi_a * dom.xi_a * G22) /
               det2;

  const int ni = dom.na + 1, nj = dom.nb + 1;
  d.f_x.setZero(ni, nj);
  d.f_y.setZero(ni, nj);
  d.f_xx.setZero(ni, nj);
  d.f_xy.setZero(ni, nj);
  d.f_yy.setZero(ni, nj);
  for (int i = 0; i < ni; ++i) {
    for (int j = 0; j < nj; ++j) {
      const double xi = dom.xi(i, j), eta = dom.eta(i, j);
      const double r2 = xi * xi + eta * eta;
      const double r = std::sqrt(r2);
      if (r < 1e-12 * dom.st.c2) continue;  // center convention: leave zero
      const double fx = d.f_xi(i, j), fe = d.f_eta(i, j);
      const double fxx = d.f_xixi(i, j), fxe = d.f_xieta(i, j),
                   fee = d.f_etaeta(i, j);
      const double f_r = (xi * fx + eta * fe) / r;
      const double f_th = xi * fe - eta * fx;
      const double f_rr = (xi * xi * fxx + 2 * xi * eta * fxe + eta * eta * fee) / r2;
      const double f_rth =
          (-eta * fx + xi * fe - xi * eta * fxx + (xi * xi - eta * eta) * fxe +
           xi * eta * fee) /
          r;
      const double f_thth =
          -(xi * fx + eta * fe) + eta * eta * fxx - 2 * xi * eta * fxe +
          xi * xi * fee;
      d.f_x(i, j) = -f_r;
      d.f_y(i, j) = f_th;
      d.f_xx(i, j) = f_rr;
      d.f_xy(i, j) = -f_rth;
      d.f_yy(i, j) = f_thth;
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Discrete versions of the two solution norms: M1 uses parabolic scaling in
// the near-sonic strip, M2 weights second derivatives by the distance to the
// symmetry line over the bulk region.  Pair seminorms are sampled over grid
// neighbors plus a deterministic coarse set of anchors.

struct NormPair {
  double parabolic = 0;  // M1
  double weighted = 0;   // M2
};

inline NormPair discrete_norms(const ReflectionDomain& dom, const ArrayXXd& f,
                               double alpha = 0.25) {
  const DerivativeFields d = compute_derivatives(dom, f);
  const int ni = dom.na + 1, nj = dom.nb + 1;
  NormPair out;

  // --- M1: sup terms x^{k+l/2-2} |d^k_x d^l_y f| over the near-sonic strip.
  double sup[6] = {0, 0, 0, 0, 0, 0};
  auto in_strip = [&](int i, int j) {
    return (dom.region(i, j) & ReflectionDomain::near_sonic_bit) &&
           dom.x(i, j) > 1e-12;
  };
  for (int i = 0; i < ni; ++i) {
    for (int j = 0; j < nj; ++j) {
      if (!in_strip(i, j)) continue;
      const double X = dom.x(i, j);
      sup[0] = std::max(sup[0], std::pow(X, -2.0) * std::abs(f(i, j)));
      sup[1] = std::max(sup[1], std::pow(X, -1.0) * std::abs(d.f_x(i, j)));
      sup[2] = std::max(sup[2], std::pow(X, -1.5) * std::abs(d.f_y(i, j)));
      sup[3] = std::max(sup[3], std::abs(d.f_xx(i, j)));
      sup[4] = std::max(sup[4], std::pow(X, -0.5) * std::abs(d.f_xy(i, j)));
      sup[5] = std::max(sup[5], std::pow(X, -1.0) * std::abs(d.f_yy(i, j)));
    }
  }
  double m1 = sup[0] + sup[1] + sup[2] + sup[3] + sup[4] + sup[5];

  const int stride = std::max(1, ni / 8);
  auto pair_term_par = [&](int i, int j, int i2, int j2, double& acc) {
    if (!in_strip(i2, j2)) return;
    const double X = dom.x(i, j), X2 = dom.x(i2, j2);
    const double Y = dom.y(i, j), Y2 = dom.y(i2, j2);
    const double mx = std::min(X, X2);
    const double dd = std::pow(
        (X - X2) * (X - X2) + mx * (Y - Y2) * (Y - Y2), alpha / 2);
    if (dd < 1e-14) return;
    const double t20 = std::pow(mx, alpha) *
                       std::abs(d.f_xx(i, j) - d.f_xx(i2, j2)) / dd;
    const double t11 = std::pow(mx, alpha - 0.5) *
                       std::abs(d.f_xy(i, j) - d.f_xy(i2, j2)) / dd;
    const double t02 = std::pow(mx, alpha - 1.0) *
                       std::abs(d.f_yy(i, j) - d.f_yy(i2, j2)) / dd;
    acc = std::max(acc, t20 + t11 + t02);
  };
  double semi1 = 0;
  for (int i = 0; i < ni; ++i) {
    for (int j = 0; j < nj; ++j) {
      if (!in_strip(i, j)) continue;
      if (i + 1 < ni) pair_term_par(i, j, i + 1, j, semi1);
      if (j + 1 < nj) pair_term_par(i, j, i, j + 1, semi1);
      for (int i2 = 0; i2 < ni; i2 += stride) {
        for (int j2 = 0; j2 < nj; j2 += stride) {
          if (i2 == i && j2 == j) continue;
          pair_term_par(i, j, i2, j2, semi1);
        }
      }
    }
  }
  out.parabolic = m1 + semi1;

  // --- M2: weight exponent max(|beta| + k, 0) with k = -1 - alpha.
  auto in_bulk = [&](int i, int j) {
    return (dom.region(i, j) & ReflectionDomain::bulk_bit) != 0;
  };
  auto delta_of = [&](int i, int j) { return dom.eta(i, j) + dom.st.v2; };
  double w0 = 0, w1 = 0, w2 = 0;
  for (int i = 0; i < ni; ++i) {
    for (int j = 0; j < nj; ++j) {
      if (!in_bulk(i, j)) continue;
      const double dl = std::max(delta_of(i, j), 0.0);
      w0 = std::max(w0, std::abs(f(i, j)));
      w1 = std::max(w1, std::max(std::abs(d.f_xi(i, j)),
                                 std::abs(d.f_eta(i, j))));
      const double d2 = std::abs(d.f_xixi(i, j)) +
                        std::abs(d.f_xieta(i, j)) +
                        std::abs(d.f_etaeta(i, j));
      w2 = std::max(w2, std::pow(dl, 1 - alpha) * d2);
    }
  }
  double semi2 = 0;
  auto pair_term_w = [&](int i, int j, int i2, int j2) {
    if (!in_bulk(i2, j2)) return;
    const double dist = std::hypot(dom.xi(i, j) - dom.xi(i2, j2),
                                   dom.eta(i, j) - dom.eta(i2, j2));
    if (dist < 1e-14) return;
    const double dmin = std::max(std::min(delta_of(i, j), delta_of(i2, j2)), 0.0);
    const double num = std::abs(d.f_xixi(i, j) - d.f_xixi(i2, j2)) +
                       std::abs(d.f_xieta(i, j) - d.f_xieta(i2, j2)) +
                       std::abs(d.f_etaeta(i, j) - d.f_etaeta(i2, j2));
    semi2 = std::max(semi2, dmin * num / std::pow(dist, alpha));
  };
  for (int i = 0; i < ni; ++i) {
    for (int j = 0; j < nj; ++j) {
      if (!in_bulk(i, j)) continue;
      if (i + 1 < ni) pair_term_w(i, j, i + 1, j);
      if (j + 1 < nj) pair_term_w(i, j, i, j + 1);
      for (int i2 = 0; i2 < ni; i2 += stride) {
        for (int j2 = 0; j2 < nj; j2 += stride) {
          if (i2 == i && j2 == j) continue;
          pair_term_w(i, j, i2, j2);
        }
      }
    }
  }
  out.weighted = w0 + w1 + w2 + semi2;
  return out;
}

}  // namespace reflect
