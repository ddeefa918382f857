#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "reflect/geometry.hpp"

using namespace reflect;
using std::numbers::pi;

namespace {
const GasSetup<double> gas2 = incident_shock(2.0, 1.0, 2.0);

StateTwo<double> state_at(double sigma) {
  return state2_solve(gas2, pi / 2 - sigma);
}

double default_eps(const StateTwo<double>& st) {
  return 0.1 * (st.nr.c2bar - std::abs(st.nr.xibar));
}

ReflectionDomain domain_at(double sigma, int n) {
  const auto st = state_at(sigma);
  return build_domain(st, FreeBoundaryCurve::straight_reference(st, n), n, n,
                      default_eps(st));
}
}  // namespace

TEST_CASE("sonic frame roundtrip and landmarks") {
  const auto st = state_at(0.01);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.3, 1.3);
  for (int k = 0; k < 30; ++k) {
    const Vec2<double> pt{u(rng), u(rng)};
    if (pt.norm() < 1e-3) continue;
    const Vec2<double> back = from_sonic_frame(st, to_sonic_frame(st, pt));
    CHECK((back - pt).norm() < 1e-13);
  }
  CHECK_THROWS_AS(to_sonic_frame(st, Vec2<double>{0, 0}), OriginSingularity);
  const Vec2<double> p1xy = to_sonic_frame(st, st.P1);
  CHECK(std::abs(p1xy[0]) < 1e-12);
  CHECK(p1xy[1] == Catch::Approx(st.y1).margin(1e-12));
  const Vec2<double> p4xy = to_sonic_frame(st, st.P4);
  CHECK(std::abs(p4xy[0]) < 1e-12);
  CHECK(std::abs(p4xy[1]) < 1e-12);
}

TEST_CASE("straight shock in the sonic frame") {
  const auto st = state_at(0.01);
  CHECK(fhat0(st, 0.0) == Catch::Approx(st.y1).margin(1e-12));
  double prev = fhat0(st, 0.0);
  for (int k = 1; k <= 50; ++k) {
    const double cur = fhat0(st, 0.2 * k / 50.0);
    CHECK(cur > prev);
    prev = cur;
  }
  CHECK_THROWS_AS(fhat0(st, 0.7), ArcsineDomain);
  // Head-on limit: the line is l(eta) = xibar.
  const auto st0 = state_at(0.0);
  for (double eta : {0.0, 0.4, 1.0}) {
    CHECK(l_line(st0, eta) == Catch::Approx(st0.nr.xibar).margin(1e-12));
  }
}

TEST_CASE("free boundary curve reproduces straight data exactly") {
  const auto st = state_at(0.02);
  const auto fb = FreeBoundaryCurve::straight_reference(st, 48);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-st.v2, st.eta1);
  for (int k = 0; k < 40; ++k) {
    const double e = u(rng);
    CHECK(fb(e) == Catch::Approx(l_line(st, e)).margin(1e-13));
    CHECK(fb.derivative(e) ==
          Catch::Approx(std::cos(st.theta_s) / std::sin(st.theta_s))
              .margin(1e-12));
  }
}

TEST_CASE("monotone interpolation stays within data bounds") {
  VectorXd eta = VectorXd::LinSpaced(9, 0.0, 1.0);
  VectorXd val(9);
  for (int k = 0; k < 9; ++k) val[k] = std::tanh(3 * (eta[k] - 0.5));
  FreeBoundaryCurve c(eta, val, 3.0 / std::cosh(1.5) / std::cosh(1.5));
  double prev = c(0.0);
  for (int k = 1; k <= 200; ++k) {
    const double cur = c(k / 200.0);
    CHECK(cur >= prev - 1e-14);
    prev = cur;
  }
  CHECK_THROWS_AS(FreeBoundaryCurve(eta.reverse(), val, 0.0), NonMonotone);
  VectorXd bad_val = val;
  bad_val[4] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(FreeBoundaryCurve(eta, bad_val, 0.0), NonMonotone);
}

TEST_CASE("grid corners and orientation") {
  for (double sigma : {0.0, 0.01, 0.05}) {
    const auto st = state_at(sigma);
    const auto dom = domain_at(sigma, 16);
    CHECK(std::abs(dom.xi(0, 0) - (-st.u2)) < 1e-13);
    CHECK(std::abs(dom.eta(0, 0) - (-st.v2)) < 1e-13);
    CHECK(std::abs(dom.xi(dom.na, 0) - dom.fb(-st.v2)) < 1e-13);
    CHECK(std::abs(dom.xi(0, dom.nb) - st.P4[0]) < 1e-13);
    CHECK(std::abs(dom.eta(0, dom.nb) - st.P4[1]) < 1e-13);
    CHECK(std::abs(dom.xi(dom.na, dom.nb) - st.xi1) < 1e-12);
    CHECK(std::abs(dom.eta(dom.na, dom.nb) - st.eta1) < 1e-12);
    // Sonic-side nodes sit on the circle; shock-side nodes on the curve.
    for (int i = 0; i <= dom.na; ++i) {
      const double r = std::hypot(dom.xi(i, dom.nb), dom.eta(i, dom.nb));
      CHECK(std::abs(r - st.c2) < 1e-12);
    }
    for (int j = 0; j <= dom.nb; ++j) {
      CHECK(std::abs(dom.xi(dom.na, j) - dom.fb(dom.eta(dom.na, j))) < 1e-12);
    }
    const double jref = dom.jac(dom.na / 2, dom.nb / 2);
    for (int i = 0; i <= dom.na; ++i) {
      for (int j = 0; j <= dom.nb; ++j) {
        CHECK(dom.jac(i, j) * jref > 0);
      }
    }
  }
}

TEST_CASE("head-on grid area matches the closed form") {
  const auto st = state_at(0.0);
  const double c = st.nr.c2bar, xb = st.nr.xibar;
  const double exact =
      -(xb / 2 * std::sqrt(c * c - xb * xb) + c * c / 2 * std::asin(xb / c));
  const auto d64 = domain_at(0.0, 64);
  const auto d128 = domain_at(0.0, 128);
  const double e64 = std::abs(d64.area() - exact);
  const double e128 = std::abs(d128.area() - exact);
  CHECK(e64 < 2e-4);
  CHECK(e64 / e128 > 3.0);
  CHECK(e64 / e128 < 5.0);
}

TEST_CASE("oblique grid area matches indicator quadrature") {
  const double sigma = 0.01;
  const auto st = state_at(sigma);
  const auto dom = domain_at(sigma, 64);
  const int n = 1500;
  const double xi_lo = -st.c2, xi_hi = 0.05, eta_lo = -st.v2, eta_hi = st.c2;
  const Vec2<double> wdir{std::cos(st.theta_w), std::sin(st.theta_w)};
  double area = 0;
  const double cell =
      ((xi_hi - xi_lo) / n) * ((eta_hi - eta_lo) / n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double xi = xi_lo + (i + 0.5) * (xi_hi - xi_lo) / n;
      const double eta = eta_lo + (j + 0.5) * (eta_hi - eta_lo) / n;
      if (eta < -st.v2) continue;
      if (xi * xi + eta * eta >= st.c2 * st.c2) continue;
      if (xi <= dom.fb(eta)) continue;
      const double cross =
          wdir[0] * (eta + st.v2) - wdir[1] * (xi + st.u2);
      if (cross <= 0) continue;
      area += cell;
    }
  }
  CHECK(std::abs(dom.area() - area) < 5e-3);
}

TEST_CASE("fold detection") {
  const auto st = state_at(0.01);
  const auto fb = FreeBoundaryCurve::straight_reference(st, 32);
  CHECK_THROWS_AS(build_domain(st, fb, 4, 4, default_eps(st)), MeshFold);

  VectorXd eta = fb.samples_eta(), val = fb.samples_val();
  val[16] -= 1e-3;  // dips behind the straight shock
  FreeBoundaryCurve bad(eta, val, std::cos(st.theta_s) / std::sin(st.theta_s));
  CHECK_THROWS_AS(build_domain(st, bad, 32, 32, default_eps(st)), MeshFold);

  val[16] += 2e-3;  // bulges the other way: legal
  FreeBoundaryCurve good(eta, val, std::cos(st.theta_s) / std::sin(st.theta_s));
  CHECK_NOTHROW(build_domain(st, good, 32, 32, default_eps(st)));
}

TEST_CASE("free boundary extraction inverts the level-set formula") {
  const auto st = state_at(0.01);
  const auto dom = domain_at(0.01, 32);
  ArrayXXd psi = ArrayXXd::Zero(dom.na + 1, dom.nb + 1);
  auto fb0 = extract_free_boundary(dom, psi, st);
  for (int k = 0; k < fb0.samples_eta().size(); ++k) {
    CHECK(std::abs(fb0.samples_val()[k] -
                   l_line(st, fb0.samples_eta()[k])) < 1e-13);
  }
  // A uniform positive psi shifts the curve right by psi / (u1 - u2).
  const double bump = 3e-3;
  psi.setConstant(bump);
  auto fb1 = extract_free_boundary(dom, psi, st);
  for (int k = 0; k + 1 < fb1.samples_eta().size(); ++k) {
    CHECK(fb1.samples_val()[k] ==
          Catch::Approx(l_line(st, fb1.samples_eta()[k]) +
                        bump / (gas2.u1 - st.u2))
              .margin(1e-12));
  }
  // The endpoint stays pinned to the sonic circle.
  CHECK(fb1.samples_val()[dom.nb] ==
        Catch::Approx(l_line(st, st.eta1)).margin(1e-13));

  psi.setConstant(-1e-2);  // far below the straight shock
  CHECK_THROWS_AS(extract_free_boundary(dom, psi, st), NonMonotone);
  psi.setConstant(std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(extract_free_boundary(dom, psi, st), NonMonotone);
}

TEST_CASE("mapped derivatives are exact for affine fields") {
  for (double sigma : {0.0, 0.02}) {
    const auto dom = domain_at(sigma, 24);
    ArrayXXd f = 0.7 * dom.xi - 1.3 * dom.eta + 0.25;
    const auto d = compute_derivatives(dom, f);
    CHECK(d.f_xi.abs().maxCoeff() - 0.7 < 1e-11);
    CHECK((d.f_xi - 0.7).abs().maxCoeff() < 1e-10);
    CHECK((d.f_eta + 1.3).abs().maxCoeff() < 1e-10);
    CHECK(d.f_xixi.abs().maxCoeff() < 1e-9);
    CHECK(d.f_xieta.abs().maxCoeff() < 1e-9);
    CHECK(d.f_etaeta.abs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("mapped derivatives converge at second order") {
  auto run = [](int n) {
    const auto dom = domain_at(0.01, n);
    ArrayXXd f(dom.na + 1, dom.nb + 1);
    for (int i = 0; i <= dom.na; ++i) {
      for (int j = 0; j <= dom.nb; ++j) {
        f(i, j) = std::sin(dom.xi(i, j)) * std::cos(dom.eta(i, j));
      }
    }
    const auto d = compute_derivatives(dom, f);
    double err = 0;
    for (int i = 0; i <= dom.na; ++i) {
      for (int j = 0; j <= dom.nb; ++j) {
        const double xi = dom.xi(i, j), eta = dom.eta(i, j);
        err = std::max(err, std::abs(d.f_xi(i, j) -
                                     std::cos(xi) * std::cos(eta)));
        err = std::max(err, std::abs(d.f_eta(i, j) +
                                     std::sin(xi) * std::sin(eta)));
      }
    }
    return err;
  };
  const double e32 = run(32), e64 = run(64);
  CHECK(e64 < 2e-3);
  CHECK(e32 / e64 > 2.5);
  CHECK(e32 / e64 < 6.0);
}

TEST_CASE("discrete norms reproduce reference fields") {
  const auto dom = domain_at(0.01, 48);
  // Parabolic norm of x^2 is 1 + 2 + 2 = 5.
  ArrayXXd f = dom.x * dom.x;
  const auto n1 = discrete_norms(dom, f);
  CHECK(n1.parabolic == Catch::Approx(5.0).epsilon(0.03));
  // Weighted norm of the constant 1 is exactly 1.
  f.setConstant(1.0);
  const auto n2 = discrete_norms(dom, f);
  CHECK(n2.weighted == Catch::Approx(1.0).margin(1e-12));
  // Affine field: sup|f| + sup|Df|, second-derivative blocks vanish.
  f = dom.eta + dom.st.v2;
  const auto n3 = discrete_norms(dom, f);
  double sup_f = 0;  // the norm ranges over the bulk region only
  for (int i = 0; i <= dom.na; ++i) {
    for (int j = 0; j <= dom.nb; ++j) {
      if (dom.region(i, j) & ReflectionDomain::bulk_bit) {
        sup_f = std::max(sup_f, f(i, j));
      }
    }
  }
  CHECK(n3.weighted == Catch::Approx(sup_f + 1.0).margin(1e-9));
}

TEST_CASE("map inversion locates interior points") {
  for (double sigma : {0.0, 0.01}) {
    const auto dom = domain_at(sigma, 24);
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    for (int k = 0; k < 40; ++k) {
      const double a = u(rng), b = u(rng);
      const Vec2<double> pt = dom.map(a, b);
      const auto ab = dom.locate(pt);
      REQUIRE(ab.has_value());
      CHECK(std::abs((*ab)[0] - a) < 1e-8);
      CHECK(std::abs((*ab)[1] - b) < 1e-8);
    }
    // A point outside the patch is rejected.
    CHECK(!dom.locate(Vec2<double>{dom.st.c2 * 1.5, dom.st.c2}).has_value());
  }
}
