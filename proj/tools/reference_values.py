#!/usr/bin/env python3
"""High-precision reference values for the shock-reflection solver tests.

Computes incident-shock, normal-reflection, and oblique-reflection (state 2)
quantities with mpmath at 60 significant digits, verifies the algebraic
identities the C++ tests rely on, and prints constants ready to freeze into
test sources. Exits nonzero if any self-check fails.
"""

import sys
from mpmath import mp, mpf, sqrt, sin, cos, tan, asin, atan2, pi, findroot, diff

mp.dps = 60

FAILURES = []


def check(name, residual, tol=mpf("1e-45")):
    ok = abs(residual) <= tol
    status = "ok " if ok else "FAIL"
    print(f"  [{status}] {name}: residual = {mp.nstr(abs(residual), 8)}")
    if not ok:
        FAILURES.append(name)


def show(name, value, digits=25):
    print(f"  {name} = {mp.nstr(value, digits, strip_zeros=False)}")


# ----------------------------------------------------------------------------
# Incident shock: upstream density rho0 at rest, downstream density rho1,
# downstream horizontal speed u1, shock position xi0 (self-similar frame).
# ----------------------------------------------------------------------------

def incident_shock(gamma, rho0, rho1):
    u1 = (rho1 - rho0) * sqrt(2 * (rho1 ** (gamma - 1) - rho0 ** (gamma - 1))
                              / (rho1 * rho1 - rho0 * rho0))
    xi0 = rho1 * u1 / (rho1 - rho0)
    return u1, xi0


# ----------------------------------------------------------------------------
# Normal reflection: vertical reflected shock at xi_bar, downstream density
# rho2_bar solving  s^{g-1} - rho1^{g-1} - u1^2/2 - rho1 u1^2/(s-rho1) = 0
# on (rho1, inf); the residual is strictly increasing there.
# ----------------------------------------------------------------------------

def normal_reflection(gamma, rho0, rho1):
    u1, xi0 = incident_shock(gamma, rho0, rho1)

    def F(s):
        return (s ** (gamma - 1) - rho1 ** (gamma - 1)
                - u1 * u1 / 2 - rho1 * u1 * u1 / (s - rho1))

    lo = rho1 + mpf("1e-30")
    hi = rho1 + 1
    while F(hi) < 0:
        hi = rho1 + 2 * (hi - rho1)
    rho2 = findroot(F, (lo + hi) / 2)
    xi_bar = -rho1 * u1 / (rho2 - rho1)
    c2_bar = sqrt((gamma - 1) * rho2 ** (gamma - 1))
    return u1, xi0, rho2, xi_bar, c2_bar


# ----------------------------------------------------------------------------
# Oblique reflection by a wedge of half-angle theta_w: state (2) behind the
# straight reflected shock, from the three-equation system in
# (rho2, theta_s, xi_tilde).
# ----------------------------------------------------------------------------

def vn_residuals(gamma, rho0, rho1, u1, xi0, theta_w, v):
    rho2, th_s, xt = v
    r1 = (xt - xi0) * cos(theta_w) + xi0 * sin(theta_w) / tan(th_s)
    r2 = (rho2 ** (gamma - 1)
          + u1 * u1 * cos(th_s) ** 2 / (2 * cos(theta_w - th_s) ** 2)
          + u1 * sin(theta_w) * sin(th_s) * xt / cos(theta_w - th_s)
          - u1 * xi0 - rho0 ** (gamma - 1))
    r3 = ((u1 * cos(th_s) * tan(th_s - theta_w) - xt * sin(th_s)) * rho2
          - rho1 * (u1 - xt) * sin(th_s))
    return [r1, r2, r3]


def vn_jacobian(gamma, rho0, rho1, u1, xi0, theta_w, v):
    rho2, th_s, xt = v
    cw, sw = cos(theta_w), sin(theta_w)
    cs, ss = cos(th_s), sin(th_s)
    cws = cos(theta_w - th_s)
    J = mp.matrix(3, 3)
    J[0, 0] = 0
    J[0, 1] = -xi0 * sw / (ss * ss)
    J[0, 2] = cw
    J[1, 0] = (gamma - 1) * rho2 ** (gamma - 2)
    J[1, 1] = (-u1 * u1 * cs * sw / cws ** 3
               + u1 * xt * sw * cw / cws ** 2)
    J[1, 2] = u1 * sw * ss / cws
    J[2, 0] = u1 * cs * tan(th_s - theta_w) - xt * ss
    J[2, 1] = (rho2 * (-u1 * ss * tan(th_s - theta_w) + u1 * cs / cws ** 2
                       - xt * cs)
               - rho1 * (u1 - xt) * cs)
    J[2, 2] = (rho1 - rho2) * ss
    return J


def solve_state2(gamma, rho0, rho1, sigma):
    u1, xi0, rho2n, xi_bar, c2_bar = normal_reflection(gamma, rho0, rho1)
    theta_w = pi / 2 - sigma
    seed = [rho2n, pi / 2 - mpf("1.5") * sigma, xi_bar]
    sol = findroot(
        lambda a, b, c: vn_residuals(gamma, rho0, rho1, u1, xi0, theta_w,
                                     [a, b, c]),
        seed)
    rho2, th_s, xt = sol[0], sol[1], sol[2]
    cws = cos(theta_w - th_s)
    u2 = u1 * cos(theta_w) * cos(th_s) / cws
    v2 = u1 * sin(theta_w) * cos(th_s) / cws          # = u2 * tan(theta_w)
    c2 = sqrt((gamma - 1) * rho2 ** (gamma - 1))
    xi_hat = xt - u2 + v2 / tan(th_s)
    return dict(gamma=gamma, rho0=rho0, rho1=rho1, sigma=sigma,
                u1=u1, xi0=xi0, rho2n=rho2n, xi_bar=xi_bar, c2_bar=c2_bar,
                theta_w=theta_w, rho2=rho2, theta_s=th_s, xi_tilde=xt,
                u2=u2, v2=v2, c2=c2, xi_hat=xi_hat)


# ----------------------------------------------------------------------------
# Geometry derived from state (2): sonic/shock intersection P1, reflection
# point height, reference shock-angle function at the sonic circle.
# ----------------------------------------------------------------------------

def geometry(st):
    th_s, xi_hat, c2 = st["theta_s"], st["xi_hat"], st["c2"]
    cot = cos(th_s) / sin(th_s)

    def g(eta):
        l = eta * cot + xi_hat
        return l * l + eta * eta - c2 * c2

    eta1 = findroot(g, sqrt(c2 * c2 - xi_hat * xi_hat))
    xi1 = eta1 * cot + xi_hat
    y_p1 = atan2(eta1, xi1) - st["theta_w"]
    f0_at_sonic = asin(abs(xi_hat) * sin(th_s) / c2) - st["theta_w"] + th_s
    eta_p0 = (abs(xi_hat) * sin(th_s) * sin(st["theta_w"])
              / sin(st["theta_w"] - th_s))
    return eta1, xi1, y_p1, f0_at_sonic, eta_p0


# ----------------------------------------------------------------------------
# Mass-flux jump across the reflected shock as a function of the downstream
# gradient/value, after substituting the shock position from the level set.
# Psi = 0 is the free-boundary condition; Psi(0,0,0,...) = 0 must hold
# exactly at state (2).
# ----------------------------------------------------------------------------

def make_psi(st):
    g = st["gamma"]
    u1, rho1, rho2 = st["u1"], st["rho1"], st["rho2"]
    u2, v2, xi_hat = st["u2"], st["v2"], st["xi_hat"]

    def Psi(p1, p2, z, eta):
        xi = (z + v2 * eta) / (u1 - u2) + xi_hat
        rho_t = (rho2 ** (g - 1) + xi * p1 + eta * p2
                 - (p1 * p1 + p2 * p2) / 2 - z) ** (1 / (g - 1))
        n1 = u1 - u2 - p1
        n2 = -v2 - p2
        nn = sqrt(n1 * n1 + n2 * n2)
        flux1 = rho_t * (p1 - xi) - rho1 * (u1 - u2 - xi)
        flux2 = rho_t * (p2 - eta) - rho1 * (-v2 - eta)
        return (flux1 * n1 + flux2 * n2) / nn

    return Psi


def main():
    print("=" * 78)
    print("Incident shock and normal reflection")
    print("=" * 78)

    for gamma, rho0, rho1 in [(mpf(2), mpf(1), mpf(2)),
                              (mpf("1.4"), mpf(1), mpf(2))]:
        u1, xi0, rho2n, xi_bar, c2_bar = normal_reflection(gamma, rho0, rho1)
        print(f"\ngamma={float(gamma)}, rho0={float(rho0)}, "
              f"rho1={float(rho1)}:")
        show("u1     ", u1)
        show("xi0    ", xi0)
        show("rho2_n ", rho2n)
        show("xi_bar ", xi_bar)
        show("c2_bar ", c2_bar)

        beta = ((rho2n ** (gamma - 1) - rho1 ** (gamma - 1))
                / (rho2n - rho1))
        mv_rho = rho1 + (u1 / (4 * beta)) * (u1 + sqrt(u1 * u1
                                                       + 16 * beta * rho1))
        mv_xi = -4 * beta * rho1 / (u1 + sqrt(u1 * u1 + 16 * beta * rho1))
        check("mean-value closed form for rho2_n", mv_rho - rho2n)
        check("mean-value closed form for xi_bar", mv_xi - xi_bar)
        check("subsonic: |xi_bar| < c2_bar",
              mpf(0) if abs(xi_bar) < c2_bar else mpf(1))
        if gamma == 2:
            check("rho2_n == 10/3", rho2n - mpf(10) / 3)
            check("xi_bar == -sqrt(3/2)", xi_bar + sqrt(mpf(3) / 2))
            check("c2_bar == sqrt(10/3)", c2_bar - sqrt(mpf(10) / 3))
            check("u1 == sqrt(2/3)", u1 - sqrt(mpf(2) / 3))
            check("u1*xi_bar == -1", u1 * xi_bar + 1)
            det_closed = -(mpf(7) / 3) * xi0
            show("det_closed(-(7/3)xi0)", det_closed)

    print()
    print("=" * 78)
    print("Oblique reflection, gamma=2, rho0=1, rho1=2 (sigma = pi/2 - "
          "theta_w)")
    print("=" * 78)

    gamma, rho0, rho1 = mpf(2), mpf(1), mpf(2)
    sigmas = [mpf("0.05"), mpf("0.02"), mpf("0.01"), mpf("0.005")]
    states = []
    for sigma in sigmas:
        st = solve_state2(gamma, rho0, rho1, sigma)
        states.append(st)
        eta1, xi1, y_p1, f0s, eta_p0 = geometry(st)
        st.update(eta1=eta1, xi1=xi1, y_p1=y_p1, eta_p0=eta_p0)

        print(f"\nsigma = {float(sigma)}:")
        for k in ["rho2", "theta_s", "xi_tilde", "u2", "v2", "c2",
                  "xi_hat", "eta1", "xi1", "y_p1", "eta_p0"]:
            show(k.ljust(8), st[k])

        res = vn_residuals(gamma, rho0, rho1, st["u1"], st["xi0"],
                           st["theta_w"], [st["rho2"], st["theta_s"],
                                           st["xi_tilde"]])
        for i, r in enumerate(res):
            check(f"system residual {i + 1}", r)

        # Alternate expressions and ordering facts.
        check("xi_tilde = xi0(1 - tan(theta_w)/tan(theta_s))",
              st["xi_tilde"] - st["xi0"] * (1 - tan(st["theta_w"])
                                            / tan(st["theta_s"])))
        check("(u1-u2) = v2 tan(theta_s)",
              (st["u1"] - st["u2"]) - st["v2"] * tan(st["theta_s"]))
        q2sq = st["u2"] ** 2 + st["v2"] ** 2
        check("mass balance across straight shock",
              st["rho2"] * st["xi_hat"]
              - rho1 * (st["xi_hat"] - ((st["u1"] - st["u2"]) ** 2
                                        + st["v2"] ** 2)
                        / (st["u1"] - st["u2"])))
        ordering_ok = (-st["c2"] < st["xi_tilde"] < st["xi_hat"]
                       < st["xi1"] < 0)
        check("ordering -c2 < xi_tilde < xi_hat < xi1 < 0",
              mpf(0) if ordering_ok else mpf(1))
        check("sonic gap c2-|xi_tilde| >= (c2_bar-|xi_bar|)/2",
              mpf(0) if (st["c2"] - abs(st["xi_tilde"])
                         >= (st["c2_bar"] - abs(st["xi_bar"])) / 2)
              else mpf(1))
        check("bounds pi/4 < theta_s < theta_w < pi/2",
              mpf(0) if (pi / 4 < st["theta_s"] < st["theta_w"] < pi / 2)
              else mpf(1))
        check("compression rho2 > rho1",
              mpf(0) if st["rho2"] > rho1 else mpf(1))
        check("shock-angle reference at sonic circle equals y_p1",
              f0s - y_p1)
        check("reflection-point height formula",
              eta_p0 - (st["xi0"] * tan(st["theta_w"]) - st["v2"]))
        # Straight shock line passes through the reflection point.
        check("shock line through reflection point",
              (st["xi0"] - st["u2"])
              - (eta_p0 / tan(st["theta_s"]) + st["xi_hat"]))

        # Analytic Jacobian vs numerical differentiation.
        v0 = [st["rho2"], st["theta_s"], st["xi_tilde"]]
        Ja = vn_jacobian(gamma, rho0, rho1, st["u1"], st["xi0"],
                         st["theta_w"], v0)
        for i in range(3):
            for j in range(3):
                def fij(t, i=i, j=j):
                    w = list(v0)
                    w[j] = t
                    return vn_residuals(gamma, rho0, rho1, st["u1"],
                                        st["xi0"], st["theta_w"], w)[i]
                Jn = diff(fij, v0[j])
                check(f"Jacobian[{i}][{j}] analytic vs numeric",
                      Ja[i, j] - Jn, tol=mpf("1e-40"))

        # Mass-flux jump functional: exact zero at state (2), and its
        # gradient at the origin in the normal-reflection limit.
        Psi = make_psi(st)
        check("Psi(0,0,0; eta) = 0 at eta=0.3",
              Psi(mpf(0), mpf(0), mpf(0), mpf("0.3")))
        check("Psi(0,0,0; eta) = 0 at eta=-0.2",
              Psi(mpf(0), mpf(0), mpf(0), mpf("-0.2")))

    # Gradient of Psi at the origin for the normal-reflection limit state:
    # build a state dict with u2=v2=0 and normal-reflection values.
    print("\nGradient of the jump functional at the symmetric state:")
    u1, xi0, rho2n, xi_bar, c2_bar = normal_reflection(gamma, rho0, rho1)
    st_nr = dict(gamma=gamma, rho0=rho0, rho1=rho1, u1=u1, xi0=xi0,
                 rho2=rho2n, u2=mpf(0), v2=mpf(0), xi_hat=xi_bar)
    Psi0 = make_psi(st_nr)
    eta = mpf("0.4")
    dp1 = diff(lambda t: Psi0(t, mpf(0), mpf(0), eta), mpf(0))
    dp2 = diff(lambda t: Psi0(mpf(0), t, mpf(0), eta), mpf(0))
    dz = diff(lambda t: Psi0(mpf(0), mpf(0), t, eta), mpf(0))
    rho2p = rho2n / (c2_bar * c2_bar)      # d(rho)/d(Bernoulli head)
    drho = rho2n - rho1
    b1 = rho2p * (c2_bar * c2_bar - xi_bar * xi_bar)
    b2 = (drho / u1 - rho2p * xi_bar) * eta
    b3 = rho2p * xi_bar - drho / u1
    show("dPsi/dp1", dp1)
    show("dPsi/dp2", dp2)
    show("dPsi/dz ", dz)
    check("dPsi/dp1 = rho2'(c2^2 - xi_hat^2)", dp1 - b1, tol=mpf("1e-40"))
    check("dPsi/dp2 = (drho/u1 - rho2' xi_hat) eta", dp2 - b2,
          tol=mpf("1e-40"))
    check("dPsi/dz = rho2' xi_hat - drho/u1", dz - b3, tol=mpf("1e-40"))

    print()
    print("=" * 78)
    print("sigma-scaling of state (2) (gamma=2 example)")
    print("=" * 78)
    devs = []
    for st in states:
        dev = (abs(st["rho2"] - st["rho2n"]) + abs(pi / 2 - st["theta_s"])
               + abs(st["xi_tilde"] - st["xi_bar"]))
        devs.append((st["sigma"], dev))
        print(f"  sigma={float(st['sigma']):8.4f}   "
              f"deviation={mp.nstr(dev, 12)}   "
              f"deviation/sigma={mp.nstr(dev / st['sigma'], 12)}")
    for (s_hi, d_hi), (s_lo, d_lo) in zip(devs[1:], devs[2:]):
        ratio = d_hi / d_lo
        print(f"  ratio dev({float(s_hi)})/dev({float(s_lo)}) = "
              f"{mp.nstr(ratio, 12)}")
        check(f"halving ratio in [1.5,2.5] at sigma={float(s_lo)}",
              mpf(0) if mpf("1.5") <= ratio <= mpf("2.5") else mpf(1))

    print()
    print("=" * 78)
    print("Cutoff band arithmetic (gamma=2)")
    print("=" * 78)
    g = mpf(2)
    s0 = 4 / (3 * (g + 1))
    s1 = 2 / (g + 1)
    sat = 5 / (3 * (g + 1))
    show("s0 (linear band edge)   ", s0)
    show("s1 (saturation onset)   ", s1)
    show("saturation value        ", sat)
    h = s1 - s0

    def zeta1(s):
        if abs(s) <= s0:
            return s
        t = (min(abs(s), s1) - s0) / h
        val = s0 + h * (t - t ** 3 + t ** 4 / 2)
        if abs(s) >= s1:
            val = sat
        return val if s >= 0 else -val

    check("zeta1(0.4) = 0.4 (inside linear band)",
          zeta1(mpf("0.4")) - mpf("0.4"))
    check("zeta1(0.7) = 5/9 (saturated)", zeta1(mpf("0.7")) - mpf(5) / 9)
    check("zeta1 at s1 equals saturation",
          (s0 + h * (1 - 1 + mpf("0.5"))) - sat)

    print()
    if FAILURES:
        print(f"{len(FAILURES)} CHECK(S) FAILED:")
        for f in FAILURES:
            print("  -", f)
        return 1
    print("All checks passed.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
