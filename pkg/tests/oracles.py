"""Independent reference computations used by the tests.

None of these touch the package's solvers; they are plain series,
ODE shooting and dense linear algebra.  Values they produce are frozen in
FROZEN so a regression in an oracle itself is caught too.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate, optimize, special

FROZEN = {
    "torsion_center": 0.07367135527,  # max of -Lap u = 1 on the unit square
    "disk_bratu_lambda1_max": float(np.log(8 * (3 - 2 * np.sqrt(2)))),  # 0.31669...
    "disk_lambda_star": 2.0,
    "interval_lambda_star": 0.8784576797812,  # -phi'' = lam e^phi, phi(0)=0, phi'(1)=0
    "disk_mu1": float(special.jn_zeros(0, 1)[0] ** 2),  # 5.7832
    "square_mu1": 2 * np.pi**2,
}


def torsion_center(n_terms: int = 401) -> float:
    """Double sine series of the torsion function at (1/2, 1/2)."""
    k = np.arange(1, n_terms + 1, 2, dtype=float)
    m, n = np.meshgrid(k, k, indexing="ij")
    s = np.sin(m * np.pi / 2) * np.sin(n * np.pi / 2)
    return float(np.sum(16.0 / (np.pi**4 * m * n * (m * m + n * n)) * s))


def _radial_profile(a: float, lam: float, r_max: float = 1.0):
    """phi(r) from phi(0)=a, phi'(0)=0 for -(1/r)(r phi')' = lam e^phi."""

    def rhs(r, y):
        phi, dphi = y
        if r == 0.0:
            return [0.0, -lam * np.exp(phi) / 2]
        return [dphi, -lam * np.exp(phi) - dphi / r]

    # start slightly off the axis with the series phi ~ a - lam e^a r^2 / 4
    r0 = 1e-8
    y0 = [a - lam * np.exp(a) * r0**2 / 4, -lam * np.exp(a) * r0 / 2]
    return integrate.solve_ivp(rhs, (r0, r_max), y0, rtol=1e-11, atol=1e-13, dense_output=True)


def disk_bratu_max(lam: float) -> float:
    """Max of the minimal radial solution on the unit disk, by shooting on phi(0)."""
    f = lambda a: _radial_profile(a, lam).y[0, -1]
    # the minimal branch has the smallest root in a
    grid = np.linspace(1e-6, 1.5, 61)
    vals = [f(a) for a in grid]
    for a0, a1, v0, v1 in zip(grid, grid[1:], vals, vals[1:]):
        if v0 * v1 <= 0:
            return float(optimize.brentq(f, a0, a1, xtol=1e-13))
    raise RuntimeError("no radial solution found")


def disk_lambda_star() -> float:
    """Fold of the radial branch: for w'' + w'/r = -e^w, w(0)=0, phi = a + w(sqrt(lam e^a) r)
    and lam(a) = rho(a)^2 e^-a where w(rho) = -a; maximise over a."""

    def rhs(r, y):
        return [y[1], -np.exp(y[0]) - (y[1] / r if r > 0 else 0.0)]

    def lam_of(a):
        ev = lambda r, y: y[0] + a
        ev.terminal = True
        sol = integrate.solve_ivp(rhs, (1e-9, 50.0), [0.0, 0.0], events=ev, rtol=1e-11, atol=1e-13)
        rho = sol.t_events[0][0]
        return rho**2 * np.exp(-a)

    res = optimize.minimize_scalar(lambda a: -lam_of(a), bounds=(0.3, 3.0), method="bounded", options={"xatol": 1e-10})
    return float(-res.fun)


def interval_lambda_star() -> float:
    """-phi'' = lam e^phi on [0, 1], phi(0) = 0, phi'(1) = 0, by shooting from the top.

    With phi(1) = a and phi'(1) = 0 the profile is a + w(sqrt(lam e^a)(1 - x)) where
    w'' = -e^w, w(0) = w'(0) = 0; lam(a) = s(a)^2 e^-a with w(s) = -a.
    """

    def lam_of(a):
        ev = lambda t, y: y[0] + a
        ev.terminal = True
        sol = integrate.solve_ivp(lambda t, y: [y[1], -np.exp(y[0])], (0, 50.0), [0.0, 0.0], events=ev, rtol=1e-12, atol=1e-14)
        s = sol.t_events[0][0]
        return s**2 * np.exp(-a)

    res = optimize.minimize_scalar(lambda a: -lam_of(a), bounds=(0.3, 3.0), method="bounded", options={"xatol": 1e-10})
    return float(-res.fun)


def dense_principal_eigenvalue(matrix) -> float:
    """Eigenvalue with smallest real part of a small dense matrix."""
    ev = np.linalg.eigvals(np.asarray(matrix.todense() if hasattr(matrix, "todense") else matrix))
    return float(ev[np.argmin(ev.real)].real)


def contour_p(stream, box, level: float, n: int = 801) -> float:
    """Contour integral of |grad Psi| along {Psi = level} by marching squares."""
    from skimage import measure

    (x0, x1), (y0, y1) = box
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    total = 0.0
    for c in measure.find_contours(stream.eval(X, Y), level):
        px = x0 + c[:, 0] * (xs[1] - xs[0])
        py = y0 + c[:, 1] * (ys[1] - ys[0])
        gx, gy = stream.grad(px, py)
        g = np.hypot(gx, gy)
        seg = np.hypot(np.diff(px), np.diff(py))
        total += float(np.sum(0.5 * (g[1:] + g[:-1]) * seg))
    return total


def uniform_drift_mu1(h: float, A: float) -> float:
    """Principal eigenvalue of the upwind operator for u = (1, 0) on the unit square.

    The operator separates; the x factor is a tridiagonal Toeplitz matrix
    with diagonal 2/h^2 + A/h and off-diagonals -(1/h^2 + A/h), -1/h^2.
    """
    a = 1 / h**2 + A / h
    b = 1 / h**2
    c = np.cos(np.pi * h)
    return float((2 / h**2 + A / h) - 2 * np.sqrt(a * b) * c + 2 / h**2 * (1 - c))
