"""The effective one-dimensional problem -(1/T)(p phi')' = lam g(phi) on [0, H0].

phi(0) = 0 and phi' bounded at H0.  The linear problem has the explicit
solution psi(h) = int_0^H0 f(xi) T(xi) P(min(h, xi)) dxi, which is
discretised once as a dense Green matrix on the level grid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..explosion import BLOWN_UP, CONVERGED, ITERATION_LIMIT, default_blowup_cap
from ..flows import StreamFunction
from ..grid import Grid2D
from ..nonlinearity import Nonlinearity
from .cells import detect_cells
from .coefficients import LevelCoefficients, level_coefficients

log = logging.getLogger(__name__)


@dataclass
class FreidlinResult:
    h: np.ndarray
    phi: np.ndarray | None
    status: str
    lam: float
    iterations: int = 0
    lambda_star: float = np.nan
    bracket: tuple = (np.nan, np.nan)
    records: list = field(default_factory=list)
    sup_history: list = field(default_factory=list)


def green_matrix(coeffs: LevelCoefficients) -> np.ndarray:
    """Matrix G with psi(h_k) = sum_j G[k, j] f(h_j).

    Trapezoid rule on xi in [0, h_1, ..., h_M, H0]; the integrand vanishes
    at xi = 0 (P(0) = 0), and f T is held at its last sample on the
    (possibly degenerate) top interval [h_M, H0].
    """
    h, T, P, H0 = coeffs.h, coeffs.T, coeffs.P, coeffs.H0
    M = len(h)
    x = np.concatenate([[0.0], h])
    w = np.zeros(M + 1)
    dx = np.diff(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    w = w[1:]
    Pmin = P[np.minimum.outer(np.arange(M), np.arange(M))]
    G = Pmin * (w * T)[None, :]
    tail = H0 - h[-1]
    if tail > 0:
        # both tail nodes see P(min(h_k, xi)) = P(h_k)
        G[:, -1] += tail * T[-1] * P
    return G


def freidlin_linear_solve(coeffs: LevelCoefficients, f) -> FreidlinResult:
    f = np.broadcast_to(np.asarray(f, float), coeffs.h.shape)
    psi = green_matrix(coeffs) @ f
    return FreidlinResult(coeffs.h, psi, CONVERGED, 0.0)


def apply_operator(coeffs: LevelCoefficients, psi) -> np.ndarray:
    """-(1/T)(p psi')' by conservative differences at interior levels (NaN at the ends)."""
    h, p, T = coeffs.h, coeffs.p, coeffs.T
    psi = np.asarray(psi, float)
    hm = 0.5 * (h[1:] + h[:-1])
    pm = 0.5 * (p[1:] + p[:-1])
    flux = pm * np.diff(psi) / np.diff(h)
    out = np.full(len(h), np.nan)
    out[1:-1] = -(flux[1:] - flux[:-1]) / (hm[1:] - hm[:-1]) / T[1:-1]
    return out


def freidlin_minimal_solution(
    coeffs: LevelCoefficients,
    g: Nonlinearity,
    lam: float,
    tol_inc: float = 1e-10,
    max_iter: int = 10_000,
    blowup_cap: float | None = None,
    G: np.ndarray | None = None,
) -> FreidlinResult:
    G = green_matrix(coeffs) if G is None else G
    cap = default_blowup_cap(g) if blowup_cap is None else blowup_cap
    phi = np.zeros(len(coeffs.h))
    sups = []
    for it in range(1, max_iter + 1):
        new = G @ (lam * g.g(phi))
        inc = float(np.abs(new - phi).max())
        phi = new
        sups.append(float(phi.max()))
        if not np.isfinite(sups[-1]) or sups[-1] > cap:
            return FreidlinResult(coeffs.h, None, BLOWN_UP, lam, it, sup_history=sups)
        if inc < tol_inc:
            return FreidlinResult(coeffs.h, phi, CONVERGED, lam, it, sup_history=sups)
    return FreidlinResult(coeffs.h, None, ITERATION_LIMIT, lam, max_iter, sup_history=sups)


def freidlin_lambda_star(
    coeffs: LevelCoefficients,
    g: Nonlinearity,
    rtol: float = 1e-3,
    tol_inc: float = 1e-10,
    max_iter: int = 10_000,
) -> FreidlinResult:
    """Threshold of the effective problem by bisection.

    The lower end is the supersolution bound with theta = max of the
    solution for f = 1; the upper end doubles until the iteration blows up.
    """
    G = green_matrix(coeffs)
    theta_bar = float((G @ np.ones(len(coeffs.h))).max())
    from ..explosion import lower_bound_from_theta

    records = []

    def probe(lam):
        r = freidlin_minimal_solution(coeffs, g, lam, tol_inc, max_iter, G=G)
        records.append((lam, r.status, r.sup_history[-1] if r.sup_history else 0.0, r.iterations))
        return r

    lo = lower_bound_from_theta(g, theta_bar)
    best = probe(lo)
    if best.status != CONVERGED:
        raise RuntimeError("effective problem not solvable at its supersolution bound")
    hi = 2 * lo
    while (r := probe(hi)).status == CONVERGED:
        lo, best, hi = hi, r, 2 * hi
    while (hi - lo) / lo > rtol:
        mid = 0.5 * (lo + hi)
        r = probe(mid)
        if r.status == CONVERGED:
            lo, best = mid, r
        else:
            hi = mid
    return FreidlinResult(coeffs.h, best.phi, CONVERGED, best.lam, best.iterations, 0.5 * (lo + hi), (lo, hi), records)


@dataclass
class MultiCellResult:
    per_cell: list  # lambda-bar* per cell, seed order
    minimum: float
    argmin: int
    cells: list
    coefficients: list


def multi_cell_threshold(
    stream: StreamFunction,
    grid: Grid2D,
    seeds,
    g: Nonlinearity,
    eps_sep: float | None = None,
    n_levels: int = 96,
    fine_resolution: int = 513,
    rtol: float = 1e-3,
) -> MultiCellResult:
    cells = detect_cells(stream, grid, seeds, eps_sep)
    coeffs = [level_coefficients(stream, c, grid, n_levels, fine_resolution) for c in cells]
    lams = [freidlin_lambda_star(c, g, rtol).lambda_star for c in coeffs]
    k = int(np.argmin(lams))
    return MultiCellResult(lams, lams[k], k, cells, coeffs)
