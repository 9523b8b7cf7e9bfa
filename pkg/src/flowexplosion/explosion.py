"""Minimal solutions, the explosion threshold and its bounds.

All solves start the monotone iteration from zero: the limit is the
minimal solution only from that start, so no warm starts across probes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .eigen import EigenResult, principal_eigenvalue
from .flows import FlowField, zero_flow
from .grid import Grid2D
from .nonlinearity import Nonlinearity, uniform_bound_constant
from .operators import AdvectionDiffusionOperator, assemble, assemble_adjoint, exit_time, theta

log = logging.getLogger(__name__)

CONVERGED = "converged"
BLOWN_UP = "blown_up"
ITERATION_LIMIT = "iteration_limit"


class ThresholdError(RuntimeError):
    def __init__(self, msg, records=None):
        super().__init__(msg)
        self.records = records or []


def default_blowup_cap(g: Nonlinearity) -> float:
    if np.isfinite(g.h_infinity):
        return 10.0 * uniform_bound_constant(g, 0.01)
    return 1e6


@dataclass
class MinimalSolutionResult:
    status: str
    lam: float
    phi: np.ndarray | None
    iterations: int
    sup_history: list
    final_increment: float
    residual: float = np.nan
    monotone_violation: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def sup(self) -> float:
        return self.sup_history[-1] if self.sup_history else 0.0


def minimal_solution(
    grid: Grid2D,
    flow: FlowField | None,
    A: float,
    lam: float,
    g: Nonlinearity,
    tol_inc: float = 1e-10,
    max_iter: int = 10_000,
    blowup_cap: float | None = None,
    op: AdvectionDiffusionOperator | None = None,
) -> MinimalSolutionResult:
    """Monotone iteration phi_{n+1} = L^{-1}[lam g(phi_n)] from phi_0 = 0.

    ``monotone_violation`` records the largest pointwise decrease seen
    between consecutive iterates (zero in exact arithmetic).
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    op = assemble(grid, flow, A) if op is None else op
    cap = default_blowup_cap(g) if blowup_cap is None else blowup_cap
    lu = op.lu
    phi = np.zeros(op.n)
    sups = []
    violation = 0.0
    inc = np.inf
    for it in range(1, max_iter + 1):
        new = lu.solve(lam * g.g(phi))
        # clip round-off below zero: the exact iterate is non-negative
        new = np.maximum(new, 0.0)
        if not np.all(np.isfinite(new)):
            return MinimalSolutionResult(BLOWN_UP, lam, None, it, sups, np.inf, monotone_violation=violation)
        diff = new - phi
        inc = float(np.abs(diff).max()) if diff.size else 0.0
        violation = max(violation, float(-diff.min()) if diff.size else 0.0)
        phi = new
        sups.append(float(phi.max()) if phi.size else 0.0)
        if sups[-1] > cap:
            return MinimalSolutionResult(BLOWN_UP, lam, None, it, sups, inc, monotone_violation=violation)
        if inc < tol_inc:
            res = float(np.abs(op.matrix @ phi - lam * g.g(phi)).max())
            return MinimalSolutionResult(CONVERGED, lam, grid.to_field(phi), it, sups, inc, res, violation)
    return MinimalSolutionResult(ITERATION_LIMIT, lam, None, max_iter, sups, inc, monotone_violation=violation)


@dataclass
class Bounds:
    theta: float
    mu1: float
    lower: float
    upper: float
    tau: np.ndarray | None = None
    eigen: EigenResult | None = None


def lower_bound_from_theta(g: Nonlinearity, theta_u: float) -> float:
    """Largest lam with 2 g(0) >= g(2 g(0) lam theta_u)."""
    if g.name == "exponential":
        s_star = np.log(2.0)
    elif g.name == "power":
        s_star = 2.0 ** (1.0 / g.params["m"]) - 1.0
    else:
        s_star = g.doubling_point()
    return float(s_star / (2.0 * g.g0 * theta_u))


def threshold_bounds(grid: Grid2D, flow: FlowField | None, A: float, g: Nonlinearity) -> Bounds:
    """Supersolution lower bound and eigenvalue upper bound for lambda*.

    The lower bound uses the exit time tau (theta = max tau); the upper one
    the principal eigenvalue of the adjoint operator divided by g'(0).
    """
    tau = exit_time(grid, flow, A)
    th = theta(tau)
    eig = principal_eigenvalue(assemble_adjoint(grid, flow, A))
    lower = lower_bound_from_theta(g, th)
    upper = eig.eigenvalue / g.dg0
    return Bounds(th, eig.eigenvalue, lower, upper, tau, eig)


@dataclass
class ProbeRecord:
    lam: float
    status: str
    sup_phi: float
    iterations: int


@dataclass
class ThresholdResult:
    lambda_star: float
    bracket: tuple
    bound_lower: float
    bound_upper: float
    records: list = field(default_factory=list)
    bounds: Bounds | None = None
    rtol: float = 1e-3

    @property
    def mu1(self) -> float:
        return self.bounds.mu1 if self.bounds else np.nan

    @property
    def theta(self) -> float:
        return self.bounds.theta if self.bounds else np.nan


def lambda_star(
    grid: Grid2D,
    flow: FlowField | None,
    A: float,
    g: Nonlinearity,
    rtol: float = 1e-3,
    bounds: Bounds | None = None,
    tol_inc: float = 1e-10,
    max_iter: int = 10_000,
    blowup_cap: float | None = None,
) -> ThresholdResult:
    """Explosion threshold by bisection between the certified bounds."""
    flow = zero_flow(grid) if flow is None else flow
    bounds = threshold_bounds(grid, flow, A, g) if bounds is None else bounds
    op = assemble(grid, flow, A)
    records = []

    def probe(lam):
        r = minimal_solution(grid, flow, A, lam, g, tol_inc, max_iter, blowup_cap, op=op)
        records.append(ProbeRecord(lam, r.status, r.sup, r.iterations))
        if r.status == ITERATION_LIMIT:
            log.warning("lambda=%.6g hit the iteration limit; treated as blow-up", lam)
        return r.converged

    lo, hi = bounds.lower, bounds.upper
    while not probe(lo):
        log.warning("lower bound %.6g did not converge on the grid; halving", lo)
        lo *= 0.5
        if lo < 1e-12 * bounds.lower:
            raise ThresholdError("no solvable lambda found", records)
    while probe(hi):
        log.warning("upper bound %.6g converged on the grid; expanding", hi)
        lo, hi = hi, hi * 1.5
    while (hi - lo) / lo > rtol:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            lo = mid
        else:
            hi = mid
    return ThresholdResult(0.5 * (lo + hi), (lo, hi), bounds.lower, bounds.upper, records, bounds, rtol)


def stability_eigenvalue(
    grid: Grid2D, flow: FlowField | None, A: float, lam: float, phi: np.ndarray, g: Nonlinearity
) -> EigenResult:
    """Principal eigenvalue kappa_1 of -Delta + A u.grad - lam g'(phi)."""
    c = -lam * np.asarray(g.dg(phi), float)
    return principal_eigenvalue(assemble(grid, flow, A, zero_order=c))


@dataclass
class UniformBoundReport:
    delta: float
    K: float
    entries: list  # (A, lam, lam_star, sup_phi, margin)
    worst_margin: float

    @property
    def violations(self) -> list:
        return [e for e in self.entries if e[4] < 0]

    @property
    def ok(self) -> bool:
        return not self.violations


def uniform_bound_check(
    grid: Grid2D,
    flow: FlowField | None,
    A_values,
    g: Nonlinearity,
    delta: float,
    fractions=(0.25, 0.5, 0.75, 1.0),
    lambda_stars: dict | None = None,
    rtol: float = 1e-3,
) -> UniformBoundReport:
    """Check sup phi_lam <= K(delta) for lam = f (1 - delta) lambda*(A)."""
    K = uniform_bound_constant(g, delta)
    entries = []
    for A in np.atleast_1d(A_values):
        ls = (lambda_stars or {}).get(float(A))
        if ls is None:
            ls = lambda_star(grid, flow, A, g, rtol=rtol).lambda_star
        op = assemble(grid, flow, A)
        for frac in fractions:
            lam = frac * (1 - delta) * ls
            r = minimal_solution(grid, flow, A, lam, g, op=op)
            sup = r.sup if r.converged else np.inf
            entries.append((float(A), lam, ls, sup, K - sup))
    worst = min(e[4] for e in entries) if entries else np.inf
    return UniformBoundReport(delta, K, entries, worst)


def centered_gradient(grid: Grid2D, phi: np.ndarray, order: int = 4):
    """Node gradient; fourth-order where the stencil fits, second-order next to the edge."""
    phi = np.asarray(phi, float)
    gx = np.zeros(grid.shape)
    gy = np.zeros(grid.shape)
    gx[1:-1, :] = (phi[2:, :] - phi[:-2, :]) / (2 * grid.hx)
    gy[:, 1:-1] = (phi[:, 2:] - phi[:, :-2]) / (2 * grid.hy)
    if order == 4:
        gx[2:-2, :] = (-phi[4:, :] + 8 * phi[3:-1, :] - 8 * phi[1:-3, :] + phi[:-4, :]) / (12 * grid.hx)
        gy[:, 2:-2] = (-phi[:, 4:] + 8 * phi[:, 3:-1] - 8 * phi[:, 1:-3] + phi[:, :-4]) / (12 * grid.hy)
    return gx, gy


def equidistribution_norm(phi: np.ndarray, flow: FlowField) -> float:
    """Quadrature of |u.grad phi|^2 over the interior nodes (unscaled u)."""
    grid = flow.grid
    gx, gy = centered_gradient(grid, phi)
    w = (flow.u * gx + flow.v * gy) ** 2
    return float(w[grid.interior_mask].sum() * grid.cell_area)


CSV_COLUMNS = (
    "flow", "A", "resolution", "probes", "lambda_star", "bracket_lo", "bracket_hi",
    "bound_lower", "bound_upper", "sup_phi_0.9", "kappa1_0.9",
)


def run_record(
    flow_name: str,
    A: float,
    resolution: int,
    result: ThresholdResult,
    grid: Grid2D,
    flow: FlowField | None,
    g: Nonlinearity,
) -> dict:
    """One CSV row summarising a threshold run, with the solve at 0.9 lambda*."""
    lam = 0.9 * result.lambda_star
    r = minimal_solution(grid, flow, A, lam, g)
    kappa = stability_eigenvalue(grid, flow, A, lam, r.phi, g).eigenvalue if r.converged else np.nan
    probes = ";".join(f"{p.lam:.6g}:{p.status}" for p in result.records)
    return {
        "flow": flow_name,
        "A": A,
        "resolution": resolution,
        "probes": probes,
        "lambda_star": result.lambda_star,
        "bracket_lo": result.bracket[0],
        "bracket_hi": result.bracket[1],
        "bound_lower": result.bound_lower,
        "bound_upper": result.bound_upper,
        "sup_phi_0.9": r.sup if r.converged else np.nan,
        "kappa1_0.9": kappa,
    }
