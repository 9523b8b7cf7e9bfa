"""Implicit Euler for psi_t - Delta psi + A u.grad psi = 0 and decay fits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .flows import FlowField
from .grid import Grid2D
from .operators import assemble


class DecayFitError(ValueError):
    pass


@dataclass
class ParabolicRun:
    times: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    linf: np.ndarray
    checkpoints: dict = field(default_factory=dict)  # time -> node field
    dt: float = 0.0
    initial_norms: dict = field(default_factory=dict)  # p -> |f|_p

    def decay_rate(self, norm: str = "l2", t_min: float = 0.0, t_max: float = np.inf) -> float:
        """Least-squares exponential rate of the chosen norm on [t_min, t_max]."""
        vals = getattr(self, norm)
        sel = (self.times >= t_min) & (self.times <= t_max) & (vals > 0)
        if sel.sum() < 2:
            raise DecayFitError("not enough samples in the fitting window")
        slope = np.polyfit(self.times[sel], np.log(vals[sel]), 1)[0]
        return float(-slope)


def _norms(grid, q):
    w = grid.cell_area
    a = np.abs(q)
    return float(a.sum() * w), float(np.sqrt((a * a).sum() * w)), float(a.max())


def lp_norm(grid: Grid2D, q: np.ndarray, p: float) -> float:
    a = np.abs(np.asarray(q, float))
    if np.isinf(p):
        return float(a.max())
    return float((np.sum(a**p) * grid.cell_area) ** (1.0 / p))


def evolve(
    grid: Grid2D,
    flow: FlowField | None,
    A: float,
    initial: np.ndarray,
    dt: float,
    t_final: float,
    checkpoints=(),
) -> ParabolicRun:
    """Backward Euler with the assembled upwind operator.

    Norms are recorded after every step; fields are stored at the steps
    closest to the requested ``checkpoints``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    op = assemble(grid, flow, A)
    n_steps = int(round(t_final / dt))
    stepper = spla.splu((sp.identity(op.n, format="csr") + dt * op.matrix).tocsc())
    q = grid.to_vector(np.broadcast_to(np.asarray(initial, float), grid.shape))
    want = {int(round(t / dt)): t for t in checkpoints}
    f_field = grid.to_field(q)
    times = [0.0]
    norms = [_norms(grid, f_field)]
    store = {}
    if 0 in want:
        store[0.0] = f_field
    for k in range(1, n_steps + 1):
        q = stepper.solve(q)
        fld = grid.to_field(q)
        times.append(k * dt)
        norms.append(_norms(grid, fld))
        if k in want:
            store[k * dt] = fld
    arr = np.array(norms)
    init = {p: lp_norm(grid, f_field, p) for p in (1, 2, np.inf)}
    return ParabolicRun(np.array(times), arr[:, 0], arr[:, 1], arr[:, 2], store, dt, init)


@dataclass
class DecayFit:
    C: float
    alpha: float
    r: float
    residual: float
    C_envelope: float
    p: float

    def envelope(self, t):
        t = np.asarray(t, float)
        return self.C_envelope * np.exp(-self.alpha * t) * t ** (-self.r)


def decay_profile(run: ParabolicRun, p: float = 1.0, t_min: float | None = None, f_norm: float | None = None) -> DecayFit:
    """Fit |psi(t)|_inf <= C exp(-alpha t) t^(-r) |f|_p in log space.

    The fit uses the stored checkpoints (at least five, spanning a decade
    of decay).  ``C_envelope`` is the prefactor raised just enough for the
    envelope to dominate every checkpoint.
    """
    ts = np.array(sorted(t for t in run.checkpoints if t > 0 and (t_min is None or t >= t_min)))
    if len(ts) < 5:
        raise DecayFitError(f"need at least 5 positive checkpoints, got {len(ts)}")
    sup = np.array([np.abs(run.checkpoints[t]).max() for t in ts])
    if sup.min() <= 0 or sup.max() / sup.min() < 10:
        raise DecayFitError("less than one decade of decay observed; increase t_final")
    fn = run.initial_norms.get(p) if f_norm is None else f_norm
    if fn is None:
        raise DecayFitError(f"|f|_{p} unknown; pass f_norm")
    y = np.log(sup / fn)
    X = np.column_stack([np.ones_like(ts), -ts, -np.log(ts)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    logC, alpha, r = coef
    return DecayFit(
        C=float(np.exp(logC)),
        alpha=float(alpha),
        r=float(r),
        residual=float(np.sqrt(np.mean(resid**2))),
        C_envelope=float(np.exp(logC + max(resid.max(), 0.0))),
        p=p,
    )
