"""Principal (Perron) eigenpair of an advection-diffusion operator."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .operators import AdvectionDiffusionOperator

log = logging.getLogger(__name__)


class EigenError(RuntimeError):
    def __init__(self, msg, history=None):
        super().__init__(msg)
        self.history = history or []


@dataclass
class EigenResult:
    eigenvalue: float
    eigenfunction: np.ndarray  # node field, max = 1
    residual: float
    iterations: int
    history: list = field(default_factory=list)
    method: str = "inverse-power"


def principal_eigenvalue(
    op: AdvectionDiffusionOperator,
    tol: float = 1e-10,
    res_tol: float = 1e-8,
    maxiter: int = 60,
) -> EigenResult:
    """Smallest eigenvalue with a positive eigenfunction.

    Inverse power iteration with shift 0, normalised by the maximum, stops
    when the Rayleigh quotient changes by less than ``tol`` (relative) and
    ``|L psi - mu psi|_inf <= res_tol |mu| |psi|_inf``.  If the spectral gap
    is too small for that within ``maxiter`` steps, the eigenvalue is
    switches to Noda's shifted inverse iteration.
    """
    L = op.matrix
    x = np.ones(op.n)
    mu_old = np.inf
    history = []
    for it in range(1, maxiter + 1):
        y = op.lu.solve(x)
        mu = float(y @ x) / float(y @ y)
        x = y / np.abs(y).max()
        res = float(np.abs(L @ x - mu * x).max())
        history.append((mu, res))
        if abs(mu - mu_old) <= tol * abs(mu) and res <= res_tol * abs(mu):
            return _finish(op, mu, x, res, it, history, "inverse-power")
        mu_old = mu
    log.info("inverse iteration stagnated after %d steps (res %.2e); switching to Noda iteration", maxiter, res)
    return _noda(op, x, tol, res_tol, history)


def _noda(op, x0, tol, res_tol, history, maxiter: int = 200):
    """Shifted inverse iteration with the Collatz-Wielandt lower bound as shift.

    Each step works on the balanced matrix M = D^-1 L D, D = diag(x), whose
    row sums are the ratios (L x)_i / x_i.  Their minimum stays below mu1,
    so M - sigma I is a diagonally dominant M-matrix: the solve is stable
    with diagonal pivots and the iterate stays positive.  Balancing matters
    for strongly non-normal operators (large cell Peclet number), where the
    eigenvector spans many decades and unbalanced shifted solves or Krylov
    eigensolvers lose all accuracy.
    """
    L = op.matrix.tocsr()
    eye = sp.identity(op.n, format="csc")
    ones = np.ones(op.n)
    x = np.maximum(np.abs(x0), 1e-300)
    x = x / x.max()
    for _ in range(maxiter):
        M = (sp.diags(1.0 / x) @ L @ sp.diags(x)).tocsc()
        r = M @ ones
        lo, hi = float(r.min()), float(r.max())
        mu = 0.5 * (lo + hi)
        res = float(np.abs(L @ x - mu * x).max())
        history.append((mu, res))
        if hi - lo <= 2 * tol * abs(mu) and res <= res_tol * abs(mu):
            return _finish(op, mu, x, res, len(history), history, "noda")
        z = spla.splu(M - lo * eye, diag_pivot_thresh=0.0).solve(ones)
        if not np.all(np.isfinite(z)) or z.min() <= 0:
            raise EigenError("shifted solve lost positivity", history)
        x = x * z
        x = np.maximum(x / x.max(), 1e-300)
    raise EigenError(f"eigen-iteration stagnated (residual {res:.3e})", history)


def _finish(op, mu, x, res, it, history, method):
    x = x / x.max()
    return EigenResult(mu, op.grid.to_field(x), res, it, history, method)
