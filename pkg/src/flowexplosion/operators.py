"""Upwind finite-difference operators for -Delta + A u.grad on masked grids.

The advective part is written in flux form over the node's four faces,
with the neighbour value taken on inflow faces.  This keeps the matrix an
M-matrix for any velocity field (row sums of the advective part vanish),
and for discretely divergence-free face velocities its column sums vanish
too, which is what makes the L1 norm of the parabolic flow non-increasing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .flows import FlowField, zero_flow
from .grid import Grid2D

log = logging.getLogger(__name__)

DIRECT_LIMIT = 10_000


class SolveError(RuntimeError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


def _face_inflow(flow: FlowField):
    """Inflow rates (velocity / spacing) through the E, W, N, S faces of every node.

    Also returns the matching outflow rates.  Shapes are node-shaped, with
    zeros on the outer ring.
    """
    g = flow.grid
    fu, fv = flow.face_u, flow.face_v
    out = {}
    # outward normal velocity through each face of interior-ring nodes
    east = np.zeros(g.shape)
    west = np.zeros(g.shape)
    north = np.zeros(g.shape)
    south = np.zeros(g.shape)
    east[1:-1, 1:-1] = fu[1:, 1:-1]
    west[1:-1, 1:-1] = -fu[:-1, 1:-1]
    north[1:-1, 1:-1] = fv[1:-1, 1:]
    south[1:-1, 1:-1] = -fv[1:-1, :-1]
    for key, vel, h in (("E", east, g.hx), ("W", west, g.hx), ("N", north, g.hy), ("S", south, g.hy)):
        out[key] = (np.maximum(-vel, 0.0) / h, np.maximum(vel, 0.0) / h)
    return out


_SHIFTS = {"E": (1, 0), "W": (-1, 0), "N": (0, 1), "S": (0, -1)}


@dataclass(eq=False)
class AdvectionDiffusionOperator:
    """Sparse matrix of -Delta + A u.grad + c over the interior unknowns."""

    grid: Grid2D
    flow: FlowField
    A: float
    matrix: sp.csr_matrix
    zero_order: np.ndarray | None = None
    adjoint: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def lu(self):
        return spla.splu(self.matrix.tocsc())

    def apply(self, q: np.ndarray) -> np.ndarray:
        """Apply to a node field (Dirichlet values ignored); returns a node field."""
        return self.grid.to_field(self.matrix @ self.grid.to_vector(q))

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def col_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=0)).ravel()


def _build(grid: Grid2D, flow: FlowField, A: float, zero_order, adjoint: bool):
    if flow.grid is not grid and flow.grid.shape != grid.shape:
        raise ValueError("flow and grid do not match")
    idx = grid.index
    mask = grid.interior_mask
    rows_c = idx[mask]
    diag = np.full(grid.shape, 2.0 / grid.hx**2 + 2.0 / grid.hy**2)
    rates = _face_inflow(flow)
    inflow_sum = np.zeros(grid.shape)
    for key in ("E", "W", "N", "S"):
        inflow_sum = inflow_sum + rates[key][0]
    diag = diag + A * inflow_sum
    rows, cols, vals = [rows_c], [rows_c], [diag[mask]]
    I, J = np.nonzero(mask)
    for key, (di, dj) in _SHIFTS.items():
        inflow, outflow = rates[key]
        h2 = grid.hx**2 if di else grid.hy**2
        nb = idx[I + di, J + dj]
        keep = nb >= 0
        # direct: inflow through this face couples to the upwind neighbour;
        # adjoint row holds the transposed coupling, i.e. this node's outflow
        adv = (outflow if adjoint else inflow)[I, J]
        val = -1.0 / h2 - A * adv
        rows.append(rows_c[keep])
        cols.append(nb[keep])
        vals.append(val[keep])
    n = grid.n_interior
    mat = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)).tocsr()
    if zero_order is not None:
        c = np.asarray(zero_order, float)
        c = grid.to_vector(c) if c.shape == grid.shape else c
        mat = (mat + sp.diags(c)).tocsr()
    mat.sort_indices()
    return mat


def assemble(grid: Grid2D, flow: FlowField | None = None, A: float = 1.0, zero_order=None) -> AdvectionDiffusionOperator:
    """Assemble -Delta + A u.grad (+ zero_order) with Dirichlet elimination.

    ``zero_order`` (node field or interior vector) is added to the diagonal;
    the linearised operator uses ``-lambda g'(phi)``.
    """
    flow = zero_flow(grid) if flow is None else flow
    mat = _build(grid, flow, float(A), zero_order, adjoint=False)
    return AdvectionDiffusionOperator(grid, flow, float(A), mat, zero_order, adjoint=False)


def assemble_adjoint(grid: Grid2D, flow: FlowField | None = None, A: float = 1.0, zero_order=None) -> AdvectionDiffusionOperator:
    """Discrete adjoint of :func:`assemble`, i.e. -Delta - div(A u .) (+ zero_order).

    Built row by row from outflow rates rather than by transposition; it
    coincides entrywise with the transpose of the direct matrix.
    """
    flow = zero_flow(grid) if flow is None else flow
    mat = _build(grid, flow, float(A), zero_order, adjoint=True)
    return AdvectionDiffusionOperator(grid, flow, float(A), mat, zero_order, adjoint=True)


def solve(op: AdvectionDiffusionOperator, f, rtol: float = 1e-10, method: str = "auto", maxiter: int = 2000) -> np.ndarray:
    """Solve ``op q = f`` with zero Dirichlet data; returns a node field.

    ``method`` is ``"direct"`` (sparse LU, cached on the operator),
    ``"bicgstab"`` (ILU-preconditioned) or ``"auto"`` (direct below
    ``DIRECT_LIMIT`` unknowns).
    """
    grid = op.grid
    f = np.asarray(f, float)
    b = grid.to_vector(f) if f.shape == grid.shape else np.broadcast_to(f, (op.n,)).astype(float)
    bnorm = np.abs(b).max()
    if bnorm == 0:
        return np.zeros(grid.shape)
    if method == "auto":
        method = "direct" if op.n < DIRECT_LIMIT else "bicgstab"
    if method == "direct":
        q = op.lu.solve(b)
        res = np.abs(op.matrix @ q - b).max()
        if res > rtol * bnorm:
            # one step of iterative refinement
            q = q + op.lu.solve(b - op.matrix @ q)
            res = np.abs(op.matrix @ q - b).max()
    elif method == "bicgstab":
        q, res = _bicgstab(op, b, rtol, maxiter)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(q)) or res > rtol * bnorm:
        raise SolveError(f"linear solve did not reach rtol={rtol:g}: residual {res:.3e} (|f|={bnorm:.3e})", res)
    return grid.to_field(q)


def _bicgstab(op, b, rtol, maxiter):
    mat = op.matrix.tocsc()
    ilu = spla.spilu(mat, drop_tol=1e-5, fill_factor=20)
    M = spla.LinearOperator(mat.shape, ilu.solve)
    bnorm = np.abs(b).max()
    x = None
    res = np.inf
    # the inner test is in the 2-norm; loop until the max-norm target holds
    for _ in range(5):
        x, info = spla.bicgstab(mat, b, x0=x, rtol=rtol * 1e-2, atol=0.0, maxiter=maxiter, M=M)
        res = np.abs(mat @ x - b).max()
        if res <= rtol * bnorm:
            break
        if info < 0:
            break
    return x, res


def exit_time(grid: Grid2D, flow: FlowField | None = None, A: float = 1.0, op: AdvectionDiffusionOperator | None = None) -> np.ndarray:
    """Expected exit time: -Delta tau + A u.grad tau = 1, tau = 0 on the boundary."""
    op = assemble(grid, flow, A) if op is None else op
    return solve(op, np.ones(grid.shape))


def theta(tau: np.ndarray) -> float:
    return float(np.max(tau))
