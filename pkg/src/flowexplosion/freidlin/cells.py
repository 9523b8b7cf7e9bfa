"""Flow cells of a stream function, seeded by hand."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage, optimize

from ..flows import StreamFunction
from ..grid import Grid2D


class CellError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CellSpec:
    seed: tuple[float, float]
    extremum: tuple[float, float]
    H: float  # |Psi| at the extremum
    sign: int  # +1 for a maximum of Psi, -1 for a minimum
    mask: np.ndarray  # member nodes on the parent grid
    label: int = 0

    @property
    def n_nodes(self) -> int:
        return int(self.mask.sum())


def _nearest_node(grid: Grid2D, p):
    i = int(round((p[0] - grid.origin[0]) / grid.hx))
    j = int(round((p[1] - grid.origin[1]) / grid.hy))
    if not (0 <= i <= grid.nx and 0 <= j <= grid.ny):
        raise CellError(f"seed {p} lies outside the grid")
    return i, j


def refine_extremum(stream: StreamFunction, start, sign: int, box=None) -> tuple[tuple[float, float], float]:
    """Polish a node maximum of sign*Psi with a bounded quasi-Newton search."""

    def f(p):
        return -sign * float(stream.eval(p[0], p[1]))

    def jac(p):
        gx, gy = stream.grad(p[0], p[1])
        return -sign * np.array([float(gx), float(gy)])

    res = optimize.minimize(f, np.asarray(start, float), jac=jac, method="L-BFGS-B", bounds=box,
                            options={"ftol": 1e-15, "gtol": 1e-12})
    p = res.x if -res.fun >= -f(start) else np.asarray(start, float)
    return (float(p[0]), float(p[1])), abs(float(stream.eval(p[0], p[1])))


def detect_cells(stream: StreamFunction, grid: Grid2D, seeds, eps_sep: float | None = None) -> list[CellSpec]:
    """Flood-fill {|Psi| > eps_sep} (4-connected, same sign) from each seed.

    ``eps_sep`` defaults to 2% of max |Psi| over the interior nodes.
    """
    X, Y = grid.mesh()
    psi = stream.eval(X, Y)
    inside = grid.interior_mask
    if eps_sep is None:
        eps_sep = 0.02 * float(np.abs(psi[inside]).max())
    cells = []
    taken = np.zeros(grid.shape, dtype=int)
    for k, seed in enumerate(seeds, start=1):
        i, j = _nearest_node(grid, seed)
        s_val = float(stream.eval(seed[0], seed[1]))
        if abs(s_val) <= eps_sep or not inside[i, j] or abs(psi[i, j]) <= eps_sep:
            raise CellError(f"seed {tuple(seed)} lies on the separatrix band |Psi| <= {eps_sep:.3g}")
        sign = 1 if s_val > 0 else -1
        region = inside & (sign * psi > eps_sep)
        labels, _ = ndimage.label(region)
        lab = labels[i, j]
        if lab == 0:
            raise CellError(f"seed {tuple(seed)} is not inside a cell")
        mask = labels == lab
        if np.any(taken[mask]):
            other = int(taken[mask].max())
            raise CellError(f"seeds {other} and {k} fall in the same cell")
        taken[mask] = k
        vals = sign * psi * mask
        a, b = np.unravel_index(np.argmax(vals), vals.shape)
        box = [(grid.x[max(a - 1, 0)], grid.x[min(a + 1, grid.nx)]), (grid.y[max(b - 1, 0)], grid.y[min(b + 1, grid.ny)])]
        ext, H = refine_extremum(stream, (grid.x[a], grid.y[b]), sign, box)
        H = max(H, float(vals[a, b]))
        mask.setflags(write=False)
        cells.append(CellSpec((float(seed[0]), float(seed[1])), ext, H, sign, mask, k))
    return cells


def cell_territory(stream: StreamFunction, grid: Grid2D, cell: CellSpec) -> np.ndarray:
    """All interior nodes of the 4-connected {sign*Psi > 0} component holding the cell."""
    X, Y = grid.mesh()
    region = grid.interior_mask & (cell.sign * stream.eval(X, Y) > 0)
    labels, _ = ndimage.label(region)
    lab = np.unique(labels[cell.mask])
    lab = lab[lab > 0]
    return np.isin(labels, lab)


def skeleton_mask(stream: StreamFunction, grid: Grid2D, eps_sep: float | None = None) -> np.ndarray:
    """Interior nodes in the separatrix band {|Psi| <= eps_sep}."""
    X, Y = grid.mesh()
    psi = stream.eval(X, Y)
    if eps_sep is None:
        eps_sep = 0.02 * float(np.abs(psi[grid.interior_mask]).max())
    return grid.interior_mask & (np.abs(psi) <= eps_sep)
