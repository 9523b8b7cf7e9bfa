"""Level-set coefficients T(h), p(h), P(xi) of one flow cell.

Both coefficients come from area integrals over the superlevel sets
G_h = {|Psi| >= h} of the cell, evaluated on the piecewise-linear
interpolant of Psi over a triangulated fine lattice:

* T(h) = -dA/dh, the derivative of the area function (co-area identity),
  differentiated exactly on the interpolant;
* p(h) = -int_{G_h} Delta|Psi|, Green's identity for the contour integral
  of |grad Psi|.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..flows import StreamFunction
from ..grid import Grid2D
from .cells import CellSpec, cell_territory


class CoefficientError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LevelCoefficients:
    h: np.ndarray  # 0 < h_1 < ... < h_M <= H0
    T: np.ndarray
    p: np.ndarray
    P: np.ndarray
    H0: float
    top_slope: float = np.nan  # C in p ~ C (H0 - h)
    area: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_arrays(cls, h, T, p, H0, top_fraction: float = 0.0):
        """Tabulated coefficients; P by cumulative trapezoid of 1/p from 0.

        With ``top_fraction > 0`` the last fraction of levels uses the fitted
        model p = C (H0 - h) when integrating 1/p.
        """
        h = np.asarray(h, float)
        T = np.asarray(T, float)
        p = np.asarray(p, float)
        if np.any(np.diff(h) <= 0) or h[0] <= 0 or h[-1] > H0:
            raise CoefficientError("levels must increase strictly inside (0, H0]")
        P, C = _cumulative_P(h, p, H0, top_fraction)
        return cls(h, T, p, P, float(H0), C)

    def to_csv(self, path, label: str = ""):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cell", "h", "T", "p", "P"])
            for row in zip(self.h, self.T, self.p, self.P):
                w.writerow([label] + [repr(float(v)) for v in row])


def fit_top(h, p, H0, fraction: float = 0.1):
    """Least-squares slope C of p = C (H0 - h) over the last ``fraction`` of levels."""
    k = max(3, int(np.ceil(fraction * len(h))))
    d = H0 - h[-k:]
    C = float(d @ p[-k:] / (d @ d))
    slope = float(np.polyfit(h[-k:], p[-k:], 1)[0])
    return C, slope


def _cumulative_P(h, p, H0, top_fraction):
    x = np.concatenate([[0.0], h])
    # p is continuous up to h = 0; extend the first sample
    inv = 1.0 / np.concatenate([[p[0]], p])
    P = np.concatenate([[0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * np.diff(x))])[1:]
    C = np.nan
    if top_fraction > 0:
        C, _ = fit_top(h, p, H0, 2 * top_fraction)
        if not C > 0:
            raise CoefficientError("p does not vanish linearly at the top level")
        k = max(2, int(np.ceil(top_fraction * len(h))))
        a = len(h) - k
        P[a:] = P[a] + np.log((H0 - h[a]) / (H0 - h[a:])) / C
    return P, C


def default_levels(H0: float, n_levels: int, n_geometric: int = 10) -> np.ndarray:
    """Uniform levels on [0.1 H0, H0) plus h_k = 0.1 H0 2^-k below."""
    uniform = 0.1 * H0 + 0.9 * H0 * np.arange(n_levels) / n_levels
    geometric = 0.1 * H0 * 2.0 ** -np.arange(n_geometric, 0, -1)
    return np.concatenate([geometric, uniform])


def _triangles(vals, lap, hx, hy):
    """Vertex values of the two triangles per lattice square.

    Vertex order is (v_a, v_b, v_c) with matching Laplacian samples; both
    triangles have area hx*hy/2.
    """
    a, b, c, d = vals[:-1, :-1], vals[1:, :-1], vals[1:, 1:], vals[:-1, 1:]
    la, lb, lc, ld = lap[:-1, :-1], lap[1:, :-1], lap[1:, 1:], lap[:-1, 1:]
    V = np.concatenate([np.stack([a, b, c], -1).reshape(-1, 3), np.stack([a, c, d], -1).reshape(-1, 3)])
    L = np.concatenate([np.stack([la, lb, lc], -1).reshape(-1, 3), np.stack([la, lc, ld], -1).reshape(-1, 3)])
    return V, L


def superlevel_integrals(V, L, area, h):
    """Area, -dArea/dh and int Lap over {v >= h} for P1 data on triangles.

    ``V`` and ``L`` are (n, 3) vertex values; ``area`` is the common
    triangle area.  Everything is exact for the linear interpolants.
    """
    order = np.argsort(V, axis=1)
    v = np.take_along_axis(V, order, 1)
    l = np.take_along_axis(L, order, 1)
    v1, v2, v3 = v[:, 0], v[:, 1], v[:, 2]
    l1, l2, l3 = l[:, 0], l[:, 1], l[:, 2]
    full = v1 >= h
    low = (v1 < h) & (v2 >= h)  # cut off a corner triangle at v1
    high = (v2 < h) & (v3 > h)  # only a corner triangle at v3 remains
    frac = np.zeros_like(v1)
    dfrac = np.zeros_like(v1)
    lap_int = np.zeros_like(v1)
    lmean = (l1 + l2 + l3) / 3
    frac[full] = 1.0
    lap_int[full] = lmean[full]

    # corner at v1 removed: small triangle with edge parameters t1 (to v2), t2 (to v3)
    s = low
    t1 = (h - v1[s]) / (v2[s] - v1[s])
    t2 = (h - v1[s]) / (v3[s] - v1[s])
    small = t1 * t2
    frac[s] = 1.0 - small
    dfrac[s] = 2 * (h - v1[s]) / ((v2[s] - v1[s]) * (v3[s] - v1[s]))
    lc = l1[s] + (t1 * (l2[s] - l1[s]) + t2 * (l3[s] - l1[s])) / 3
    lap_int[s] = lmean[s] - small * lc

    s = high
    t1 = (v3[s] - h) / (v3[s] - v1[s])
    t2 = (v3[s] - h) / (v3[s] - v2[s])
    small = t1 * t2
    frac[s] = small
    dfrac[s] = 2 * (v3[s] - h) / ((v3[s] - v1[s]) * (v3[s] - v2[s]))
    lc = l3[s] + (t1 * (l1[s] - l3[s]) + t2 * (l2[s] - l3[s])) / 3
    lap_int[s] = small * lc
    return area * frac.sum(), area * dfrac.sum(), area * lap_int.sum()


def _fine_lattice(stream, grid, cell, fine_resolution):
    terr = cell_territory(stream, grid, cell)
    ii, jj = np.nonzero(terr)
    x0, x1 = grid.x[max(ii.min() - 1, 0)], grid.x[min(ii.max() + 1, grid.nx)]
    y0, y1 = grid.y[max(jj.min() - 1, 0)], grid.y[min(jj.max() + 1, grid.ny)]
    h = max(x1 - x0, y1 - y0) / (fine_resolution - 1)
    nx = max(int(np.ceil((x1 - x0) / h)), 3)
    ny = max(int(np.ceil((y1 - y0) / h)), 3)
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    w = cell.sign * stream.eval(X, Y)
    # restrict to the component of {w > 0} containing the extremum
    labels, _ = ndimage.label(w > 0)
    i0 = int(np.clip(round((cell.extremum[0] - x0) / (xs[1] - xs[0])), 0, nx))
    j0 = int(np.clip(round((cell.extremum[1] - y0) / (ys[1] - ys[0])), 0, ny))
    lab = labels[i0, j0]
    if lab == 0:
        raise CoefficientError("extremum not inside the positive region")
    own = labels == lab
    vals = np.where(own, w, np.minimum(w, 0.0))
    lap = cell.sign * stream.laplacian(X, Y)
    return vals, lap, xs[1] - xs[0], ys[1] - ys[0]


def level_coefficients(
    stream: StreamFunction,
    cell: CellSpec,
    grid: Grid2D,
    n_levels: int = 96,
    fine_resolution: int = 513,
    n_geometric: int = 10,
    top_fraction: float = 0.05,
) -> LevelCoefficients:
    """Tabulate T, p and P for one cell.

    The cell's territory on ``grid`` fixes a bounding box that is resampled
    with ``fine_resolution`` nodes along its long side.
    """
    if n_levels < 32:
        raise CoefficientError("n_levels must be at least 32")
    vals, lap, hx, hy = _fine_lattice(stream, grid, cell, fine_resolution)
    H0 = cell.H
    V, L = _triangles(vals, lap, hx, hy)
    keep = V.max(axis=1) > 0
    V, L = V[keep], L[keep]
    area = 0.5 * hx * hy
    levels = default_levels(H0, n_levels, n_geometric)
    A = np.empty(len(levels))
    T = np.empty(len(levels))
    lapint = np.empty(len(levels))
    for k, h in enumerate(levels):
        A[k], T[k], lapint[k] = superlevel_integrals(V, L, area, h)
    if np.any(np.diff(A) > 1e-12 * A[0]):
        raise CoefficientError("area function is not monotone: cell has more than one critical point")
    p = -lapint
    if np.any(p[:-1] <= 0):
        raise CoefficientError("p(h) must be positive below the top level")
    P, C = _cumulative_P(levels, p, H0, top_fraction)
    return LevelCoefficients(levels, T, p, P, H0, C, A, {"fine_h": (hx, hy), "label": cell.label})
