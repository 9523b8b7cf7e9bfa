"""Structured 2D grids with a Dirichlet mask.

Unknowns live on the nodes flagged by ``interior_mask``; every other node
carries a homogeneous Dirichlet value.  Arrays are indexed ``[i, j]`` with
``i`` along x and ``j`` along y.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage


class GridError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Uniform node grid over ``[x0, x0 + nx*hx] x [y0, y0 + ny*hy]``.

    ``nx`` and ``ny`` count cells, so the node arrays have shape
    ``(nx + 1, ny + 1)``.
    """

    nx: int
    ny: int
    hx: float
    hy: float
    origin: tuple[float, float]
    interior_mask: np.ndarray
    domain: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise GridError(f"need at least 3 cells per direction, got {self.nx}x{self.ny}")
        if not (self.hx > 0 and self.hy > 0):
            raise GridError("grid spacings must be positive")
        mask = np.asarray(self.interior_mask, dtype=bool)
        if mask.shape != (self.nx + 1, self.ny + 1):
            raise GridError(f"mask shape {mask.shape} does not match nodes {(self.nx + 1, self.ny + 1)}")
        # the outer ring is always Dirichlet
        mask = mask.copy()
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = False
        if not mask.any():
            raise GridError("domain has no interior nodes")
        mask.setflags(write=False)
        object.__setattr__(self, "interior_mask", mask)
        index = np.full(mask.shape, -1, dtype=np.int64)
        index[mask] = np.arange(int(mask.sum()))
        index.setflags(write=False)
        object.__setattr__(self, "_index", index)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx + 1, self.ny + 1)

    @property
    def n_interior(self) -> int:
        return int(self.interior_mask.sum())

    @property
    def index(self) -> np.ndarray:
        """Unknown number per node, -1 on Dirichlet nodes."""
        return self._index

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.hx * np.arange(self.nx + 1)

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.hy * np.arange(self.ny + 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    def to_vector(self, field2d: np.ndarray) -> np.ndarray:
        return np.asarray(field2d, dtype=float)[self.interior_mask]

    def to_field(self, vec: np.ndarray, fill: float = 0.0) -> np.ndarray:
        out = np.full(self.shape, fill, dtype=float)
        out[self.interior_mask] = vec
        return out

    def with_mask(self, mask: np.ndarray, **domain) -> "Grid2D":
        """Same node lattice, different Dirichlet mask (e.g. one flow cell)."""
        info = dict(self.domain)
        info.update(domain)
        return Grid2D(self.nx, self.ny, self.hx, self.hy, self.origin, mask, info)

    def boundary_adjacent(self) -> np.ndarray:
        """Interior nodes with at least one Dirichlet neighbour."""
        m = self.interior_mask
        nb_out = np.zeros_like(m)
        nb_out[1:-1, 1:-1] = (~m[2:, 1:-1] | ~m[:-2, 1:-1] | ~m[1:-1, 2:] | ~m[1:-1, :-2])
        return m & nb_out

    def is_connected_to_boundary(self) -> bool:
        """Every interior component must touch the Dirichlet set."""
        labels, n = ndimage.label(self.interior_mask)
        touching = np.unique(labels[self.boundary_adjacent()])
        return set(range(1, n + 1)) <= set(touching.tolist())


def _lattice(bbox, resolution):
    (x0, x1), (y0, y1) = bbox
    lx, ly = x1 - x0, y1 - y0
    if lx <= 0 or ly <= 0:
        raise GridError("degenerate bounding box")
    h = max(lx, ly) / (resolution - 1)
    nx = max(int(round(lx / h)), 3)
    ny = max(int(round(ly / h)), 3)
    return nx, ny, lx / nx, ly / ny


def build_grid(domain: dict, resolution: int) -> Grid2D:
    """Build a grid for a rectangle, disk or union of rectangles.

    ``resolution`` is the node count along the longer side of the domain's
    bounding box; spacings are (nearly) equal in x and y.

    Domain dictionaries::

        {"kind": "rectangle", "Lx": 1.0, "Ly": 1.0, "origin": (0, 0)}
        {"kind": "disk", "R": 1.0, "center": (0, 0)}
        {"kind": "union", "rectangles": [(x0, y0, x1, y1), ...]}
    """
    if resolution < 8:
        raise GridError(f"resolution must be at least 8, got {resolution}")
    kind = domain.get("kind")
    if kind == "rectangle":
        ox, oy = domain.get("origin", (0.0, 0.0))
        lx, ly = float(domain["Lx"]), float(domain["Ly"])
        nx, ny, hx, hy = _lattice(((ox, ox + lx), (oy, oy + ly)), resolution)
        mask = np.zeros((nx + 1, ny + 1), dtype=bool)
        mask[1:-1, 1:-1] = True
        origin = (float(ox), float(oy))
    elif kind == "disk":
        cx, cy = domain.get("center", (0.0, 0.0))
        r = float(domain["R"])
        if r <= 0:
            raise GridError("disk radius must be positive")
        nx, ny, hx, hy = _lattice(((cx - r, cx + r), (cy - r, cy + r)), resolution)
        origin = (cx - r, cy - r)
        X, Y = np.meshgrid(origin[0] + hx * np.arange(nx + 1), origin[1] + hy * np.arange(ny + 1), indexing="ij")
        mask = (X - cx) ** 2 + (Y - cy) ** 2 < r * r
    elif kind == "union":
        rects = [tuple(map(float, r)) for r in domain["rectangles"]]
        if not rects:
            raise GridError("empty rectangle union")
        bx0 = min(r[0] for r in rects)
        by0 = min(r[1] for r in rects)
        bx1 = max(r[2] for r in rects)
        by1 = max(r[3] for r in rects)
        nx, ny, hx, hy = _lattice(((bx0, bx1), (by0, by1)), resolution)
        origin = (bx0, by0)
        X, Y = np.meshgrid(bx0 + hx * np.arange(nx + 1), by0 + hy * np.arange(ny + 1), indexing="ij")
        ex, ey = 0.25 * hx, 0.25 * hy

        def covered(px, py):
            inside = np.zeros(px.shape, dtype=bool)
            for x0, y0, x1, y1 in rects:
                inside |= (px >= x0) & (px <= x1) & (py >= y0) & (py <= y1)
            return inside

        # interior of the closed union: a small box around the node is covered
        mask = np.ones(X.shape, dtype=bool)
        for sx in (-ex, ex):
            for sy in (-ey, ey):
                mask &= covered(X + sx, Y + sy)
    else:
        raise GridError(f"unknown domain kind {kind!r}")
    return Grid2D(nx, ny, hx, hy, origin, mask, dict(domain))


def rectangle_grid(Lx: float, Ly: float, resolution: int, origin: Sequence[float] = (0.0, 0.0)) -> Grid2D:
    return build_grid({"kind": "rectangle", "Lx": Lx, "Ly": Ly, "origin": tuple(origin)}, resolution)


def disk_grid(R: float, resolution: int, center: Sequence[float] = (0.0, 0.0)) -> Grid2D:
    return build_grid({"kind": "disk", "R": R, "center": tuple(center)}, resolution)
