"""Stream functions, velocity fields and the built-in flow catalog.

Velocities follow ``u = (Psi_y, -Psi_x)``.  Besides node values, every
:class:`FlowField` carries *face* velocities, which are what the upwind
operator transports with.  For stream-function flows the face velocities
are differences of Psi at the dual-cell corners, so the discrete
divergence around every node vanishes up to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import Grid2D

DIVERGENCE_RTOL = 1e-6


class FlowError(ValueError):
    pass


@dataclass(frozen=True)
class StreamFunction:
    """Scalar stream function with optional analytic derivatives.

    ``grad`` and ``laplacian`` fall back to centred differences with step
    ``fd_step`` when no analytic form is given.
    """

    name: str
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_func: Callable | None = None
    laplacian_func: Callable | None = None
    params: dict = field(default_factory=dict)
    fd_step: float = 1e-5

    def eval(self, x, y):
        return np.asarray(self.func(np.asarray(x, float), np.asarray(y, float)), dtype=float)

    __call__ = eval

    def grad(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if self.grad_func is not None:
            gx, gy = self.grad_func(x, y)
            return np.asarray(gx, float) * np.ones_like(x), np.asarray(gy, float) * np.ones_like(y)
        return self.numerical_grad(x, y)

    def numerical_grad(self, x, y):
        d = self.fd_step
        gx = (self.func(x + d, y) - self.func(x - d, y)) / (2 * d)
        gy = (self.func(x, y + d) - self.func(x, y - d)) / (2 * d)
        return gx, gy

    def laplacian(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if self.laplacian_func is not None:
            return np.asarray(self.laplacian_func(x, y), float) * np.ones(np.broadcast(x, y).shape)
        d = 1e-4
        f0 = self.func(x, y)
        return (self.func(x + d, y) + self.func(x - d, y) + self.func(x, y + d) + self.func(x, y - d) - 4 * f0) / d**2

    def velocity(self, x, y):
        gx, gy = self.grad(x, y)
        return gy, -gx


@dataclass(frozen=True, eq=False)
class FlowField:
    """Velocity on a grid.

    ``face_u[i, j]`` is the x-velocity on the face between nodes ``(i, j)``
    and ``(i+1, j)``; ``face_v[i, j]`` the y-velocity between ``(i, j)`` and
    ``(i, j+1)``.
    """

    grid: Grid2D
    u: np.ndarray
    v: np.ndarray
    face_u: np.ndarray
    face_v: np.ndarray
    source: str
    is_incompressible: bool
    name: str = ""
    stream: StreamFunction | None = None
    metadata: dict = field(default_factory=dict)

    def divergence(self) -> np.ndarray:
        """Face-flux divergence at every node (zero on the outer ring)."""
        g = self.grid
        div = np.zeros(g.shape)
        div[1:-1, 1:-1] = (self.face_u[1:, 1:-1] - self.face_u[:-1, 1:-1]) / g.hx + (
            self.face_v[1:-1, 1:] - self.face_v[1:-1, :-1]
        ) / g.hy
        return div

    def max_speed(self) -> float:
        return float(np.max(np.hypot(self.u, self.v)))

    def check_divergence(self, rtol: float = DIVERGENCE_RTOL) -> float:
        div = np.abs(self.divergence()) * self.grid.interior_mask
        worst = float(div.max())
        scale = max(self.max_speed(), np.abs(self.face_u).max(), np.abs(self.face_v).max())
        if worst > rtol * max(scale, 1e-300):
            i, j = np.unravel_index(np.argmax(div), div.shape)
            x, y = self.grid.x[i], self.grid.y[j]
            raise FlowError(
                f"flow {self.name or self.source!r} is not discretely divergence-free: "
                f"|div|={worst:.3e} at node ({i}, {j}) = ({x:.4g}, {y:.4g})"
            )
        return worst

    def scaled(self, factor: float) -> "FlowField":
        return FlowField(
            self.grid, factor * self.u, factor * self.v, factor * self.face_u, factor * self.face_v,
            self.source, self.is_incompressible, self.name, self.stream, dict(self.metadata),
        )


def zero_flow(grid: Grid2D) -> FlowField:
    nx, ny = grid.nx, grid.ny
    return FlowField(
        grid, np.zeros(grid.shape), np.zeros(grid.shape), np.zeros((nx, ny + 1)), np.zeros((nx + 1, ny)),
        source="formula", is_incompressible=True, name="zero",
    )


def _boundary_spread(stream: StreamFunction, grid: Grid2D) -> float:
    # Dirichlet nodes that touch the unknowns sample the physical boundary
    m = grid.interior_mask
    near = np.zeros_like(m)
    near[:-1, :] |= m[1:, :]
    near[1:, :] |= m[:-1, :]
    near[:, :-1] |= m[:, 1:]
    near[:, 1:] |= m[:, :-1]
    near &= ~m
    X, Y = grid.mesh()
    vals = stream.eval(X[near], Y[near])
    return float(vals.max() - vals.min()) if vals.size else 0.0


def flow_from_stream_function(stream: StreamFunction, grid: Grid2D) -> FlowField:
    X, Y = grid.mesh()
    u, v = stream.velocity(X, Y)
    hx, hy = grid.hx, grid.hy
    # Psi on the dual lattice: corner (a, b) sits at (x_{a-1} + hx/2, y_{b-1} + hy/2)
    cx = grid.origin[0] + hx * (np.arange(grid.nx + 2) - 0.5)
    cy = grid.origin[1] + hy * (np.arange(grid.ny + 2) - 0.5)
    CX, CY = np.meshgrid(cx, cy, indexing="ij")
    C = stream.eval(CX, CY)
    face_u = (C[1:-1, 1:] - C[1:-1, :-1]) / hy
    face_v = -(C[1:, 1:-1] - C[:-1, 1:-1]) / hx
    spread = _boundary_spread(stream, grid)
    psi_scale = float(np.abs(C).max()) or 1.0
    meta = {
        "psi_boundary_spread": spread,
        # u.n = 0 iff Psi is constant along the boundary; advisory only
        "no_flux_boundary": bool(spread <= 1e-8 * psi_scale),
    }
    flow = FlowField(grid, u, v, face_u, face_v, "stream", True, stream.name, stream, meta)
    flow.check_divergence()
    return flow


def flow_from_formula(
    velocity: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]],
    grid: Grid2D,
    is_incompressible: bool,
    name: str = "formula",
    params: dict | None = None,
) -> FlowField:
    """Velocity given directly; face values are sampled at face midpoints."""
    X, Y = grid.mesh()
    u, v = (np.asarray(c, float) * np.ones(grid.shape) for c in velocity(X, Y))
    xf = grid.x[:-1] + 0.5 * grid.hx
    XF, YF = np.meshgrid(xf, grid.y, indexing="ij")
    face_u = np.asarray(velocity(XF, YF)[0], float) * np.ones(XF.shape)
    yf = grid.y[:-1] + 0.5 * grid.hy
    XG, YG = np.meshgrid(grid.x, yf, indexing="ij")
    face_v = np.asarray(velocity(XG, YG)[1], float) * np.ones(XG.shape)
    meta = {"params": dict(params or {})}
    flow = FlowField(grid, u, v, face_u, face_v, "formula", is_incompressible, name, None, meta)
    if is_incompressible:
        flow.check_divergence()
    return flow


# --------------------------------------------------------------------------
# catalog

def sinsin_stream(period: float = 1.0, amplitude: float = 1.0) -> StreamFunction:
    k = np.pi / period

    def f(x, y):
        return amplitude * np.sin(k * x) * np.sin(k * y)

    def grad(x, y):
        return amplitude * k * np.cos(k * x) * np.sin(k * y), amplitude * k * np.sin(k * x) * np.cos(k * y)

    def lap(x, y):
        return -2 * k * k * f(x, y)

    return StreamFunction("sinsin", f, grad, lap, {"period": period, "amplitude": amplitude})


def fig2_stream(Lx: float = 2 * np.pi, Ly: float = 2 * np.pi, origin=(0.0, 0.0)) -> StreamFunction:
    """Four-cell stream function sin(2pi((2X/3+1)^3/8+1)) sin(2pi((Y+1)^2/4+1)).

    The formula has exactly four cells on X in [-1.5, 1.5], Y in [-1, 1];
    that box is mapped affinely onto ``[x0, x0+Lx] x [y0, y0+Ly]``.
    """
    x0, y0 = origin
    ax, ay = 3.0 / Lx, 2.0 / Ly
    tp = 2 * np.pi

    def X(x):
        return -1.5 + ax * (x - x0)

    def Y(y):
        return -1.0 + ay * (y - y0)

    def a(x):
        return tp * ((2 * X(x) / 3 + 1) ** 3 / 8 + 1)

    def da(x):
        return tp * 3 * (2 * X(x) / 3 + 1) ** 2 / 8 * (2 / 3) * ax

    def d2a(x):
        return tp * 6 * (2 * X(x) / 3 + 1) / 8 * (2 / 3) ** 2 * ax**2

    def b(y):
        return tp * ((Y(y) + 1) ** 2 / 4 + 1)

    def db(y):
        return tp * (Y(y) + 1) / 2 * ay

    def d2b(y):
        return tp * 0.5 * ay**2 * np.ones_like(y)

    def f(x, y):
        return np.sin(a(x)) * np.sin(b(y))

    def grad(x, y):
        return np.cos(a(x)) * da(x) * np.sin(b(y)), np.sin(a(x)) * np.cos(b(y)) * db(y)

    def lap(x, y):
        fxx = (-np.sin(a(x)) * da(x) ** 2 + np.cos(a(x)) * d2a(x)) * np.sin(b(y))
        fyy = np.sin(a(x)) * (-np.sin(b(y)) * db(y) ** 2 + np.cos(b(y)) * d2b(y))
        return fxx + fyy

    return StreamFunction("fig2", f, grad, lap, {"Lx": Lx, "Ly": Ly, "origin": tuple(origin)})


def fig2_cell_centers(Lx: float = 2 * np.pi, Ly: float = 2 * np.pi, origin=(0.0, 0.0)) -> list[tuple[float, float]]:
    """Points inside each of the four fig2 cells (used as seeds)."""
    # zero lines of the reference formula: X = 1.5 (4^(1/3) - 1), Y = sqrt(2) - 1
    xs = 1.5 * (4 ** (1 / 3) - 1)
    ys = np.sqrt(2) - 1
    xm = [(-1.5 + xs) / 2, (xs + 1.5) / 2]
    ym = [(-1.0 + ys) / 2, (ys + 1.0) / 2]
    out = []
    for X in xm:
        for Y in ym:
            out.append((float(origin[0] + (X + 1.5) * Lx / 3.0), float(origin[1] + (Y + 1.0) * Ly / 2.0)))
    return out


def paraboloid_stream(H0: float = 1.0, R: float = 1.0, center=(0.0, 0.0)) -> StreamFunction:
    cx, cy = center

    def f(x, y):
        return H0 * (1 - ((x - cx) ** 2 + (y - cy) ** 2) / R**2)

    def grad(x, y):
        return -2 * H0 * (x - cx) / R**2, -2 * H0 * (y - cy) / R**2

    def lap(x, y):
        return -4 * H0 / R**2 * np.ones_like(x)

    return StreamFunction("paraboloid", f, grad, lap, {"H0": H0, "R": R, "center": tuple(center)})


def shear_stream(c: float = 1.0) -> StreamFunction:
    def f(x, y):
        return c * y + 0 * x

    def grad(x, y):
        return 0 * x, c + 0 * y

    def lap(x, y):
        return 0 * x

    return StreamFunction("shear", f, grad, lap, {"c": c})


STREAM_FUNCTIONS = {
    "sinsin": sinsin_stream,
    "fig2": fig2_stream,
    "paraboloid": paraboloid_stream,
    "shear": shear_stream,
}

FLOW_NAMES = ("sinsin", "fig2", "radial", "shear", "paraboloid", "zero")


def stream_function(name: str, params: dict | None = None) -> StreamFunction:
    try:
        factory = STREAM_FUNCTIONS[name]
    except KeyError:
        raise FlowError(f"unknown stream function {name!r}; known: {sorted(STREAM_FUNCTIONS)}") from None
    return factory(**(params or {}))


def builtin_flow(name: str, grid: Grid2D, params: dict | None = None) -> FlowField:
    """Catalog flow by name.

    ``radial`` is ``u = 4 n x`` (compressible); every other entry is
    stream-function derived.
    """
    params = dict(params or {})
    if name == "radial":
        n = float(params.get("n", 1.0))
        cx, cy = params.get("center", (0.0, 0.0))

        def vel(x, y):
            return 4 * n * (x - cx), 4 * n * (y - cy)

        return flow_from_formula(vel, grid, False, "radial", params)
    if name == "zero":
        return zero_flow(grid)
    if name not in STREAM_FUNCTIONS:
        raise FlowError(f"unknown flow {name!r}; known: {list(FLOW_NAMES)}")
    return flow_from_stream_function(stream_function(name, params), grid)
