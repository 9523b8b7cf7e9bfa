"""Reaction terms g(s) and the integral transform h(s) = int_0^s ds'/g(s').

Catalog entries carry closed forms for h and its inverse.  A user-supplied
g falls back to adaptive quadrature and bracketed root finding.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize


class NonlinearityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    name: str
    g: Callable[[np.ndarray], np.ndarray]
    dg: Callable[[np.ndarray], np.ndarray]
    h_func: Callable | None = None
    h_inv_func: Callable | None = None
    h_infinity: float = np.nan
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.h_infinity):
            with warnings.catch_warnings(), np.errstate(over="ignore"):
                # a quadrature warning here means the tail does not settle
                warnings.simplefilter("error", integrate.IntegrationWarning)
                try:
                    val, _ = integrate.quad(lambda s: 1.0 / self.g(s), 0.0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
                except integrate.IntegrationWarning:
                    val = np.inf
            if not np.isfinite(val):
                raise NonlinearityError(f"{self.name}: int_0^inf ds/g(s) diverges")
            object.__setattr__(self, "h_infinity", float(val))
        self.validate()

    @property
    def g0(self) -> float:
        return float(self.g(0.0))

    @property
    def dg0(self) -> float:
        return float(self.dg(0.0))

    def validate(self, s_max: float = 100.0, n: int = 2001):
        s = np.linspace(0.0, s_max, n)
        gs = np.asarray(self.g(s), float)
        if not gs[0] > 0:
            raise NonlinearityError(f"{self.name}: g(0) must be positive")
        if np.any(np.asarray(self.dg(s)) < 0):
            raise NonlinearityError(f"{self.name}: g must be non-decreasing")
        second = gs[2:] - 2 * gs[1:-1] + gs[:-2]
        if np.any(second < -1e-10 * np.abs(gs[1:-1])):
            raise NonlinearityError(f"{self.name}: g is not convex on [0, {s_max}]")
        if not (self.h_infinity > 0 and np.isfinite(self.h_infinity)):
            raise NonlinearityError(f"{self.name}: h(infinity) must be finite")

    def h(self, s):
        s = np.asarray(s, float)
        if self.h_func is not None:
            return self.h_func(s)
        out = np.vectorize(lambda t: integrate.quad(lambda r: 1.0 / self.g(r), 0.0, t, epsabs=1e-14, epsrel=1e-13)[0])(s)
        return out if out.ndim else float(out)

    def h_inv(self, y):
        y = np.asarray(y, float)
        if np.any((y < 0) | (y > self.h_infinity)):
            raise NonlinearityError("h^{-1} is defined on [0, h_infinity]")
        # h(s) rounds to h_infinity for large s; map that value to +inf
        top = y == self.h_infinity
        if self.h_inv_func is not None:
            with np.errstate(divide="ignore"):
                out = np.where(top, np.inf, self.h_inv_func(np.where(top, 0.0, y)))
        else:
            out = np.where(top, np.inf, np.vectorize(self._h_inv_scalar)(np.where(top, 0.0, y)))
        return out if out.ndim else float(out)

    def _h_inv_scalar(self, y: float) -> float:
        if y == 0:
            return 0.0
        hi = 1.0
        while self.h(hi) < y:
            hi *= 2.0
            if hi > 1e12:
                raise NonlinearityError("h^{-1} bracket failure")
        return optimize.brentq(lambda s: self.h(s) - y, 0.0, hi, xtol=1e-12, rtol=1e-14)

    def doubling_point(self) -> float:
        """The s* > 0 with g(s*) = 2 g(0)."""
        target = 2 * self.g0
        hi = 1.0
        while self.g(hi) < target:
            hi *= 2.0
        return optimize.brentq(lambda s: float(self.g(s)) - target, 0.0, hi, xtol=1e-14, rtol=1e-15)


def exponential() -> Nonlinearity:
    return Nonlinearity(
        "exponential",
        np.exp,
        np.exp,
        h_func=lambda s: -np.expm1(-s),
        h_inv_func=lambda y: -np.log1p(-y),
        h_infinity=1.0,
    )


def power(m: float = 2.0) -> Nonlinearity:
    m = float(m)
    if m <= 1:
        raise NonlinearityError(f"power nonlinearity needs m > 1 (int ds/g must converge), got m={m}")
    k = m - 1.0
    return Nonlinearity(
        "power",
        lambda s: (1.0 + np.asarray(s, float)) ** m,
        lambda s: m * (1.0 + np.asarray(s, float)) ** k,
        h_func=lambda s: (1.0 - (1.0 + s) ** (-k)) / k,
        h_inv_func=lambda y: (1.0 - k * y) ** (-1.0 / k) - 1.0,
        h_infinity=1.0 / k,
        params={"m": m},
    )


def custom(name: str, g: Callable, dg: Callable, **params) -> Nonlinearity:
    return Nonlinearity(name, g, dg, params=params)


_CATALOG = {"exponential": exponential, "power": power}
NONLINEARITY_NAMES = tuple(_CATALOG)


def nonlinearity(name: str, params: dict | None = None) -> Nonlinearity:
    try:
        factory = _CATALOG[name]
    except KeyError:
        raise NonlinearityError(f"unknown nonlinearity {name!r}; known: {sorted(_CATALOG)}") from None
    return factory(**(params or {}))


def phi_transform(g: Nonlinearity, lambda0: float, lambda1: float, s):
    """Rescaled inverse Phi(s) = h^{-1}((lambda0/lambda1) h(s)).

    Bounded by ``h^{-1}((lambda0/lambda1) h_infinity)``; see
    :func:`phi_transform_bound`.
    """
    if not (0 < lambda0 < lambda1):
        raise NonlinearityError("need 0 < lambda0 < lambda1")
    s = np.asarray(s, float)
    if np.any(s < 0):
        raise NonlinearityError("Phi is defined for s >= 0")
    return g.h_inv((lambda0 / lambda1) * g.h(s))


def phi_transform_bound(g: Nonlinearity, ratio: float) -> float:
    return float(g.h_inv(ratio * g.h_infinity))


def uniform_bound_constant(g: Nonlinearity, delta: float) -> float:
    """K(delta) = h^{-1}(((1-delta)/(1-delta/3)) h_infinity)."""
    if not 0 < delta < 1:
        raise NonlinearityError("delta must lie in (0, 1)")
    return phi_transform_bound(g, (1 - delta) / (1 - delta / 3))
