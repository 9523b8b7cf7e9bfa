"""Experiment configuration: a flat sectioned ``key = value`` text format.

Example::

    [experiment]
    name = fig2

    [flow]
    name = fig2

    [nonlinearity]
    name = exponential

    [grid]
    kind = rectangle
    Lx = 6.283185307179586
    Ly = 6.283185307179586
    resolutions = 257

    [sweep]
    A = 64, 128, 256, 512

    [cells]
    seeds = 2.49, 2.22; 2.49, 5.36

Unknown keys in ``[flow]``, ``[nonlinearity]`` and ``[grid]`` are parameters
of the named catalog entry; ``[options]`` holds experiment-specific knobs.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, replace

from ..flows import FLOW_NAMES
from ..nonlinearity import NONLINEARITY_NAMES

EXPERIMENTS = ("gelfand", "bounds", "fig2", "equidist", "stratify", "compressible", "shear_growth")


class ConfigError(ValueError):
    """Validation failure; ``path`` names the offending field as ``section.key``."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    flow: str = "zero"
    flow_params: dict = field(default_factory=dict)
    nonlinearity: str = "exponential"
    nonlinearity_params: dict = field(default_factory=dict)
    domain: dict = field(default_factory=lambda: {"kind": "rectangle", "Lx": 1.0, "Ly": 1.0})
    resolutions: tuple = (65,)
    A_list: tuple = (0.0,)
    seeds: tuple = ()
    rtol: float = 1e-3
    tol_inc: float = 1e-10
    max_iter: int = 10_000
    options: dict = field(default_factory=dict)
    out_dir: str = "results"

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment.name", f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.flow not in FLOW_NAMES:
            raise ConfigError("flow.name", f"unknown flow {self.flow!r}; expected one of {FLOW_NAMES}")
        if self.nonlinearity not in NONLINEARITY_NAMES:
            raise ConfigError("nonlinearity.name", f"unknown nonlinearity {self.nonlinearity!r}")
        if self.nonlinearity == "power" and not self.nonlinearity_params.get("m", 2.0) > 1:
            raise ConfigError("nonlinearity.m", "power nonlinearity needs m > 1")
        if self.domain.get("kind") not in ("rectangle", "disk", "union"):
            raise ConfigError("grid.kind", f"unknown domain kind {self.domain.get('kind')!r}")
        if not self.resolutions:
            raise ConfigError("grid.resolutions", "at least one resolution is required")
        for r in self.resolutions:
            if r < 8:
                raise ConfigError("grid.resolutions", f"resolution {r} below the minimum of 8")
        if any(a < 0 or not math.isfinite(a) for a in self.A_list):
            raise ConfigError("sweep.A", "amplitudes must be finite and non-negative")
        if any(b <= a for a, b in zip(self.A_list, self.A_list[1:])):
            raise ConfigError("sweep.A", "amplitude list must be strictly increasing")
        if not 0 < self.rtol < 1:
            raise ConfigError("tolerances.rtol", "rtol must lie in (0, 1)")
        if not self.tol_inc > 0:
            raise ConfigError("tolerances.tol_inc", "tol_inc must be positive")
        if self.max_iter < 1:
            raise ConfigError("tolerances.max_iter", "max_iter must be positive")
        for k, s in enumerate(self.seeds):
            if len(s) != 2:
                raise ConfigError("cells.seeds", f"seed {k} must be an (x, y) pair")
        return self


def _num(text: str, path: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(path, f"expected a number, got {text!r}") from None


def _numbers(text: str, path: str) -> tuple:
    return tuple(_num(t.strip(), path) for t in text.split(",") if t.strip())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _scalar(text: str):
    t = text.strip()
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


_KNOWN = {
    "experiment": {"name", "out_dir"},
    "flow": None,
    "nonlinearity": None,
    "grid": None,
    "sweep": {"A"},
    "cells": {"seeds"},
    "tolerances": {"rtol", "tol_inc", "max_iter"},
    "options": None,
}


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep parameter case (Lx, Ly)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc)) from None
    for sec in cp.sections():
        if sec not in _KNOWN:
            raise ConfigError(sec, "unknown section")
        allowed = _KNOWN[sec]
        if allowed is not None:
            for key in cp[sec]:
                if key not in allowed:
                    raise ConfigError(f"{sec}.{key}", "unknown key")
    if not cp.has_option("experiment", "name"):
        raise ConfigError("experiment.name", "missing")
    kw: dict = {"experiment": cp["experiment"]["name"].strip()}
    if cp.has_option("experiment", "out_dir"):
        kw["out_dir"] = cp["experiment"]["out_dir"].strip()
    if cp.has_section("flow"):
        sec = dict(cp["flow"])
        kw["flow"] = sec.pop("name", "zero").strip()
        kw["flow_params"] = {k: _num(v, f"flow.{k}") for k, v in sec.items()}
    if cp.has_section("nonlinearity"):
        sec = dict(cp["nonlinearity"])
        kw["nonlinearity"] = sec.pop("name", "exponential").strip()
        kw["nonlinearity_params"] = {k: _num(v, f"nonlinearity.{k}") for k, v in sec.items()}
    if cp.has_section("grid"):
        sec = dict(cp["grid"])
        if "resolutions" in sec:
            kw["resolutions"] = tuple(int(r) for r in _numbers(sec.pop("resolutions"), "grid.resolutions"))
        dom = {"kind": sec.pop("kind", "rectangle").strip()}
        for k, v in sec.items():
            if k == "rectangles":
                boxes = [_numbers(b, "grid.rectangles") for b in v.split(";") if b.strip()]
                if any(len(b) != 4 for b in boxes):
                    raise ConfigError("grid.rectangles", "each rectangle needs x0, y0, x1, y1")
                dom[k] = tuple(boxes)
            elif k in ("origin", "center"):
                dom[k] = _numbers(v, f"grid.{k}")
            else:
                dom[k] = _num(v, f"grid.{k}")
        kw["domain"] = dom
    if cp.has_option("sweep", "A"):
        kw["A_list"] = _numbers(cp["sweep"]["A"], "sweep.A")
    if cp.has_option("cells", "seeds"):
        kw["seeds"] = tuple(_numbers(s, "cells.seeds") for s in cp["cells"]["seeds"].split(";") if s.strip())
    if cp.has_section("tolerances"):
        t = cp["tolerances"]
        if "rtol" in t:
            kw["rtol"] = _num(t["rtol"], "tolerances.rtol")
        if "tol_inc" in t:
            kw["tol_inc"] = _num(t["tol_inc"], "tolerances.tol_inc")
        if "max_iter" in t:
            kw["max_iter"] = int(_num(t["max_iter"], "tolerances.max_iter"))
    if cp.has_section("options"):
        kw["options"] = {k: _scalar(v) for k, v in cp["options"].items()}
    return ExperimentConfig(**kw).validate()


def serialize_config(cfg: ExperimentConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["experiment"] = {"name": cfg.experiment, "out_dir": cfg.out_dir}
    cp["flow"] = {"name": cfg.flow, **{k: _fmt(float(v)) for k, v in cfg.flow_params.items()}}
    cp["nonlinearity"] = {"name": cfg.nonlinearity, **{k: _fmt(float(v)) for k, v in cfg.nonlinearity_params.items()}}
    grid = {"kind": cfg.domain["kind"], "resolutions": ", ".join(str(int(r)) for r in cfg.resolutions)}
    for k, v in cfg.domain.items():
        if k == "kind":
            continue
        if k == "rectangles":
            grid[k] = "; ".join(", ".join(_fmt(float(x)) for x in b) for b in v)
        elif k in ("origin", "center"):
            grid[k] = ", ".join(_fmt(float(x)) for x in v)
        else:
            grid[k] = _fmt(float(v))
    cp["grid"] = grid
    cp["sweep"] = {"A": ", ".join(_fmt(float(a)) for a in cfg.A_list)}
    if cfg.seeds:
        cp["cells"] = {"seeds": "; ".join(", ".join(_fmt(float(x)) for x in s) for s in cfg.seeds)}
    cp["tolerances"] = {"rtol": _fmt(cfg.rtol), "tol_inc": _fmt(cfg.tol_inc), "max_iter": str(cfg.max_iter)}
    if cfg.options:
        cp["options"] = {k: _fmt(v) for k, v in cfg.options.items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def normalized(cfg: ExperimentConfig) -> ExperimentConfig:
    """Same config with every numeric field cast to its canonical type (for round-trip comparisons)."""
    return replace(
        cfg,
        flow_params={k: float(v) for k, v in cfg.flow_params.items()},
        nonlinearity_params={k: float(v) for k, v in cfg.nonlinearity_params.items()},
        resolutions=tuple(int(r) for r in cfg.resolutions),
        A_list=tuple(float(a) for a in cfg.A_list),
        seeds=tuple(tuple(float(x) for x in s) for s in cfg.seeds),
    )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def load_seeds(path) -> tuple:
    """Seed file: one ``x, y`` pair per line, ``#`` comments allowed."""
    seeds = []
    with open(path) as fh:
        for k, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            pair = _numbers(line.replace(" ", ",") if "," not in line else line, f"seed-cells:{k}")
            if len(pair) != 2:
                raise ConfigError(f"seed-cells:{k}", "expected 'x, y'")
            seeds.append(pair)
    return tuple(seeds)
