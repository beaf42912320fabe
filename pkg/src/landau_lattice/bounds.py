"""Numerical verification of the kernel inequalities on fixed grids.

Each check evaluates both sides of an inequality at every node of a grid
and records the worst *relative* margin, ``(required - other) / scale``
where ``scale`` is the larger modulus of the two sides.  Relative margins
keep the ``>= -1e-12`` acceptance threshold meaningful for kernels that
are exponentially small.

Grids ship as versioned JSON fixtures in ``landau_lattice/fixtures``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Iterable

from .errors import DomainError
from .green import (
    dq_reg_minus_dq0,
    f_kernel,
    f_kernel2,
    free_green_radial,
    heat_kernel,
    landau_green,
    green2,
    q_reg_minus_q0,
)
from .specfun import bessel_k

__all__ = [
    "BOUND_IDS",
    "MARGIN_TOL",
    "BoundReport",
    "a_lower_bound_check",
    "load_grid",
    "verify_bound",
]

MARGIN_TOL = 1e-12
FOUR_PI = 4.0 * math.pi


@dataclass
class BoundReport:
    lemma: str
    grid: dict
    worst_margin: float
    passed: bool
    nodes: int = 0
    worst_node: dict = field(default_factory=dict)

    @property
    def pass_(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        return {
            "lemma": self.lemma,
            "grid": self.grid,
            "worst_margin": self.worst_margin,
            "pass": self.passed,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _rel(required: float, other: float) -> float:
    """Relative margin of ``other <= required`` (both real)."""
    scale = max(abs(required), abs(other))
    if scale == 0.0:
        return 0.0
    return (required - other) / scale


def _z(value) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


def _nodes(grid: dict, keys: Iterable[str]):
    lists = [grid[k] for k in keys]
    for combo in itertools.product(*lists):
        yield dict(zip(keys, combo))


def _point(r: float):
    # Separation along a diagonal so the gauge phase is non-trivial.
    return (0.3, -0.2), (0.3 + r / math.sqrt(2.0), -0.2 + r / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# individual inequalities; each yields (margin, node)


def _heat(grid):
    for node in _nodes(grid, ("t", "r", "h")):
        t, r, h = node["t"], node["r"], node["h"]
        if t <= 0 or h < 0 or r < 0:
            raise DomainError(f"heat bound needs t > 0, h >= 0, r >= 0: {node}")
        x, y = _point(r)
        ph = abs(heat_kernel(x, y, t, h))
        p0 = abs(heat_kernel(x, y, t, 0.0))
        lower = math.exp(-h * t - h * r * r / 4.0) * p0
        yield _rel(p0, ph), dict(node, side="upper")
        yield _rel(ph, lower), dict(node, side="lower")


def _c6(grid):
    for node in _nodes(grid, ("z", "r", "h")):
        z, r, h = float(node["z"]), node["r"], node["h"]
        if not z < h or r <= 0 or h <= 0:
            raise DomainError(f"lower Green bound needs real z < h, r > 0, h > 0: {node}")
        x, y = _point(r)
        damp = math.exp(-h * r * r / 4.0)
        g = abs(landau_green(x, y, z, h))
        g0 = free_green_radial(1, r, z - h).real * damp
        yield _rel(g, g0), dict(node, order=1)
        g2 = abs(green2(x, y, z, h))
        g02 = free_green_radial(2, r, z - h).real * damp
        yield _rel(g2, g02), dict(node, order=2)


def _l7(grid):
    for node in _nodes(grid, ("z", "r", "h")):
        z, r, h = _z(node["z"]), node["r"], node["h"]
        if not z.real < 0 or r <= 0 or h <= 0:
            raise DomainError(f"difference bound needs Re z < 0, r > 0, h > 0: {node}")
        x, y = _point(r)
        damp = math.exp(-h * r * r / 4.0)
        for order, fk in ((1, f_kernel), (2, f_kernel2)):
            diff = abs(fk(x, y, z, h) - free_green_radial(order, r, z))
            bound = (
                free_green_radial(order, r, z.real).real
                - free_green_radial(order, r, z.real - h).real * damp
            )
            yield _rel(bound, diff), dict(node, z=str(z), order=order)


def _l8(grid):
    zs = list(grid.get("z", []))
    if "z_range" in grid:
        lo, hi, n = grid["z_range"]
        zs += [lo + (hi - lo) * k / (n - 1) for k in range(n)]
    zs += [_z(v) for v in grid.get("z_complex", [])]
    for z, h in itertools.product(zs, grid["h"]):
        z = complex(z)
        if not z.real < 0 or h <= 0:
            raise DomainError(f"q bound needs Re z < 0, h > 0: z={z}, h={h}")
        node = {"z": str(z), "h": h}
        bound = math.log1p(-h / z.real) / FOUR_PI
        yield _rel(bound, abs(q_reg_minus_q0(z, h))), dict(node, which="q")
        dbound = h / (FOUR_PI * z.real * (z.real - h))
        yield _rel(dbound, abs(dq_reg_minus_dq0(z, h))), dict(node, which="dq")


def _asymptotic(re_z: float, r: float, power: float) -> float:
    """Large-distance envelope of G0 (power 0) or of its z-derivative (power 1)."""
    k = math.sqrt(-re_z)
    if power == 0:
        return (math.pi**2 / (-4.0 * re_z * r * r)) ** 0.25 * math.exp(-k * r) / (2.0 * math.pi)
    return (math.pi**2 * r * r / (-4.0 * re_z**3)) ** 0.25 * math.exp(-k * r) / FOUR_PI


def _l9(grid):
    delta = float(grid.get("delta", 0.0))
    for node in _nodes(grid, ("z", "r", "h")):
        z, r, h = _z(node["z"]), node["r"], node["h"]
        if not z.real < 0 or r <= 0 or h < 0:
            raise DomainError(f"upper Green bound needs Re z < 0, r > 0: {node}")
        x, y = _point(r)
        g = abs(landau_green(x, y, z, h))
        k0 = bessel_k(0, math.sqrt(-z.real) * r).real / (2.0 * math.pi)
        yield _rel(k0, g), dict(node, z=str(z), form="bessel")
        yield _rel((1.0 + delta) * _asymptotic(z.real, r, 0), g), dict(node, z=str(z), form="asymptotic")


def _l10(grid):
    delta = float(grid.get("delta", 0.0))
    for node in _nodes(grid, ("z", "r", "h")):
        z, r, h = _z(node["z"]), node["r"], node["h"]
        if not z.real < 0 or r <= 0 or h < 0:
            raise DomainError(f"derivative bound needs Re z < 0, r > 0: {node}")
        if math.sqrt(-z.real) * r < float(grid.get("min_kr", 0.0)):
            raise DomainError(f"node below the fixture's sqrt(-Re z) r threshold: {node}")
        x, y = _point(r)
        g2 = abs(green2(x, y, z, h)) if h > 0 else abs(free_green_radial(2, r, z))
        k = math.sqrt(-z.real)
        k1 = r * bessel_k(1, k * r).real / (FOUR_PI * k)
        yield _rel(k1, g2), dict(node, z=str(z), form="bessel")
        yield _rel((1.0 + delta) * _asymptotic(z.real, r, 1), g2), dict(node, z=str(z), form="asymptotic")


def _l11(grid):
    c = float(grid["c"])
    z_max = float(grid["z_max"])
    h_max = float(grid["h_max"])
    gamma = float(grid["gamma"])
    for node in _nodes(grid, ("z", "r", "h")):
        z, r, h = _z(node["z"]), node["r"], node["h"]
        if not (z.real <= z_max and abs(z.imag) < gamma and 0 < h <= h_max and r > 0):
            raise DomainError(f"deep lower bound outside its fixture domain: {node}")
        x, y = _point(r)
        g = abs(landau_green(x, y, z, h))
        yield _rel(g, (1.0 - c) * _asymptotic(z.real, r, 0)), dict(node, z=str(z))


_CHECKS: dict[str, Callable] = {
    "L5_heat": _heat,
    "C6_lower": _c6,
    "L7_difference": _l7,
    "L8_q": _l8,
    "L9_upper": _l9,
    "L10_deriv": _l10,
    "L11_lower": _l11,
}
BOUND_IDS = tuple(_CHECKS)


def load_grid(lemma_id: str) -> dict:
    """Shipped fixture grid for ``lemma_id``."""
    if lemma_id not in _CHECKS:
        raise ValueError(f"unknown bound {lemma_id!r}; choose from {', '.join(BOUND_IDS)}")
    text = resources.files("landau_lattice").joinpath("fixtures").joinpath(f"{lemma_id}.json").read_text()
    return json.loads(text)


def verify_bound(lemma_id: str, grid: dict | None = None) -> BoundReport:
    """Evaluate one inequality over ``grid`` (default: the shipped fixture)."""
    if lemma_id not in _CHECKS:
        raise ValueError(f"unknown bound {lemma_id!r}; choose from {', '.join(BOUND_IDS)}")
    if grid is None:
        grid = load_grid(lemma_id)
    worst = math.inf
    worst_node: dict = {}
    count = 0
    for margin, node in _CHECKS[lemma_id](grid):
        count += 1
        if not math.isfinite(margin):
            raise DomainError(f"non-finite margin at {node}")
        if margin < worst:
            worst, worst_node = margin, node
    if count == 0:
        raise DomainError(f"empty grid for {lemma_id}")
    return BoundReport(lemma_id, grid, float(worst), bool(worst >= -MARGIN_TOL), count, worst_node)


def a_lower_bound_check(zs: Iterable[float], hs: Iterable[float]) -> float:
    """Worst relative margin of  a(z, h) >= e^(-h/4) K0(sqrt(h - z)) / 2pi."""
    from .lattice import a_coeff

    worst = math.inf
    for z, h in itertools.product(zs, hs):
        a = complex(a_coeff(z, h)).real
        bound = math.exp(-h / 4.0) * bessel_k(0, math.sqrt(h - z)).real / (2.0 * math.pi)
        worst = min(worst, _rel(a, bound))
    return worst
