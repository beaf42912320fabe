"""Doubly periodic symbols given by finite Fourier series.

A symbol is

    constant + harper * (cos x + cos p) + exp(log_scale) * sum c(m,n) e^{i(m x + n p)}.

The Harper part is kept separate because the effective symbols at deep
energies are cos x + cos p plus a tail far below the double range; the
tail is then stored relative to ``exp(log_scale)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SymbolOverflowError

HARPER_KEYS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass
class FourierSymbol:
    coeffs: dict = field(default_factory=dict)
    constant: complex = 0.0
    cutoff: int = 0
    log_scale: float = 0.0
    harper: float = 0.0
    # decay envelope |c(m,n)| <= exp(log_a - b sqrt(m^2+n^2)) of the full series, as (log_a, b)
    envelope: tuple | None = None

    def __post_init__(self):
        self.coeffs = {(int(m), int(n)): complex(c) for (m, n), c in self.coeffs.items()}
        self.constant = complex(self.constant)
        self.harper = float(self.harper)
        if not self.cutoff:
            keys = list(self.coeffs) + (list(HARPER_KEYS) if self.harper else [])
            self.cutoff = max((abs(m) + abs(n) for m, n in keys), default=0)

    @classmethod
    def harper_symbol(cls, mu: float = 0.0, scale: float = 1.0) -> "FourierSymbol":
        """scale * (cos x + cos p) + mu."""
        return cls({}, constant=mu, cutoff=1, harper=scale)

    def copy(self, **changes) -> "FourierSymbol":
        data = dict(
            coeffs=dict(self.coeffs),
            constant=self.constant,
            cutoff=self.cutoff,
            log_scale=self.log_scale,
            harper=self.harper,
            envelope=self.envelope,
        )
        data.update(changes)
        return FourierSymbol(**data)

    def coefficient(self, m: int, n: int) -> complex:
        """True Fourier coefficient t(m, n) (underflows to 0 for deep tails)."""
        c = self.coeffs.get((m, n), 0j)
        value = 0j
        if c != 0 and self.log_scale > -745:
            value = c * math.exp(self.log_scale)
        if self.harper and (m, n) in HARPER_KEYS:
            value += 0.5 * self.harper
        if (m, n) == (0, 0):
            value += self.constant
        return value

    def log_abs_coefficient(self, m: int, n: int) -> float:
        """log |tail coefficient|, valid at any scale (tail only)."""
        c = self.coeffs.get((m, n), 0j)
        return -math.inf if c == 0 else math.log(abs(c)) + self.log_scale

    def support(self):
        """Sorted indices with a nonzero true coefficient, (0, 0) excluded."""
        keys = {k for k, v in self.coeffs.items() if v != 0}
        if self.harper:
            keys.update(HARPER_KEYS)
        keys.discard((0, 0))
        return sorted(keys)

    def tail_only(self) -> "FourierSymbol":
        """The symbol with its constant and Harper part removed."""
        return self.copy(constant=0.0, harper=0.0)

    def scale_tail(self, factor: float) -> "FourierSymbol":
        return self.copy(log_scale=self.log_scale + math.log(factor))

    # -- checks ----------------------------------------------------------------

    def conjugate_symmetry_defect(self) -> float:
        """max |c(m,n) - conj c(-m,-n)| of the tail in scaled units."""
        worst = 0.0
        for (m, n), c in self.coeffs.items():
            worst = max(worst, abs(c - self.coeffs.get((-m, -n), 0j).conjugate()))
        return worst

    def is_real(self, tol: float = 1e-13) -> bool:
        scale = max((abs(c) for c in self.coeffs.values()), default=1.0)
        return (
            self.conjugate_symmetry_defect() <= tol * max(scale, 1e-300)
            and abs(self.constant.imag) <= tol * max(1.0, abs(self.constant))
        )

    def max_strip(self) -> float:
        """Largest s with the envelope summable on |Im x| + |Im p| < s."""
        if self.envelope is None:
            return math.inf
        return self.envelope[1] / math.sqrt(2.0)

    def fit_envelope(self) -> tuple | None:
        """Decay envelope (log_a, b) read off the stored tail.

        b is the slope of log|c| against sqrt(m^2+n^2) between the innermost
        and outermost stored shells; log_a is then the smallest value with
        every stored coefficient below the envelope.
        """
        pts = [(math.hypot(m, n), self.log_abs_coefficient(m, n)) for (m, n) in self.coeffs]
        pts = [p for p in pts if math.isfinite(p[1])]
        if len(pts) < 2:
            return None
        pts.sort()
        r0, r1 = pts[0][0], pts[-1][0]
        if r1 == r0:
            return None
        inner = max(v for r, v in pts if r == r0)
        outer = max(v for r, v in pts if r == r1)
        b = max((inner - outer) / (r1 - r0), 0.0)
        log_a = max(v + b * r for r, v in pts)
        return (log_a, b)

    # -- evaluation ------------------------------------------------------------

    def dense(self):
        """Tail coefficient array C[m + K, n + K] (scaled units) and K."""
        k = max((max(abs(m), abs(n)) for m, n in self.coeffs), default=0)
        arr = np.zeros((2 * k + 1, 2 * k + 1), dtype=complex)
        for (m, n), c in self.coeffs.items():
            arr[m + k, n + k] = c
        return arr, k

    def evaluate(self, x, p):
        """Symbol value at (possibly complex) points; broadcasts over x and p."""
        x = np.asarray(x, dtype=complex)
        p = np.asarray(p, dtype=complex)
        tail = np.zeros(np.broadcast(x, p).shape, dtype=complex)
        for (m, n), c in self.coeffs.items():
            tail = tail + c * np.exp(1j * (m * x + n * p))
        if self.log_scale > 709 and np.any(tail != 0):
            raise SymbolOverflowError("tail scale exceeds the double range")
        scale = math.exp(self.log_scale) if self.log_scale > -745 else 0.0
        with np.errstate(over="ignore", invalid="ignore"):
            total = self.constant + self.harper * (np.cos(x) + np.cos(p)) + scale * tail
        if not np.all(np.isfinite(total)):
            raise SymbolOverflowError("symbol evaluation overflowed")
        return total

    # -- serialisation ---------------------------------------------------------

    def to_json(self) -> str:
        """JSON with the true coefficients; deep tails add their scaled form."""
        keys = sorted(set(self.coeffs) | (set(HARPER_KEYS) if self.harper else set()))
        rows = []
        for m, n in keys:
            c = self.coefficient(m, n) - (self.constant if (m, n) == (0, 0) else 0)
            rows.append([m, n, float(c.real), float(c.imag)])
        payload = {
            "constant": [self.constant.real, self.constant.imag],
            "coeffs": rows,
            "cutoff": self.cutoff,
        }
        if self.log_scale:
            payload["harper"] = self.harper
            payload["log_scale"] = self.log_scale
            payload["coeffs_scaled"] = [[m, n, c.real, c.imag] for (m, n), c in sorted(self.coeffs.items())]
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "FourierSymbol":
        data = json.loads(text)
        const = data["constant"]
        constant = complex(const[0], const[1]) if isinstance(const, list) else complex(const)
        if "coeffs_scaled" in data:
            coeffs = {(m, n): complex(re, im) for m, n, re, im in data["coeffs_scaled"]}
            return cls(coeffs, constant, data.get("cutoff", 0), data["log_scale"], data.get("harper", 0.0))
        coeffs = {(m, n): complex(re, im) for m, n, re, im in data["coeffs"]}
        return cls(coeffs, constant, data.get("cutoff", 0))


def symbol_eval(sym: FourierSymbol, x, p):
    """Pointwise value of the symbol; real for real arguments and real symbols."""
    budget = float(np.max(np.abs(np.imag(x)))) + float(np.max(np.abs(np.imag(p))))
    if budget >= sym.max_strip():
        raise SymbolOverflowError(
            f"|Im x| + |Im p| = {budget:.3g} exceeds the analyticity strip {sym.max_strip():.3g}"
        )
    return sym.evaluate(x, p)


# ---------------------------------------------------------------------------
# sup-norm of the deviation from cos x + cos p + mu on a complex strip


@dataclass
class EpsilonReport:
    value: float
    log_value: float
    strip: float
    mode: str
    grid: int
    refined_change: float
    accepted: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _diamond(strip: float, per_edge: int):
    """Points on |v| + |w| = strip, corners included."""
    tau = np.linspace(0.0, 1.0, per_edge, endpoint=False)
    pts = []
    for sv, sw in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
        pts.append(np.column_stack([sv * strip * (1.0 - tau), sw * strip * tau]))
    return np.vstack(pts)


def _log_sup(arr: np.ndarray, k: int, strip: float, grid: int, per_edge: int) -> float:
    """log max |sum C[m,n] e^{i(m x + n p)}| over a real grid times the strip boundary.

    The coefficients are renormalised at every imaginary offset so that the
    sum never overflows, whatever the strip width.
    """
    idx = np.arange(-k, k + 1)
    mags = np.abs(arr)
    nz = mags > 0
    if not np.any(nz):
        return -math.inf
    logc = np.full(arr.shape, -np.inf)
    logc[nz] = np.log(mags[nz])
    unit = np.where(nz, arr / np.where(nz, mags, 1.0), 0.0)
    u = 2.0 * np.pi * np.arange(grid) / grid
    eu = np.exp(1j * np.outer(u, idx))
    points = _diamond(strip, per_edge) if strip > 0 else np.zeros((1, 2))
    best = -math.inf
    for v, w in points:
        # |e^{i m (u + i v)}| = e^{-m v}
        weights = logc - idx[:, None] * v - idx[None, :] * w
        shift = float(np.max(weights))
        values = eu @ (unit * np.exp(weights - shift)) @ eu.T
        peak = float(np.max(np.abs(values)))
        if peak > 0:
            best = max(best, shift + math.log(peak))
    return best


def _deviation(sym: FourierSymbol, mu) -> tuple:
    """Dense array and log scale of symbol - (cos x + cos p + mu)."""
    arr, k = sym.dense()
    log_scale = sym.log_scale
    extra = {}
    if sym.harper != 1.0:
        for key in HARPER_KEYS:
            extra[key] = 0.5 * (sym.harper - 1.0)
    const = sym.constant - mu
    if const != 0:
        extra[(0, 0)] = const
    if not extra:
        return arr, k, log_scale
    if not np.any(arr):
        log_scale = 0.0
    elif abs(log_scale) > 700:
        big = max(abs(v) for v in extra.values())
        if log_scale < math.log(big) - 60:
            # the tail is invisible next to an O(1) term at this scale
            arr, k, log_scale = np.zeros((3, 3), dtype=complex), 1, 0.0
        else:
            raise SymbolOverflowError("cannot combine deviation terms at this scale")
    if k < 1:
        arr = np.pad(arr, 1 - k)
        k = 1
    for (m, n), c in extra.items():
        arr[m + k, n + k] += c * math.exp(-log_scale)
    return arr, k, log_scale


def epsilon_estimate(
    sym: FourierSymbol,
    strip: float = 0.5,
    grid: int = 128,
    mu=None,
    self_consistent: bool = False,
    per_edge: int = 8,
) -> EpsilonReport:
    """Sup of |symbol - (cos x + cos p + mu)| over |Im x| + |Im p| <= strip.

    ``mu`` defaults to the symbol's constant.  The grid is refined once (2x
    in every direction) and the estimate accepted when the refinement moves
    it by less than 1%; the larger of the two values is reported.  With
    ``self_consistent=True`` the width is tied to the estimate (strip 1/eps)
    and eps is found by bisection on log eps; ``strip`` is then ignored.
    All values are carried as logarithms, so tails far below the double
    range still compare correctly through ``log_value``.
    """
    mu = sym.constant if mu is None else complex(mu)
    arr, k, log_scale = _deviation(sym, mu)
    limit = sym.max_strip()

    def log_sup(width: float, g: int, pe: int) -> float:
        if width >= limit:
            return math.inf
        return _log_sup(arr, k, width, g, pe) + log_scale

    if not self_consistent:
        if strip < 0:
            raise ValueError("strip width must be nonnegative")
        if strip >= limit:
            raise SymbolOverflowError(f"strip {strip} exceeds the envelope limit {limit:.3g}")
        coarse = log_sup(strip, grid, per_edge)
        fine = log_sup(strip, 2 * grid, 2 * per_edge)
        change = _rel_change(coarse, fine)
        log_eps = max(coarse, fine)
        return EpsilonReport(_exp(log_eps), log_eps, strip, "fixed_strip", grid, change, change < 0.01)

    base = log_sup(0.0, grid, per_edge)
    if base == -math.inf:
        return EpsilonReport(0.0, -math.inf, math.inf, "self_consistent", grid, 0.0, True)

    def residual(ell: float, g: int, pe: int) -> float:
        # positive while eps = e^ell is too small to be self-consistent
        return log_sup(math.exp(-ell), g, pe) - ell

    hi = base + 1.0
    while residual(hi, grid, per_edge) > 0:
        hi += max(1.0, abs(hi))
    lo, step = base - 1.0, 1.0
    while residual(lo, grid, per_edge) <= 0:
        lo -= step
        step *= 2.0
        if step > 1e6:
            raise SymbolOverflowError("self-consistent epsilon bracket failed")

    def solve(g, pe):
        a, b = lo, hi
        for _ in range(200):
            mid = 0.5 * (a + b)
            if residual(mid, g, pe) > 0:
                a = mid
            else:
                b = mid
            if b - a <= 1e-12 * max(1.0, abs(mid)):
                break
        return b

    coarse = solve(grid, per_edge)
    fine = solve(2 * grid, 2 * per_edge)
    change = _rel_change(coarse, fine)
    log_eps = max(coarse, fine)
    return EpsilonReport(
        _exp(log_eps), log_eps, math.exp(-log_eps), "self_consistent", grid, change, change < 0.01
    )


def _exp(log_value: float) -> float:
    if log_value < -745:
        return 0.0
    if log_value > 709:
        return math.inf
    return math.exp(log_value)


def _rel_change(log_a: float, log_b: float) -> float:
    """|b - a| / |b| for values given as logs."""
    if log_a == log_b:
        return 0.0
    if not (math.isfinite(log_a) and math.isfinite(log_b)):
        return math.inf
    return abs(math.expm1(log_a - log_b))
