"""Lattice Krein matrix, effective-symbol coefficients and the perturbed Green function.

Sites are integer pairs (m1, m2).  The Krein matrix Q(z, h) has q(z, h) on
the diagonal and G_h(m, n; z) off it; z lies in the spectrum of the
perturbed operator iff 0 is in the spectrum of Q + 1/alpha.  The effective
symbol's Fourier coefficients are lambda(m, n) = F_h((0,0), (m,n); z), which
depend on m^2 + n^2 only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DivisionDomainError, DomainError, HermiticityError, NearSpectrumError
from .green import (
    _closed_form_log,
    _check_field,
    f_kernel_log,
    gauge_phase,
    landau_green,
    landau_level_guard,
    q_reg,
)
from .logscale import LogScaledComplex
from .symbols import FourierSymbol

COVARIANCE_TOL = 1e-12
NEAR_SPECTRUM = 1e-6


class LatticeSite(NamedTuple):
    m: int
    n: int


def _energy(z, h):
    z = complex(z)
    h = _check_field(h)
    if h == 0:
        raise DomainError("lattice quantities need h > 0")
    if not z.real < h:
        raise DomainError(f"need Re z < h, got z={z}, h={h}")
    landau_level_guard(z, h)
    return z, h


@lru_cache(maxsize=65536)
def _lambda_log_cached(r2: int, z: complex, h: float) -> LogScaledComplex:
    return _closed_form_log(float(r2), z, h)


def lambda_coeff_log(m: int, n: int, z, h: float) -> LogScaledComplex:
    """lambda(m, n; z, h) in log-scaled form."""
    if (m, n) == (0, 0):
        raise DomainError("lambda is not defined at (0, 0)")
    z, h = _energy(z, h)
    return _lambda_log_cached(int(m) ** 2 + int(n) ** 2, z, h)


def lambda_coeff(m: int, n: int, z, h: float) -> complex:
    """Effective-symbol coefficient F_h((0,0), (m,n); z); positive for real z < h."""
    value = lambda_coeff_log(m, n, z, h).to_complex()
    return complex(value.real, 0.0) if complex(z).imag == 0 else value


def a_coeff_log(z, h: float) -> LogScaledComplex:
    return lambda_coeff_log(1, 0, z, h) * 2.0


def a_coeff(z, h: float) -> complex:
    """a(z, h) = 2 lambda(1, 0; z, h)."""
    return 2.0 * lambda_coeff(1, 0, z, h)


# ---------------------------------------------------------------------------
# Krein matrix


def lattice_sites(radius: int) -> np.ndarray:
    """All sites with |m1|, |m2| <= radius, lexicographic order."""
    r = np.arange(-radius, radius + 1)
    m1, m2 = np.meshgrid(r, r, indexing="ij")
    return np.column_stack([m1.ravel(), m2.ravel()])


@dataclass
class KreinMatrix:
    radius: int
    z: complex
    h: float
    sites: np.ndarray
    entries: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.sites)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def covariance_defect(self, max_shift: int | None = None) -> float:
        """max |Q(m+k, n+k) - e^{-i h k2 (m1-n1)} Q(m, n)| over in-range pairs.

        Every shift with |k1|, |k2| <= max_shift is checked; by default all
        shifts for radius <= 3 and |k| <= 2 beyond.
        """
        R = self.radius
        if max_shift is None:
            max_shift = 2 * R if R <= 3 else 2
        side = 2 * R + 1
        grid = self.entries.reshape(side, side, side, side)
        worst = 0.0
        idx = np.arange(-R, R + 1)
        for k1 in range(-max_shift, max_shift + 1):
            for k2 in range(-max_shift, max_shift + 1):
                s1 = slice(max(0, -k1), min(side, side - k1))
                s2 = slice(max(0, -k2), min(side, side - k2))
                t1 = slice(s1.start + k1, s1.stop + k1)
                t2 = slice(s2.start + k2, s2.stop + k2)
                if s1.start >= s1.stop or s2.start >= s2.stop:
                    continue
                base = grid[s1, s2][:, :, s1, s2]
                shifted = grid[t1, t2][:, :, t1, t2]
                m1 = idx[s1]
                diff = m1[:, None, None, None] - m1[None, None, :, None]
                phase = np.exp(-1j * self.h * k2 * diff)
                worst = max(worst, float(np.max(np.abs(shifted - phase * base))))
        return worst

    def check(self) -> None:
        scale = max(1.0, float(np.max(np.abs(self.entries))))
        if self.z.imag == 0 and self.hermiticity_defect() > COVARIANCE_TOL * scale:
            raise HermiticityError(f"Krein matrix not Hermitian (defect {self.hermiticity_defect():.3g})")
        defect = self.covariance_defect(max_shift=1)
        if defect > COVARIANCE_TOL * scale:
            raise HermiticityError(f"magnetic covariance violated (defect {defect:.3g})")


def _offdiag_table(sites: np.ndarray, z: complex, h: float):
    """F_h values indexed by squared separation, for every pair of sites."""
    d = sites[:, None, :] - sites[None, :, :]
    r2 = d[..., 0] ** 2 + d[..., 1] ** 2
    values = {int(v): _lambda_log_cached(int(v), z, h).to_complex() for v in np.unique(r2) if v > 0}
    table = np.zeros(r2.shape, dtype=complex)
    for v, val in values.items():
        table[r2 == v] = val
    return table


def build_q_matrix(z, h: float, radius: int = 8, check: bool = True) -> KreinMatrix:
    """Q(z, h) truncated to sites with |m1|, |m2| <= radius."""
    if radius < 1:
        raise DomainError("radius must be >= 1")
    z, h = _energy(z, h)
    sites = lattice_sites(radius)
    x1, x2 = sites[:, 0].astype(float), sites[:, 1].astype(float)
    # G_h(m, n) = exp(-i h (m1 - n1)(m2 + n2) / 2) F_h(m, n)
    phase = np.exp(-0.5j * h * (x1[:, None] - x1[None, :]) * (x2[:, None] + x2[None, :]))
    entries = phase * _offdiag_table(sites, z, h)
    np.fill_diagonal(entries, q_reg(z, h))
    if z.imag == 0:
        entries = 0.5 * (entries + entries.conj().T)
    krein = KreinMatrix(radius, z, h, sites, entries)
    if check:
        krein.check()
    return krein


class QDistance(NamedTuple):
    value: float
    previous: float
    radius: int


def q_distance(z, h: float, alpha: float, radius: int = 8) -> QDistance:
    """min |eigenvalue of Q + 1/alpha| at ``radius`` and ``radius - 1``.

    Uses a dense LAPACK eigensolver; the difference between the two radii is
    the truncation-stability indicator.
    """
    if alpha == 0:
        raise DomainError("alpha must be nonzero")
    z = complex(z)
    if z.imag != 0:
        raise DomainError("q_distance needs real z")
    values = []
    for r in (radius, radius - 1):
        if r < 1:
            values.append(math.nan)
            continue
        q = build_q_matrix(z, h, r, check=False).entries
        ev = np.linalg.eigvalsh(q)
        values.append(float(np.min(np.abs(ev + 1.0 / alpha))))
    return QDistance(values[0], values[1], radius)


# ---------------------------------------------------------------------------
# effective symbols


def _tail_indices(cutoff: int, start: int = 2):
    return [
        (m, n)
        for m in range(-cutoff, cutoff + 1)
        for n in range(-cutoff, cutoff + 1)
        if start <= abs(m) + abs(n) <= cutoff
    ]


def normalized_tail(z, h: float, cutoff: int = 6) -> FourierSymbol:
    """Coefficients lambda(m, n)/a for 2 <= |m| + |n| <= cutoff, log-scaled.

    The common scale is the coefficient at (1, 1), so tails far below the
    double range are still stored with O(1) mantissas.
    """
    if cutoff < 2:
        raise DomainError("cutoff must be >= 2")
    z, h = _energy(z, h)
    log_a = a_coeff_log(z, h)
    if log_a.is_zero:
        raise DivisionDomainError(f"a(z, h) vanishes at z={z}, h={h}")
    ref = lambda_coeff_log(1, 1, z, h) / log_a
    coeffs = {}
    for m, n in _tail_indices(cutoff):
        ratio = lambda_coeff_log(m, n, z, h) / log_a / ref
        coeffs[(m, n)] = ratio.to_complex()
    if z.imag == 0:
        coeffs = {k: complex(v.real, 0.0) for k, v in coeffs.items()}
    sym = FourierSymbol(coeffs, 0.0, cutoff, ref.log_mag, 0.0)
    if ref.phase != 0:
        sym.coeffs = {k: v * complex(math.cos(ref.phase), math.sin(ref.phase)) for k, v in sym.coeffs.items()}
    sym.envelope = None
    return sym


def m_alpha(z, h: float, alpha: float) -> complex:
    """(q(z, h) + 1/alpha) / a(z, h), evaluated directly."""
    z, h = _energy(z, h)
    a = a_coeff(z, h)
    if abs(a) < 1e-300:
        raise DivisionDomainError(f"a(z, h) = {a} vanishes at z={z}, h={h}")
    value = (q_reg(z, h) + 1.0 / alpha) / a
    return complex(value.real, 0.0) if z.imag == 0 else value


def symbol_m(z, h: float, alpha: float, cutoff: int = 6):
    """(m_alpha, tail) where M_alpha = m_alpha + cos x + cos p + tail."""
    return m_alpha(z, h, alpha), normalized_tail(z, h, cutoff)


def m_symbol(z, h: float, alpha: float, cutoff: int = 6) -> FourierSymbol:
    """The full normalised symbol M_alpha(x, p; z, h)."""
    m, tail = symbol_m(z, h, alpha, cutoff)
    return tail.copy(constant=m, harper=1.0)


def l_symbol(z, h: float, alpha: float, cutoff: int = 6) -> FourierSymbol:
    """L_alpha = q + 1/alpha + sum lambda(m, n) e^{i(m x + n p)}, 1 <= |m|+|n| <= cutoff."""
    z, h = _energy(z, h)
    coeffs = {(m, n): lambda_coeff(m, n, z, h) for m, n in _tail_indices(cutoff, start=1)}
    return FourierSymbol(coeffs, q_reg(z, h) + 1.0 / alpha, cutoff)


def envelope_tail_sum(z, h: float, cutoff: int, reach: int = 200) -> float:
    """Sum over |m| + |n| > cutoff of the Gaussian/confluent bound on lambda/a.

    Each omitted coefficient is bounded by its own closed-form value; the
    sum is over shells up to ``reach``, where the terms are long below
    double precision.  Returns sum |lambda(m,n)| / a over the omitted set.
    """
    z, h = _energy(z, h)
    log_a = a_coeff_log(z, h)
    total = 0.0
    for s in range(cutoff + 1, reach + 1):
        shell = 0.0
        # sites with |m| + |n| = s, grouped by m^2 + n^2
        for m in range(-s, s + 1):
            rest = s - abs(m)
            for n in {rest, -rest}:
                ratio = lambda_coeff_log(m, n, z, h) / log_a
                shell += abs(ratio)
        total += shell
        if shell < 1e-30 * max(total, 1e-300):
            break
    return total


# ---------------------------------------------------------------------------
# perturbed Green function


class PerturbedGreen(NamedTuple):
    value: complex
    delta: float
    distance: float


def _perturbed_at(x, y, z, h, alpha, radius):
    krein = build_q_matrix(z, h, radius, check=False)
    sites = krein.sites
    gx = np.array([landau_green(x, tuple(s), z, h) for s in sites])
    gy = np.array([landau_green(tuple(s), y, z, h) for s in sites])
    mat = alpha * krein.entries + np.eye(len(sites))
    w = np.linalg.solve(mat, gy)
    return landau_green(x, y, z, h) - alpha * np.dot(gx, w), krein


def perturbed_green(x, y, z, h: float, alpha: float, radius: int = 8) -> PerturbedGreen:
    """Green function of the point-perturbed operator from the truncated Krein formula.

    G_{h,alpha}(x, y) = G_h(x, y) - alpha sum_{m,n} [(alpha Q + 1)^{-1}]_{mn} G_h(x, m) G_h(n, y).
    ``delta`` is the change against radius - 1.
    """
    z = complex(z)
    if z.imag != 0 or not z.real < 0:
        raise DomainError("perturbed_green needs real z < 0")
    for p in (x, y):
        if float(p[0]).is_integer() and float(p[1]).is_integer():
            raise DomainError(f"{p} is a lattice point")
    dist = q_distance(z, h, alpha, radius)
    if dist.value < NEAR_SPECTRUM:
        raise NearSpectrumError(f"z={z} is within {dist.value:.3g} of the spectrum of Q + 1/alpha")
    value, _ = _perturbed_at(x, y, z, h, alpha, radius)
    prev, _ = _perturbed_at(x, y, z, h, alpha, radius - 1)
    return PerturbedGreen(complex(value), float(abs(value - prev)), dist.value)


__all__ = [
    "KreinMatrix",
    "LatticeSite",
    "PerturbedGreen",
    "QDistance",
    "a_coeff",
    "a_coeff_log",
    "build_q_matrix",
    "envelope_tail_sum",
    "f_kernel_log",
    "gauge_phase",
    "l_symbol",
    "lambda_coeff",
    "lambda_coeff_log",
    "lattice_sites",
    "m_alpha",
    "m_symbol",
    "normalized_tail",
    "perturbed_green",
    "q_distance",
    "symbol_m",
]
