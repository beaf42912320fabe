"""The nonlinear spectral problem and the negative spectrum of the perturbed operator.

Energies are parametrised by beta through q0(z) + 1/alpha = beta, i.e.

    z(beta, alpha) = -exp(log 4 + 2 psi(1) + 4 pi / alpha - 4 pi beta),

and the equation q(z, h) + 1/alpha = mu a(z, h) becomes the fixed-point
problem beta = Psi(beta) with Psi = (q0 - q)(z(beta)) + mu a(z(beta)).
Everything that needs m_alpha near a solution is evaluated in beta, since
q + 1/alpha = beta + (q - q0) avoids the cancellation of two O(1) terms
against a tiny a(z, h).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NonConvergenceError
from .green import q_reg, q_reg_minus_q0
from .harper import RationalFlux, band_spectrum, merge_bands
from .lattice import a_coeff, lambda_coeff, normalized_tail
from .logscale import LogScaledComplex
from .specfun import EULER_GAMMA
from .symbols import FourierSymbol, epsilon_estimate

Z_OFFSET = math.log(4.0) - 2.0 * EULER_GAMMA  # log 4 + 2 psi(1)
BETA_RADIUS = 1.0 / 16.0
BETA_SLACK = 2.0
DEFAULT_TOL = 1e-10


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 0:
        raise DomainError(f"coupling must be positive, got {alpha}")
    return alpha


def log_minus_z(beta, alpha: float) -> complex:
    """log(-z(beta, alpha)) = log 4 + 2 psi(1) + 4 pi/alpha - 4 pi beta."""
    return Z_OFFSET + 4.0 * math.pi / _check_alpha(alpha) - 4.0 * math.pi * complex(beta)


def z_of_beta_log(beta, alpha: float) -> LogScaledComplex:
    lz = log_minus_z(beta, alpha)
    return LogScaledComplex(lz.real, lz.imag + math.pi)


def z_of_beta(beta, alpha: float):
    """Solution z of q0(z) + 1/alpha = beta.

    Returns a complex number, or a LogScaledComplex when |z| is beyond the
    double range; real beta gives real negative z.
    """
    lz = log_minus_z(beta, alpha)
    if lz.real > 700.0:
        return z_of_beta_log(beta, alpha)
    if complex(beta).imag == 0:
        return complex(-math.exp(lz.real), 0.0)
    return -np.exp(lz)


def _a_value(z, h):
    if isinstance(z, LogScaledComplex):
        # a(z, h) ~ exp(-sqrt|z|) is an exact zero in double precision here
        return 0j
    return a_coeff(z, h)


def psi_map(beta, alpha: float, mu, h: float) -> complex:
    """Psi(beta) = q0(z) - q(z, h) + mu a(z, h) at z = z(beta, alpha)."""
    z = z_of_beta(beta, alpha)
    value = -q_reg_minus_q0(z, h) + complex(mu) * _a_value(z, h)
    if complex(beta).imag == 0 and complex(mu).imag == 0:
        return complex(value.real, 0.0)
    return value


def m_alpha_beta(beta, alpha: float, h: float) -> complex:
    """m_alpha(z(beta), h) computed as (beta + (q - q0)(z)) / a(z)."""
    z = z_of_beta(beta, alpha)
    a = _a_value(z, h)
    if a == 0:
        raise DomainError("a(z, h) underflows; m_alpha is not representable at this energy")
    value = (complex(beta) + q_reg_minus_q0(z, h)) / a
    return complex(value.real, 0.0) if complex(beta).imag == 0 else value


@dataclass
class FixedPointTrace:
    iterates: list
    residual: float
    converged: bool
    contraction_ratio: float
    m_residual: float = math.nan

    def summary(self) -> dict:
        return {
            "iterations": len(self.iterates) - 1,
            "residual": self.residual,
            # not measurable once a(z) underflows
            "m_residual": self.m_residual if math.isfinite(self.m_residual) else None,
            "converged": self.converged,
            "contraction_ratio": self.contraction_ratio,
            "beta": _jsonable(self.iterates[-1]),
        }


def _jsonable(x):
    x = complex(x)
    return x.real if x.imag == 0 else [x.real, x.imag]


def zeta(mu, alpha: float, h: float, tol: float = DEFAULT_TOL, max_iter: int = 200):
    """Fixed point zeta_alpha(mu, h): the z with m_alpha(z, h) = mu.

    Iterates beta_{n+1} = Psi(beta_n) from beta_0 = 0.  Stops when the
    step is below tol |a(z)| (so m_alpha is matched to about tol) or below
    a few ulps of beta.  Returns (zeta, trace).
    """
    mu = complex(mu)
    if abs(mu) > 4.0 + 1e-12:
        raise DomainError(f"|mu| must be <= 4, got {mu}")
    alpha = _check_alpha(alpha)
    bound = BETA_SLACK * BETA_RADIUS
    beta = 0j if mu.imag else 0.0
    iterates = [beta]
    steps = []
    for _ in range(max_iter):
        new = psi_map(beta, alpha, mu, h)
        if mu.imag == 0:
            new = new.real
        step = abs(new - beta)
        steps.append(step)
        iterates.append(new)
        beta = new
        if abs(beta) > bound:
            trace = FixedPointTrace(iterates, step, False, _ratio(steps))
            raise NonConvergenceError(
                f"fixed-point iterate |beta| = {abs(beta):.3g} left the region |beta| <= {bound:.4g} "
                f"(alpha={alpha}, mu={mu}, h={h})",
                trace,
            )
        z = z_of_beta(beta, alpha)
        a = abs(_a_value(z, h))
        floor = 8.0 * np.spacing(max(abs(beta), 1e-300))
        if step <= tol * a or step <= floor:
            break
    else:
        trace = FixedPointTrace(iterates, steps[-1], False, _ratio(steps))
        raise NonConvergenceError(f"fixed point did not converge in {max_iter} iterations", trace)
    residual = abs(beta - psi_map(beta, alpha, mu, h))
    a = abs(_a_value(z, h))
    m_res = residual / a if a > 0 else math.inf
    trace = FixedPointTrace(iterates, residual, True, _ratio(steps), m_res)
    return z, trace


def _ratio(steps) -> float:
    ratios = [steps[i + 1] / steps[i] for i in range(len(steps) - 1) if steps[i] > 0 and steps[i + 1] > 0]
    return max(ratios) if ratios else 0.0


def zeta_beta(mu, alpha, h, tol=DEFAULT_TOL, max_iter=200):
    """Like zeta but returns the fixed point beta itself."""
    _, trace = zeta(mu, alpha, h, tol, max_iter)
    return trace.iterates[-1], trace


# ---------------------------------------------------------------------------
# effective symbol P_alpha(mu)


def p_symbol(mu: float, alpha: float, h: float, cutoff: int = 6, tol: float = DEFAULT_TOL):
    """P_alpha(x, p; mu, h) = mu + cos x + cos p + T_alpha; returns (symbol, trace)."""
    mu = float(mu)
    z, trace = zeta(mu, alpha, h, tol)
    if isinstance(z, LogScaledComplex):
        raise NonConvergenceError(
            f"zeta = -exp({z.log_mag:.6g}) is beyond the double range; the effective symbol is not representable",
            trace,
        )
    tail = normalized_tail(z.real, h, cutoff)
    return tail.copy(constant=mu, harper=1.0), trace


def tail_sup_real(sym: FourierSymbol) -> float:
    """sup over the real torus of the tail (the perturbation of cos x + cos p + mu)."""
    return epsilon_estimate(sym, strip=0.0).value


# ---------------------------------------------------------------------------
# mu-spectrum


@dataclass
class MuSpectrum:
    flux: RationalFlux
    bands: list  # per band index: (mu_lower, mu_upper)
    intervals: list
    touching: list
    traces: list = field(default_factory=list)


class _BandCache:
    """Band edges of cos x + cos p + T_alpha(mu) as a function of mu."""

    def __init__(self, alpha, flux, cutoff, grid, tail_free, tol):
        self.alpha = alpha
        self.flux = flux
        self.cutoff = cutoff
        self.grid = grid
        self.tail_free = tail_free
        self.tol = tol
        self.cache = {}
        self.traces = []

    def bands(self, mu: float):
        if mu not in self.cache:
            if self.tail_free:
                sym = FourierSymbol.harper_symbol()
            else:
                sym, trace = p_symbol(mu, self.alpha, self.flux.h, self.cutoff, self.tol)
                self.traces.append((mu, trace.summary()))
                sym = sym.copy(constant=0.0)
            self.cache[mu] = band_spectrum(sym, self.flux, self.grid).bands
        return self.cache[mu]


def _edge_root(func, guess: float, xtol: float, limit: float = 4.0) -> float | None:
    """Root of an increasing function near ``guess`` by bracketing outward."""
    g0 = func(guess)
    if g0 == 0:
        return guess
    step = max(abs(g0), 1e-3)
    direction = -1.0 if g0 > 0 else 1.0
    a = guess
    for _ in range(60):
        b = min(max(a + direction * step, -limit), limit)
        gb = func(b)
        if gb == 0:
            return b
        if (gb > 0) != (g0 > 0):
            lo, hi = (a, b) if a < b else (b, a)
            return brentq(func, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
        if b in (-limit, limit):
            return None
        a = b
        step *= 2.0
    return None


def mu_spectrum(
    alpha: float,
    flux: RationalFlux,
    refine_tol: float = 1e-10,
    cutoff: int = 6,
    grid=(64, 64),
    tail_free: bool = False,
    tol: float = DEFAULT_TOL,
) -> MuSpectrum:
    """The mu with 0 in the spectrum of the quantized P_alpha(.; mu).

    0 is in mu + band_i(mu) iff mu + lower_i(mu) <= 0 <= mu + upper_i(mu);
    both sides increase with mu, so each band contributes one mu-interval
    whose ends are roots found by bracketing outward from the Harper edges.
    The fixed point is only evaluated near these roots.
    """
    cache = _BandCache(alpha, flux, cutoff, grid, tail_free, tol)
    harper = band_spectrum(FourierSymbol.harper_symbol(), flux, grid).bands
    bands = []
    for i, (h_lo, h_hi) in enumerate(harper):

        def g_hi(mu, i=i):
            return mu + cache.bands(mu)[i][1]

        def g_lo(mu, i=i):
            return mu + cache.bands(mu)[i][0]

        left = _edge_root(g_hi, -h_hi, refine_tol)
        right = _edge_root(g_lo, -h_lo, refine_tol)
        left = -4.0 if left is None else left
        right = 4.0 if right is None else right
        bands.append((float(left), float(right)))
    intervals, touching = merge_bands(bands, 4.0 * refine_tol)
    return MuSpectrum(flux, bands, intervals, touching, cache.traces)


# ---------------------------------------------------------------------------
# negative spectrum, reduced and direct


@dataclass
class SpectrumResult:
    intervals: list
    method: str
    config: dict
    bands: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def measure(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)

    def csv_rows(self) -> list:
        return [(lo, hi, self.method) for lo, hi in self.intervals]


def _clip(intervals, upper):
    out = []
    for lo, hi in intervals:
        hi = min(hi, upper)
        if lo < hi:
            out.append((lo, hi))
    return out


def negative_spectrum(
    alpha: float,
    flux: RationalFlux,
    E0: float = 1.0,
    cutoff: int = 6,
    grid=(64, 64),
    refine_tol: float = 1e-12,
    tail_free: bool = False,
) -> SpectrumResult:
    """z-bands below -E0 from the mu-spectrum mapped through zeta."""
    alpha = _check_alpha(alpha)
    mus = mu_spectrum(alpha, flux, refine_tol, cutoff, grid, tail_free)
    h = flux.h
    bands = []
    traces = []
    for lo, hi in mus.bands:
        z_lo, t_lo = zeta(lo, alpha, h)
        z_hi, t_hi = zeta(hi, alpha, h)
        for z, t in ((z_lo, t_lo), (z_hi, t_hi)):
            if isinstance(z, LogScaledComplex):
                raise NonConvergenceError(
                    f"zeta = -exp({z.log_mag:.6g}) is beyond the double range", t
                )
        traces.extend([t_lo.summary(), t_hi.summary()])
        bands.append((z_lo.real, z_hi.real))
    clipped = _clip(bands, -E0)
    intervals, touching = merge_bands(clipped, 0.0)
    config = {
        "alpha": alpha,
        "flux": [flux.p, flux.q],
        "E0": E0,
        "cutoff": cutoff,
        "grid": list(grid),
        "refine_tol": refine_tol,
        "tail_free": tail_free,
    }
    diag = {"mu_bands": mus.bands, "mu_intervals": mus.intervals, "zeta_traces": traces}
    return SpectrumResult(intervals, "reduced", config, bands, diag)


def q_symbol(z: float, h: float, alpha: float, radius: int = 8) -> FourierSymbol:
    """L_alpha(z) = q + 1/alpha + sum lambda(m, n) e^{i(m x + n p)} over 0 < max(|m|, |n|) <= radius."""
    coeffs = {
        (m, n): lambda_coeff(m, n, z, h).real
        for m in range(-radius, radius + 1)
        for n in range(-radius, radius + 1)
        if (m, n) != (0, 0)
    }
    return FourierSymbol(coeffs, q_reg(z, h).real + 1.0 / alpha, 2 * radius)


def direct_negative_spectrum(
    alpha: float,
    flux: RationalFlux,
    E0: float = 1.0,
    z_min: float | None = None,
    n_z: int = 48,
    radius: int = 8,
    grid=(64, 64),
    xtol: float = 1e-12,
) -> SpectrumResult:
    """z-bands below -E0 from 0 in spec(Q(z) + 1/alpha), scanned in z.

    The spectrum of the covariant operator Q(z) + 1/alpha is computed from
    its Bloch fibers with the coefficients Q((0,0), (m,n)) kept for
    max(|m|, |n|) <= radius.  Its band edges increase with z, so band i
    contributes [z: upper_i(z) = 0, z: lower_i(z) = 0].  Roots are
    bracketed on a logarithmic z grid and refined with brentq.
    """
    alpha = _check_alpha(alpha)
    h = flux.h
    if z_min is None:
        # well below every solution with |beta| <= 1/8
        z_min = -math.exp(log_minus_z(-0.25, alpha).real)
    if not z_min < -E0:
        raise DomainError("z_min must lie below -E0")
    cache = {}

    def edges(z):
        if z not in cache:
            sym = q_symbol(z, h, alpha, radius)
            cache[z] = band_spectrum(sym, flux, grid).bands
        return cache[z]

    zs = -np.geomspace(-z_min, E0, n_z)
    table = np.array([edges(float(z)) for z in zs])  # (n_z, q, 2)
    bands = []
    for i in range(flux.q):
        ends = []
        for side in (1, 0):
            vals = table[:, i, side]
            root = None
            if vals[0] >= 0:
                root = zs[0]
            for k in range(len(zs) - 1):
                if vals[k] < 0 <= vals[k + 1]:
                    root = brentq(
                        lambda z, s=side: edges(z)[i][s],
                        zs[k],
                        zs[k + 1],
                        xtol=xtol,
                        rtol=4 * np.finfo(float).eps,
                    )
                    break
            ends.append(root)
        lo, hi = ends
        if lo is None:
            continue
        if hi is None:
            hi = -E0
        bands.append((float(lo), float(hi)))
    clipped = _clip(bands, -E0)
    intervals, _ = merge_bands(clipped, 0.0)
    config = {
        "alpha": alpha,
        "flux": [flux.p, flux.q],
        "E0": E0,
        "z_min": z_min,
        "n_z": n_z,
        "radius": radius,
        "grid": list(grid),
        "xtol": xtol,
    }
    return SpectrumResult(intervals, "direct", config, bands, {"evaluations": len(cache)})


def symmetric_difference(a, b) -> tuple:
    """(|A symmetric-difference B|, |A union B|) for finite unions of intervals."""

    def length(ivs):
        merged, _ = merge_bands(list(ivs), 0.0)
        return sum(hi - lo for lo, hi in merged)

    inter = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if lo < hi:
                inter.append((lo, hi))
    la, lb, li = length(a), length(b), length(inter)
    union = la + lb - li
    return la + lb - 2.0 * li, union


# ---------------------------------------------------------------------------
# flux sweep


def flux_sweep_diagnostics(
    alpha: float,
    fluxes,
    E0: float = 1.0,
    tail_free: bool = False,
    cutoff: int = 6,
    grid=(64, 64),
) -> list:
    """Band count, total measure and largest gap of the z-spectrum per flux."""
    rows = []
    for flux in fluxes:
        res = negative_spectrum(alpha, flux, E0, cutoff, grid, tail_free=tail_free)
        gaps = [res.intervals[k + 1][0] - res.intervals[k][1] for k in range(len(res.intervals) - 1)]
        rows.append(
            {
                "flux_p": flux.p,
                "flux_q": flux.q,
                "bands": len(res.bands),
                "components": len(res.intervals),
                "measure": res.measure(),
                "largest_gap": max(gaps) if gaps else 0.0,
            }
        )
    return rows


def lemma13_check(z, alpha: float, h: float, radius_R: float = 5.0) -> dict:
    """Containment diagnostic: report Re z against the alpha-dependent threshold.

    For a converged zeta with |q + 1/alpha| <= R |a|, the real part is
    compared with E = exp(4 pi / alpha + log 4 + 2 psi(1) - 4 pi / 8)
    (the |beta| <= 1/8 edge of the fixed-point region).
    """
    E = math.exp(log_minus_z(BETA_SLACK * BETA_RADIUS, alpha).real)
    return {"re_z": complex(z).real, "E": E, "contained": complex(z).real < -E}


__all__ = [
    "FixedPointTrace",
    "MuSpectrum",
    "SpectrumResult",
    "direct_negative_spectrum",
    "flux_sweep_diagnostics",
    "lemma13_check",
    "m_alpha_beta",
    "mu_spectrum",
    "negative_spectrum",
    "p_symbol",
    "psi_map",
    "q_symbol",
    "symmetric_difference",
    "tail_sup_real",
    "z_of_beta",
    "z_of_beta_log",
    "zeta",
]
