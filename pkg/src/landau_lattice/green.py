"""Landau heat kernel, Landau and free Green functions, regularised diagonals.

Conventions: magnetic field ``h >= 0`` in the Landau gauge, points are
pairs ``(x1, x2)``, spectral parameter ``z`` complex.  The Landau Green
function is evaluated either from the Gamma*U closed form or as the Laplace
transform of the heat kernel; both are needed because the latter is the
oracle for the former.
"""

from __future__ import annotations

import cmath
import math
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import CoincidenceError, ConvergenceError, DomainError, PoleError
from .logscale import LogScaledComplex
from .quadrature import peak_integral
from .specfun import (
    bessel_k,
    digamma,
    digamma_half_shift_minus_log,
    gamma_u_log,
    log_bessel_k,
    principal_log,
    principal_sqrt,
    trigamma,
    trigamma_half_shift_minus_inv,
)

FOUR_PI = 4.0 * math.pi
PSI_ONE = -0.57721566490153286061
LOG4 = math.log(4.0)
LANDAU_LEVEL_TOL = 1e-8


class PlanePoint(NamedTuple):
    x1: float
    x2: float


def _point(p) -> PlanePoint:
    x1, x2 = p
    return PlanePoint(float(x1), float(x2))


def separation2(x, y) -> float:
    x, y = _point(x), _point(y)
    return (x.x1 - y.x1) ** 2 + (x.x2 - y.x2) ** 2


def gauge_phase(x, y, h: float) -> complex:
    """exp(-i h (x1 - y1)(x2 + y2) / 2), the Landau-gauge factor of G_h."""
    x, y = _point(x), _point(y)
    return cmath.exp(-0.5j * h * (x.x1 - y.x1) * (x.x2 + y.x2))


def _check_field(h: float) -> float:
    h = float(h)
    if not (h >= 0 and math.isfinite(h)):
        raise DomainError(f"magnetic field must be finite and >= 0, got {h}")
    return h


def _check_below_first_level(z: complex, h: float) -> None:
    if not z.real < h:
        raise DomainError(f"need Re z < h for the Laplace representation, got z={z}, h={h}")


def landau_level_guard(z, h: float) -> None:
    """Raise PoleError if ``z`` is within 1e-8 h of a Landau level (2n-1)h."""
    z = complex(z)
    if h <= 0:
        return
    n = round(0.5 * (z.real / h + 1.0))
    if n >= 1 and abs(z - (2 * n - 1) * h) < LANDAU_LEVEL_TOL * h:
        raise PoleError(f"z = {z} is a Landau level (n = {n}) for h = {h}")


# ---------------------------------------------------------------------------
# heat kernel


def heat_kernel(x, y, t: float, h: float) -> complex:
    """Integral kernel of exp(-t H_h); h = 0 gives the free heat kernel."""
    t = float(t)
    h = _check_field(h)
    if not t > 0:
        raise DomainError(f"heat kernel needs t > 0, got {t}")
    r2 = separation2(x, y)
    if h == 0:
        return complex(math.exp(-r2 / (4.0 * t)) / (FOUR_PI * t))
    return gauge_phase(x, y, h) * math.exp(_log_abs_heat(r2, t, h))


def _log_abs_heat(r2, t, h):
    """log |P_h(x, y; t)| for scalar or array t."""
    t = np.asarray(t, dtype=float)
    if h == 0:
        return -np.log(FOUR_PI * t) - r2 / (4.0 * t)
    u = h * t
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        small = u < 1e-4
        u2 = u * u
        # log(sinh u / u) and u coth u
        log_shu = np.where(
            small,
            u2 / 6.0 - u2 * u2 / 180.0,
            u + np.log1p(-np.exp(-2.0 * u)) - np.log(2.0 * u),
        )
        ucoth = np.where(small, 1.0 + u2 / 3.0, u / np.tanh(u))
        out = -np.log(FOUR_PI * t) - log_shu - r2 * ucoth / (4.0 * t)
    return out


def _heat_laplace_log(r2: float, z: complex, h: float, power: int) -> LogScaledComplex:
    """log of  int_0^inf t^power e^(z t) |P_h(t)| dt  (phase-free)."""

    def g(s):
        s = np.asarray(s, dtype=float)
        t = np.exp(s)
        with np.errstate(over="ignore", invalid="ignore"):
            val = (power + 1) * s + z.real * t + _log_abs_heat(r2, t, h)
            val = np.where(np.isnan(val), -np.inf, val)
        if z.imag == 0:
            return val
        return val + 1j * z.imag * t

    grid = np.arange(-60.0, 40.0, 0.25)
    vals = np.real(g(grid))
    k = int(np.argmax(vals))
    if k == 0 or k == len(grid) - 1:
        raise ConvergenceError(f"heat-kernel integrand has no interior maximum (r2={r2}, z={z}, h={h})")
    res = minimize_scalar(
        lambda s: -float(np.real(g(np.array([s])))[0]),
        bounds=(grid[k - 1], grid[k + 1]),
        method="bounded",
        options={"xatol": 1e-10},
    )
    s0 = float(res.x)
    g0 = complex(g(np.array([s0]))[0])
    step = 1e-3
    g2 = np.real(g(np.array([s0 - step, s0, s0 + step])))
    curv = -(g2[0] - 2.0 * g2[1] + g2[2]) / (step * step)
    sigma = 1.0 / math.sqrt(curv) if curv > 0 else 0.25
    integral = peak_integral(lambda d: g(s0 + d) - g0, sigma)
    return LogScaledComplex.from_log(g0 + cmath.log(complex(integral)))


# ---------------------------------------------------------------------------
# Landau Green function and its gauge-free version F_h


def _closed_form_log(r2: float, z: complex, h: float) -> LogScaledComplex:
    a = 0.5 - z / (2.0 * h)
    gu = gamma_u_log(a, 0.5 * h * r2)
    return LogScaledComplex(gu.log_mag - math.log(FOUR_PI) - 0.25 * h * r2, gu.phase)


def f_kernel_log(x, y, z, h: float, mode: str = "closed_form") -> LogScaledComplex:
    """F_h(x, y; z) in log-scaled form (no underflow at deep negative z)."""
    z = complex(z)
    h = _check_field(h)
    r2 = separation2(x, y)
    if r2 == 0:
        raise CoincidenceError("F_h is singular at x == y")
    if h == 0:
        return free_green_log(1, x, y, z)
    _check_below_first_level(z, h)
    landau_level_guard(z, h)
    if mode == "closed_form":
        return _closed_form_log(r2, z, h)
    if mode == "quadrature":
        return _heat_laplace_log(r2, z, h, 0)
    raise ValueError(f"mode must be 'closed_form' or 'quadrature', got {mode!r}")


def f_kernel(x, y, z, h: float, mode: str = "closed_form") -> complex:
    """Gauge-stripped Green function; real and positive for real z < h."""
    return f_kernel_log(x, y, z, h, mode).to_complex()


def landau_green(x, y, z, h: float, mode: str = "closed_form") -> complex:
    """Green function G_h(x, y; z) of the Landau Hamiltonian, Re z < h."""
    h = _check_field(h)
    return gauge_phase(x, y, h) * f_kernel(x, y, z, h, mode)


def f_kernel2(x, y, z, h: float) -> complex:
    """F^(2)_h: t-weighted Laplace transform of |P_h|; equals dF_h/dz."""
    z = complex(z)
    h = _check_field(h)
    if h == 0:
        return free_green(2, x, y, z)
    _check_below_first_level(z, h)
    return _heat_laplace_log(separation2(x, y), z, h, 1).to_complex()


def green2(x, y, z, h: float) -> complex:
    """Kernel of (H_h - z)^-2, i.e. dG_h/dz, by quadrature of t e^(zt) P_h."""
    h = _check_field(h)
    return gauge_phase(x, y, h) * f_kernel2(x, y, z, h)


# ---------------------------------------------------------------------------
# free Green functions


def _free_arg(z) -> complex:
    return principal_sqrt(-complex(z))


def free_green_log(order: int, x, y, z) -> LogScaledComplex:
    r = math.sqrt(separation2(x, y))
    if r == 0:
        raise CoincidenceError("free Green function is singular at x == y")
    k = _free_arg(z)
    if order == 1:
        return log_bessel_k(0, k * r) * (1.0 / (2.0 * math.pi))
    if order == 2:
        return log_bessel_k(1, k * r) * (r / (FOUR_PI * k))
    raise DomainError(f"order must be 1 or 2, got {order}")


def free_green(order: int, x, y, z) -> complex:
    """(H_0 - z)^-order kernel for order 1 or 2, z off [0, inf)."""
    value = free_green_log(order, x, y, z).to_complex()
    if complex(z).imag == 0:
        return complex(value.real, 0.0)
    return value


def free_green_radial(order: int, r: float, z) -> complex:
    """free_green as a function of the separation only."""
    return free_green(order, (0.0, 0.0), (r, 0.0), z)


# ---------------------------------------------------------------------------
# regularised diagonals


def q_reg(z, h: float) -> complex:
    """lim_{x->y} (G_h(x,y;z) - log(1/|x-y|) / 2pi) for h > 0."""
    z = complex(z)
    h = _check_field(h)
    if h == 0:
        raise DomainError("q_reg needs h > 0; use q0 for the free case")
    landau_level_guard(z, h)
    a = 0.5 - z / (2.0 * h)
    return -(digamma(a) + math.log(0.5 * h) - 2.0 * PSI_ONE) / FOUR_PI


def q0(z) -> complex:
    """Regularised diagonal of the free Green function."""
    z = complex(z)
    value = -(principal_log(-z) - LOG4 - 2.0 * PSI_ONE) / FOUR_PI
    return complex(value.real, 0.0) if z.imag == 0 else value


def q_reg_minus_q0(z, h: float) -> complex:
    """q(z, h) - q0(z) without cancellation; accepts log-scaled ``z``."""
    h = _check_field(h)
    if isinstance(z, LogScaledComplex):
        w = (-z) * (1.0 / (2.0 * h))
        if w.log_mag > 30.0:
            return -digamma_half_shift_minus_log(w) / FOUR_PI
        z = z.to_complex()
    z = complex(z)
    landau_level_guard(z, h)
    value = -digamma_half_shift_minus_log(-z / (2.0 * h)) / FOUR_PI
    return complex(value.real, 0.0) if z.imag == 0 else value


def dq_reg_dz(z, h: float) -> complex:
    z = complex(z)
    landau_level_guard(z, h)
    return trigamma(0.5 - z / (2.0 * h)) / (8.0 * math.pi * h)


def dq_reg_minus_dq0(z, h: float) -> complex:
    """d/dz (q(z, h) - q0(z)) without cancellation."""
    z = complex(z)
    landau_level_guard(z, h)
    return trigamma_half_shift_minus_inv(-z / (2.0 * h)) / (8.0 * math.pi * h)


def dq0_dz(z) -> complex:
    return -1.0 / (FOUR_PI * complex(z))


def q_limit_extrapolated(z, h: float, radii=(1e-2, 1e-3, 1e-4)) -> complex:
    """Richardson extrapolation of the defining limit of q(z, h).

    The remainder of F_h - log(1/r)/2pi behaves like r^2 log r, so the
    samples are combined with a quadratic fit in r^2.
    """
    z = complex(z)
    rs = np.asarray(radii, dtype=float)
    vals = np.array(
        [f_kernel((0.0, 0.0), (r, 0.0), z, h) - math.log(1.0 / r) / (2.0 * math.pi) for r in rs]
    )
    if len(rs) == 1:
        return complex(vals[0])
    # fit v(r) = q + c1 r^2 log r + c2 r^2
    design = np.column_stack([np.ones_like(rs), rs**2 * np.log(rs), rs**2])[:, : len(rs)]
    coef_re = np.linalg.lstsq(design, vals.real, rcond=None)[0]
    coef_im = np.linalg.lstsq(design, vals.imag, rcond=None)[0]
    return complex(coef_re[0], coef_im[0])


__all__ = [
    "PlanePoint",
    "bessel_k",
    "dq0_dz",
    "dq_reg_minus_dq0",
    "dq_reg_dz",
    "f_kernel",
    "f_kernel2",
    "f_kernel_log",
    "free_green",
    "free_green_log",
    "free_green_radial",
    "gauge_phase",
    "green2",
    "heat_kernel",
    "landau_green",
    "landau_level_guard",
    "q0",
    "q_limit_extrapolated",
    "q_reg",
    "q_reg_minus_q0",
]
