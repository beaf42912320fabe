"""Special functions: digamma, Gamma(a) U(a, 1; x), K_0/K_1, principal branches.

Everything here is pure Python/numpy so the Green-function code does not
depend on the accuracy conventions of an outside special-function library.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .errors import BranchCutError, ConvergenceError, DomainError, PoleError
from .logscale import LogScaledComplex
from .quadrature import peak_integral

EULER_GAMMA = 0.57721566490153286061
POLE_TOL = 1e-12
CUT_TOL = 1e-12

# B_2k for k = 1..9
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
)
# coefficients of psi(w + 1/2) - log(w) = sum c_k w^(-2k)
_HALF_SHIFT = tuple((1.0 - 2.0 ** (1 - 2 * k)) * b / (2 * k) for k, b in enumerate(_BERNOULLI, 1))

_ASYMPTOTIC_RADIUS = 12.0


def _check_pole(z: complex) -> None:
    if z.real <= 0.5 and abs(z.imag) < POLE_TOL:
        n = round(z.real)
        if n <= 0 and abs(z.real - n) < POLE_TOL:
            raise PoleError(f"digamma pole at z = {z}")


def digamma(z) -> complex:
    """Logarithmic derivative of the Gamma function for complex ``z``.

    Reflection for Re z < 1/2, upward recurrence until |z| >= 12, then the
    asymptotic Bernoulli series.  Returns a complex number; the imaginary
    part is exactly zero for real arguments.
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"non-finite argument {z}")
    _check_pole(z)
    if z.real < 0.5:
        # psi(z) = psi(1 - z) - pi cot(pi z)
        value = digamma(1.0 - z) - math.pi / cmath.tan(math.pi * z)
        return complex(value.real, 0.0) if z.imag == 0 else value
    acc = 0j
    while abs(z) < _ASYMPTOTIC_RADIUS:
        acc -= 1.0 / z
        z += 1.0
    inv2 = 1.0 / (z * z)
    series = 0j
    power = inv2
    for k, b in enumerate(_BERNOULLI, 1):
        series += b / (2 * k) * power
        power *= inv2
    value = acc + cmath.log(z) - 0.5 / z - series
    return complex(value.real, 0.0) if z.imag == 0 else value


def trigamma(z) -> complex:
    """Derivative of the digamma function."""
    z = complex(z)
    _check_pole(z)
    if z.real < 0.5:
        s = cmath.sin(math.pi * z)
        return (math.pi / s) ** 2 - trigamma(1.0 - z)
    acc = 0j
    while abs(z) < _ASYMPTOTIC_RADIUS:
        acc += 1.0 / (z * z)
        z += 1.0
    inv = 1.0 / z
    inv2 = inv * inv
    series = 0j
    power = inv2 * inv
    for b in _BERNOULLI:
        series += b * power
        power *= inv2
    value = acc + inv + 0.5 * inv2 + series
    return complex(value.real, 0.0) if z.imag == 0 else value


def digamma_half_shift_minus_log(w) -> complex:
    """psi(w + 1/2) - log(w), accurate also when both terms are huge.

    ``w`` may be a LogScaledComplex when it is too large for a double; the
    difference is then O(|w|^-2) and underflows gracefully.
    """
    if isinstance(w, LogScaledComplex):
        if w.log_mag > 5.0:
            inv2 = (LogScaledComplex(-2.0 * w.log_mag, -2.0 * w.phase)).to_complex()
            return _half_shift_series(inv2)
        w = w.to_complex()
    w = complex(w)
    if abs(w) >= 60.0:
        return _half_shift_series(1.0 / (w * w))
    return digamma(w + 0.5) - principal_log(w)


def trigamma_half_shift_minus_inv(w) -> complex:
    """psi'(w + 1/2) - 1/w, the w-derivative of digamma_half_shift_minus_log."""
    w = complex(w)
    if abs(w) >= 60.0:
        inv = 1.0 / w
        inv2 = inv * inv
        total = 0j
        power = inv2 * inv
        for k, c in enumerate(_HALF_SHIFT[:7], 1):
            total -= 2 * k * c * power
            power *= inv2
        return total
    return trigamma(w + 0.5) - 1.0 / w


def _half_shift_series(inv2: complex) -> complex:
    total = 0j
    power = inv2
    for c in _HALF_SHIFT[:7]:
        total += c * power
        power *= inv2
    return total


# ---------------------------------------------------------------------------
# Gamma(a) U(a, 1; x)


def _phi(w):
    """w - log1p(w), with a series where cancellation would bite."""
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    small = np.abs(w) < 1e-3
    ws = w[small]
    out[small] = ws * ws * (0.5 - ws * (1.0 / 3.0 - ws * (0.25 - ws * 0.2)))
    wl = w[~small]
    out[~small] = wl - np.log1p(wl)
    return out


def gamma_u_log(a, x) -> LogScaledComplex:
    """Gamma(a) U(a, 1; x) in log-scaled form, for Re a > 0 and x > 0.

    Uses the Laplace integral  int_0^inf exp(-x t) t^(a-1) (1+t)^(-a) dt
    with t = y exp(d), where y is the maximiser of the real part of the
    exponent.  The endpoint singularity at t = 0 becomes the exponential
    tail exp(Re(a) d) for d -> -inf, so no special treatment is needed.
    """
    a = complex(a)
    x = float(x)
    if not a.real > 0:
        raise DomainError(f"gamma_u needs Re a > 0, got a = {a}")
    if not (x > 0 and math.isfinite(x)):
        raise DomainError(f"gamma_u needs x > 0, got x = {x}")
    ar = a.real
    ai = a.imag
    # x y (1 + y) = Re a
    y = 2.0 * ar / (x + math.sqrt(x * x + 4.0 * x * ar))
    big_a = x * y
    big_b = ar / (1.0 + y)
    curvature = big_a + big_b * y / (1.0 + y)
    sigma = 1.0 / math.sqrt(curvature)
    inv1y = 1.0 / (1.0 + y)

    def g(d):
        d = np.asarray(d, dtype=float)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            em = np.expm1(-d)
            w = em * inv1y
            l1p = np.log1p(w)
            # far left tail: log1p(w) = log(w) + log1p(1/w) without forming w
            far = d < -30.0
            if np.any(far):
                dl = d[far]
                log_w = -dl + np.log1p(-np.exp(dl)) - math.log1p(y)
                l1p[far] = log_w + np.log1p((1.0 + y) * np.exp(dl) / -np.expm1(dl))
            near = np.abs(d) < 1.0
            real = np.empty_like(d)
            dn = d[near]
            sh = np.sinh(0.5 * dn)
            real[near] = (
                -(big_a + big_b) * 2.0 * sh * sh
                - (big_a - big_b) * np.sinh(dn)
                + ar * _phi(w[near])
            )
            df = d[~near]
            real[~near] = -big_a * np.expm1(df) - ar * l1p[~near]
            real = np.where(np.isnan(real), -np.inf, real)
        if ai == 0.0:
            return real
        return real - 1j * ai * l1p

    integral = peak_integral(g, sigma)
    if integral == 0 or not np.isfinite(integral):
        raise ConvergenceError(f"gamma_u quadrature degenerate at a={a}, x={x}")
    base = -x * y - a * math.log1p(1.0 / y)
    log_value = base + cmath.log(complex(integral))
    return LogScaledComplex.from_log(log_value)


def gamma_u(a, x) -> complex:
    """Gamma(a) U(a, 1; x) as an ordinary complex number (may underflow to 0)."""
    return gamma_u_log(a, x).to_complex()


# ---------------------------------------------------------------------------
# Modified Bessel functions K_0, K_1


def bessel_k_scaled(order: int, w) -> complex:
    """exp(w) K_order(w) for order 0 or 1 and Re w > 0.

    Trapezoidal rule on  int_0^inf exp(-w (cosh t - 1)) cosh(order t) dt.
    The integrand is analytic in a strip around the real axis, so the
    trapezoidal error decays like exp(-2 pi d / step).
    """
    if order not in (0, 1):
        raise DomainError(f"only orders 0 and 1 are implemented, got {order}")
    w = complex(w)
    if not w.real > 0:
        raise DomainError(f"bessel_k needs Re w > 0, got {w}")
    arg = abs(cmath.phase(w))
    strip = 0.5 * math.pi - arg
    if strip < 0.05:
        raise DomainError(f"argument {w} too close to the imaginary axis")
    # integrand below ~1e-320 beyond span
    span = math.acosh(1.0 + 740.0 / w.real)
    if order == 1:
        while w.real * (math.cosh(span) - 1.0) - span < 740.0:
            span += 0.25
    step = min(0.08 * strip / (0.5 * math.pi), span / 96.0)
    n = int(math.ceil(span / step))
    t = np.arange(n + 1) * step
    integrand = np.exp(-w * (2.0 * np.sinh(0.5 * t) ** 2))
    if order == 1:
        integrand = integrand * np.cosh(t)
    value = step * (np.sum(integrand) - 0.5 * integrand[0])
    return complex(value)


def bessel_k(order: int, x):
    """K_0(x) or K_1(x).

    Real positive ``x`` returns a float; complex ``x`` with Re x > 0 is
    accepted for the free Green function at complex energies.
    """
    is_real = not isinstance(x, complex) or x.imag == 0
    w = complex(x)
    if is_real and not w.real > 0:
        raise DomainError(f"bessel_k needs x > 0, got {x}")
    value = cmath.exp(-w) * bessel_k_scaled(order, w)
    return value.real if is_real else value


def log_bessel_k(order: int, w) -> LogScaledComplex:
    """K_order(w) in log-scaled form (no underflow for large w)."""
    w = complex(w)
    scaled = bessel_k_scaled(order, w)
    return LogScaledComplex.from_log(-w + cmath.log(scaled))


# ---------------------------------------------------------------------------
# Principal branches


def on_cut(z, tol: float = CUT_TOL) -> bool:
    """True when ``z`` lies on (-inf, 0] up to ``tol``."""
    z = complex(z)
    return abs(z.imag) <= tol and z.real <= tol


def principal_branch(z, which: str) -> complex:
    """Principal log or square root, continuing the positive real axis branch."""
    z = complex(z)
    if which not in ("log", "sqrt"):
        raise ValueError(f"which must be 'log' or 'sqrt', got {which!r}")
    if on_cut(z):
        raise BranchCutError(f"{z} lies on the branch cut (-inf, 0]")
    return cmath.log(z) if which == "log" else cmath.sqrt(z)


def principal_log(z) -> complex:
    return principal_branch(z, "log")


def principal_sqrt(z) -> complex:
    return principal_branch(z, "sqrt")
