"""Adaptive Gauss-Legendre quadrature and a peak-centred integrator.

All integrals in this package are Laplace-type transforms over (0, inf).
After the substitution t = exp(s) they become integrals over the real line
of ``exp(g(s))`` with a single dominant maximum, so the second routine
integrates panel by panel outward from that maximum until the tails stop
contributing.
"""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(20)


def _rule(f, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return half * np.dot(_WEIGHTS, f(mid + half * _NODES))


def gauss_legendre(f, a, b, abs_tol, max_depth=48, max_intervals=20000):
    """Integrate a vectorised ``f`` over [a, b] by adaptive bisection.

    Each interval is accepted when the 20-point estimate and the sum of the
    estimates on its two halves differ by less than its share of
    ``abs_tol``.
    """
    if a == b:
        return 0.0
    whole = _rule(f, a, b)
    stack = [(a, b, whole, 0)]
    total = 0.0
    length = b - a
    count = 0
    while stack:
        lo, hi, est, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _rule(f, lo, mid)
        right = _rule(f, mid, hi)
        refined = left + right
        share = abs_tol * max((hi - lo) / length, 1e-6)
        if abs(refined - est) <= share or (hi - lo) <= 1e-15 * max(abs(lo), abs(hi), 1.0):
            total += refined
            continue
        count += 1
        if depth >= max_depth or count > max_intervals:
            raise ConvergenceError(
                f"adaptive Gauss-Legendre failed on [{lo:.6g}, {hi:.6g}] "
                f"(error estimate {abs(refined - est):.3g} > {share:.3g})"
            )
        stack.append((lo, mid, left, depth + 1))
        stack.append((mid, hi, right, depth + 1))
    return total


def peak_integral(g, sigma, rel_tol=1e-13, max_panels=200, tail_log=-45.0):
    """Integrate ``exp(g(d))`` over the real line.

    ``g`` is vectorised, complex-valued allowed, normalised so that
    Re g(0) = 0 is (close to) its maximum, and ``sigma`` is the width of the
    peak.  Panels of doubling width are added on both sides until a panel
    contributes less than ``1e-17`` of the running total and Re g has
    dropped below ``tail_log``.
    """
    if not (sigma > 0 and np.isfinite(sigma)):
        raise ConvergenceError(f"invalid peak width {sigma!r}")

    def f(d):
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            vals = np.exp(g(d))
        vals = np.where(np.isfinite(vals), vals, 0.0)
        return vals

    total = gauss_legendre(f, -sigma, sigma, abs_tol=rel_tol * sigma)
    for direction in (1.0, -1.0):
        lo = sigma
        width = sigma
        for _ in range(max_panels):
            hi = lo + width
            scale = max(abs(total), rel_tol * sigma)
            if direction > 0:
                part = gauss_legendre(f, lo, hi, abs_tol=rel_tol * scale)
            else:
                part = gauss_legendre(f, -hi, -lo, abs_tol=rel_tol * scale)
            total += part
            edge = np.real(g(np.array([direction * hi])))[0]
            if abs(part) <= 1e-17 * abs(total) and (edge < tail_log or not np.isfinite(edge)):
                break
            lo = hi
            width *= 2.0
        else:
            raise ConvergenceError("peak integral tail did not decay within the panel budget")
    return total
