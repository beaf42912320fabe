"""Verification suites run by ``landau-lattice verify``.

Every check returns a plain dict with at least ``name`` and ``pass``; the
references are independent implementations (scipy), closed-form constants
or Bloch-oracle values, never outputs of the code under test.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .bounds import BOUND_IDS, MARGIN_TOL, a_lower_bound_check, verify_bound
from .green import f_kernel, q_limit_extrapolated, q_reg
from .harper import (
    RationalFlux,
    band_spectrum,
    magnetic_laplacian_coefficients,
    symbol_from_lattice_coefficients,
    truncated_spectra_1d,
    truncated_spectrum_2d,
)
from .lattice import build_q_matrix
from .solver import m_alpha_beta, zeta
from .specfun import bessel_k, digamma, gamma_u
from .symbols import FourierSymbol

__all__ = ["SUITES", "hausdorff_cover", "run_suite"]

EULER_GAMMA_REF = 0.57721566490153286061


def _value_check(name, value, reference, tol, relative=False):
    err = abs(complex(value) - complex(reference))
    if relative:
        err /= max(abs(complex(reference)), 1e-300)
    return {
        "name": name,
        "value": complex(value).real if complex(value).imag == 0 else [complex(value).real, complex(value).imag],
        "reference": complex(reference).real,
        "error": err,
        "tolerance": tol,
        "pass": bool(err <= tol),
    }


def specfun_suite():
    return [
        _value_check("digamma(1)", digamma(1.0), -EULER_GAMMA_REF, 1e-9),
        _value_check("K0(1)", bessel_k(0, 1.0), special.k0(1.0), 1e-9),
        _value_check("K1(1)", bessel_k(1, 1.0), special.k1(1.0), 1e-9),
        _value_check("Gamma(1)U(1,1;10)", gamma_u(1.0, 10.0), math.exp(10.0) * special.exp1(10.0), 1e-9),
        _value_check("K0(30) scaled", bessel_k(0, 30.0), special.k0(30.0), 1e-9, relative=True),
    ]


def green_suite():
    checks = []
    for lemma in BOUND_IDS:
        report = verify_bound(lemma)
        checks.append(
            {
                "name": lemma,
                "worst_margin": report.worst_margin,
                "nodes": report.nodes,
                "pass": report.passed,
            }
        )
    margin = a_lower_bound_check([-0.5, -1.0, -4.0, -20.0, -100.0], [0.1, 0.5, 1.0, 2.0])
    checks.append({"name": "a_lower_bound", "worst_margin": margin, "pass": bool(margin >= -MARGIN_TOL)})
    for z, h in ((-1.0, 0.5), (-3.0, 1.0)):
        closed = f_kernel((0, 0), (1.0, 0.5), z, h)
        quad = f_kernel((0, 0), (1.0, 0.5), z, h, mode="quadrature")
        checks.append(_value_check(f"closed_vs_quadrature z={z} h={h}", closed, quad, 1e-7, relative=True))
        checks.append(_value_check(f"q_reg_limit z={z} h={h}", q_reg(z, h), q_limit_extrapolated(z, h), 1e-4))
    return checks


def lattice_suite():
    checks = []
    for z, h in ((-2.0, 0.5), (-5.0, 2.0 * math.pi / 3.0)):
        mat = build_q_matrix(z, h, radius=4, check=False)
        herm = mat.hermiticity_defect()
        cov = mat.covariance_defect(2)
        checks.append({"name": f"hermitian z={z} h={h:.6g}", "defect": herm, "pass": bool(herm < 1e-12)})
        checks.append({"name": f"covariant z={z} h={h:.6g}", "defect": cov, "pass": bool(cov < 1e-12)})
    return checks


def hausdorff_cover(bands, values, samples: int = 400) -> float:
    """Two-sided distance between a union of intervals and a point set."""
    values = np.sort(np.ravel(values))
    pts = np.concatenate([np.linspace(lo, hi, samples) for lo, hi in bands])
    idx = np.clip(np.searchsorted(values, pts), 1, len(values) - 1)
    gap_a = np.minimum(np.abs(pts - values[idx - 1]), np.abs(pts - values[idx]))
    lo = np.array([b[0] for b in bands])
    hi = np.array([b[1] for b in bands])
    outside = np.maximum(lo[None, :] - values[:, None], values[:, None] - hi[None, :])
    gap_b = np.maximum(np.min(outside, axis=1), 0.0)
    return float(max(gap_a.max(), gap_b.max()))


def harper_suite(grid=(64, 64)):
    checks = []
    harper = FourierSymbol.harper_symbol()
    zero = band_spectrum(harper, RationalFlux(0, 1), grid)
    checks.append(_value_check("flux 0 lower", zero.lower, -2.0, 1e-3))
    checks.append(_value_check("flux 0 upper", zero.upper, 2.0, 1e-3))
    half = RationalFlux(1, 2)
    bands = band_spectrum(harper, half, grid)
    checks.append(_value_check("flux 1/2 lower", bands.lower, -math.sqrt(2.0), 1e-3))
    checks.append(_value_check("flux 1/2 upper", bands.upper, math.sqrt(2.0), 1e-3))
    checks.append({"name": "flux 1/2 touching", "touching": bands.touching, "pass": bool(bands.touching)})
    lap = symbol_from_lattice_coefficients(magnetic_laplacian_coefficients(), half.h)
    lap_bands = band_spectrum(lap, half, grid)
    checks.append(_value_check("unit hopping 1/2 upper", lap_bands.upper, 2.0 * math.sqrt(2.0), 1e-3))
    thetas = 2.0 * math.pi * np.arange(64) / 64
    trunc = truncated_spectra_1d(harper, half.h, thetas, 100)
    cover = hausdorff_cover(bands.intervals, trunc)
    checks.append({"name": "1D truncation cover", "distance": cover, "tolerance": 0.05, "pass": bool(cover <= 0.05)})
    ev2 = truncated_spectrum_2d(magnetic_laplacian_coefficients(), half.h, 15)
    err = max(abs(ev2.min() - lap_bands.lower), abs(ev2.max() - lap_bands.upper))
    checks.append({"name": "2D truncation extremes", "error": float(err), "tolerance": 0.1, "pass": bool(err <= 0.1)})
    return checks


def solver_suite(alpha: float = 2.0, h: float = 0.3, tol: float = 1e-10):
    checks = []
    for mu in range(-4, 5):
        z, trace = zeta(float(mu), alpha, h, tol)
        beta = trace.iterates[-1]
        back = m_alpha_beta(beta, alpha, h)
        iters = len(trace.iterates) - 1
        ok = trace.residual < tol and iters <= 35 and abs(back - mu) < tol and complex(z).imag == 0
        checks.append(
            {
                "name": f"zeta mu={mu}",
                "zeta": complex(z).real,
                "iterations": iters,
                "residual": trace.residual,
                "round_trip_error": abs(back - mu),
                "pass": bool(ok),
            }
        )
    return checks


SUITES = {
    "specfun": specfun_suite,
    "green": green_suite,
    "lattice": lattice_suite,
    "harper": harper_suite,
    "solver": solver_suite,
}


def run_suite(name: str) -> dict:
    """Run one suite (or ``all``); returns {suite: [checks]}."""
    if name == "all":
        return {key: fn() for key, fn in SUITES.items()}
    if name not in SUITES:
        raise KeyError(name)
    return {name: SUITES[name]()}
