"""Acceptance criteria 1-9, each at its stated tolerance.

Every test prints one ``[PASS]``/``[FAIL]`` line (visible under plain
``pytest``).  The file also runs standalone: ``python3 tests/test_acceptance.py``.
"""

import itertools
import json
import math
import sys
import time

import mpmath
import numpy as np
import pytest
from scipy import special

from landau_lattice.bounds import BOUND_IDS, MARGIN_TOL, verify_bound
from landau_lattice.cli import main as cli_main
from landau_lattice.green import f_kernel, q_limit_extrapolated, q_reg
from landau_lattice.harper import (
    RationalFlux,
    band_spectrum,
    magnetic_laplacian_coefficients,
    symbol_from_lattice_coefficients,
    truncated_spectra_1d,
    truncated_spectrum_2d,
)
from landau_lattice.solver import (
    direct_negative_spectrum,
    m_alpha_beta,
    negative_spectrum,
    p_symbol,
    symmetric_difference,
    zeta,
)
from landau_lattice.specfun import bessel_k, digamma, gamma_u
from landau_lattice.suites import hausdorff_cover
from landau_lattice.symbols import FourierSymbol, epsilon_estimate

_capture = None


@pytest.fixture(autouse=True)
def _report_sink(capsys):
    global _capture
    _capture = capsys
    yield
    _capture = None


def report(number: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    if _capture is not None:
        with _capture.disabled():
            print("\n" + line)
    else:
        print(line)
    assert ok, line


def test_criterion_1_special_functions():
    start = time.perf_counter()
    mpmath.mp.dps = 30
    pairs = [
        (digamma(1.0), float(mpmath.digamma(1))),
        (bessel_k(0, 1.0), float(mpmath.besselk(0, 1))),
        (bessel_k(1, 1.0), float(mpmath.besselk(1, 1))),
        (gamma_u(1.0, 10.0), float(mpmath.hyperu(1, 1, 10))),
        (gamma_u(1.0, 10.0), math.exp(10.0) * special.exp1(10.0)),
    ]
    err = max(abs(complex(v) - r) for v, r in pairs)
    elapsed = time.perf_counter() - start
    report(1, err <= 1e-9 and elapsed < 1.0, f"max error {err:.2e} (tol 1e-9), {elapsed:.2f} s")


def test_criterion_2_green_consistency():
    start = time.perf_counter()
    seps = [(0.3, 0.0), (0.5, 0.5), (1.0, -0.4), (1.5, 1.0), (2.5, 0.0)]
    zs = [-0.3, -1.0, -3.0, -8.0, -2.0 + 1.0j]
    hs = [0.1, 0.5, 1.0, 2.0, 3.0]
    worst = 0.0
    for y, z, h in itertools.product(seps, zs, hs):
        closed = f_kernel((0.0, 0.0), y, z, h)
        quad = f_kernel((0.0, 0.0), y, z, h, mode="quadrature")
        worst = max(worst, abs(closed - quad) / abs(quad))
    lim = max(abs(q_reg(z, h) - q_limit_extrapolated(z, h)) for z, h in ((-1.0, 1.0), (-0.5, 0.5), (-3.0, 2.0)))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-7 and lim < 1e-4 and elapsed < 30
    report(2, ok, f"125-node relative error {worst:.2e}, limit error {lim:.2e}, {elapsed:.1f} s")


def test_criterion_3_bound_suite():
    start = time.perf_counter()
    reports = [verify_bound(lemma) for lemma in BOUND_IDS]
    worst = min(r.worst_margin for r in reports)
    elapsed = time.perf_counter() - start
    ok = all(r.passed for r in reports) and worst >= -MARGIN_TOL and elapsed < 60
    report(3, ok, f"{len(reports)} bounds, worst relative margin {worst:.2e}, {elapsed:.1f} s")


def test_criterion_4_harper_sanity():
    start = time.perf_counter()
    grid = (256, 256)
    harper = FourierSymbol.harper_symbol()
    zero = band_spectrum(harper, RationalFlux(0, 1), grid)
    half = band_spectrum(harper, RationalFlux(1, 2), grid)
    lap = band_spectrum(
        symbol_from_lattice_coefficients(magnetic_laplacian_coefficients(), math.pi), RationalFlux(1, 2), grid
    )
    r2 = math.sqrt(2.0)
    errs = [
        abs(zero.lower + 2), abs(zero.upper - 2),
        abs(half.bands[0][0] + r2), abs(half.bands[0][1]), abs(half.bands[1][0]), abs(half.bands[1][1] - r2),
        abs(lap.lower + 2 * r2), abs(lap.upper - 2 * r2),
    ]
    elapsed = time.perf_counter() - start
    ok = max(errs) <= 1e-3 and elapsed < 60
    report(4, ok, f"max edge error {max(errs):.2e} (tol 1e-3), {elapsed:.1f} s")


def test_criterion_5_truncation_equivalence():
    start = time.perf_counter()
    harper = FourierSymbol.harper_symbol()
    flux = RationalFlux(1, 2)
    bands = band_spectrum(harper, flux, (256, 256))
    thetas = 2 * math.pi * np.arange(64) / 64
    cover = hausdorff_cover(bands.intervals, truncated_spectra_1d(harper, flux.h, thetas, 100))
    coeffs = magnetic_laplacian_coefficients()
    lap = band_spectrum(symbol_from_lattice_coefficients(coeffs, flux.h), flux, (256, 256))
    ev = truncated_spectrum_2d(coeffs, flux.h, 15)
    ext = max(abs(ev.min() - lap.lower), abs(ev.max() - lap.upper))
    elapsed = time.perf_counter() - start
    ok = cover <= 0.05 and ext <= 0.1 and elapsed < 300
    report(5, ok, f"1D cover {cover:.4f} (tol 0.05), 2D extremes {ext:.4f} (tol 0.1), {elapsed:.1f} s")


def test_criterion_6_fixed_point():
    worst_res = worst_rt = 0.0
    max_iter = 0
    real = True
    for mu in range(-4, 5):
        z, trace = zeta(float(mu), 2.0, 0.3)
        worst_res = max(worst_res, trace.residual)
        max_iter = max(max_iter, len(trace.iterates) - 1)
        worst_rt = max(worst_rt, abs(m_alpha_beta(trace.iterates[-1], 2.0, 0.3) - mu))
        real &= isinstance(z, complex) and z.imag == 0.0
    ok = worst_res < 1e-10 and max_iter <= 35 and worst_rt < 1e-10 and real
    report(6, ok, f"residual {worst_res:.1e}, {max_iter} iterations, round trip {worst_rt:.1e}, real {real}")


def test_criterion_7_cross_method():
    start = time.perf_counter()
    flux = RationalFlux(1, 3)
    reduced = negative_spectrum(6.0, flux, E0=1.0)
    direct = direct_negative_spectrum(6.0, flux, E0=1.0, radius=8)
    sd, union = symmetric_difference(reduced.intervals, direct.intervals)
    rel = sd / union if union > 0 else math.inf
    elapsed = time.perf_counter() - start
    ok = rel < 1e-3 and len(reduced.intervals) > 0 and elapsed < 600
    report(7, ok, f"{len(reduced.intervals)} interval(s), relative symmetric difference {rel:.2e}, {elapsed:.0f} s")


def test_criterion_8_epsilon_monotone():
    logs = []
    for alpha in (0.5, 0.3, 0.2, 0.1):
        sym, _ = p_symbol(0.0, alpha, 0.3)
        logs.append(epsilon_estimate(sym, strip=0.5, mu=0.0).log_value)
    ok = all(b < a for a, b in zip(logs, logs[1:]))
    report(8, ok, "log eps = " + ", ".join(f"{v:.4g}" for v in logs))


def test_criterion_9_reproducibility(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    codes = [cli_main(["butterfly", "--max-q", "6", "--out", str(d)]) for d in (a, b)]
    same = (a / "butterfly.csv").read_bytes() == (b / "butterfly.csv").read_bytes()
    replay = cli_main(["replay", str(a / "butterfly.manifest.json")])
    manifest = json.loads((a / "butterfly.manifest.json").read_text())
    ok = codes == [0, 0] and same and replay == 0 and manifest["outputs"]["butterfly.csv"]["sha256"]
    report(9, bool(ok), f"byte-identical {same}, replay exit {replay}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
