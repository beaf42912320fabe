"""Harper-like operators: fiber operators, rational-flux Bloch matrices and bands.

A periodic symbol T with Fourier coefficients t(m, n) is quantized through
the lattice coefficients c(m, n) = t(m, n) e^{i m n h / 2} and the fiber
functions b_n(phi) = sum_k c(k, n) e^{i k phi}.  The fiber operator acts on
l^2(Z) by (C(theta) g)(m) = sum_n b_n(m h + theta) g(m + n).  For
h = 2 pi p / q the fibers are q-periodic in m and reduce to q x q Bloch
matrices over a quasimomentum kappa.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, DomainError, HermiticityError
from .symbols import FourierSymbol

HERMITIAN_TOL = 1e-13
JACOBI_TOL = 1e-12
JACOBI_SWEEPS = 30
JACOBI_MAX_DIM = 64


@dataclass(frozen=True)
class RationalFlux:
    """Flux h / 2 pi = p / q in lowest terms; p = 0 (with q = 1) means zero field."""

    p: int
    q: int

    def __post_init__(self):
        if self.q < 1 or self.p < 0:
            raise DomainError(f"need q >= 1 and p >= 0, got {self.p}/{self.q}")
        if math.gcd(self.p, self.q) != 1:
            raise DomainError(f"{self.p}/{self.q} is not in lowest terms")

    @property
    def h(self) -> float:
        return 2.0 * math.pi * self.p / self.q

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"


def farey(max_q: int) -> list:
    """All fluxes p/q in [0, 1] with q <= max_q, increasing."""
    fracs = sorted({Fraction(p, q) for q in range(1, max_q + 1) for p in range(0, q + 1)})
    return [RationalFlux(f.numerator, f.denominator) for f in fracs]


def convergents(x: float, count: int) -> list:
    """Continued-fraction convergents of x in [0, 1)."""
    out = []
    h0, h1, k0, k1 = 0, 1, 1, 0
    rest = x
    for _ in range(count):
        a = math.floor(rest)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        out.append(RationalFlux(h1, k1))
        frac = rest - a
        if frac < 1e-12:
            break
        rest = 1.0 / frac
    return out


# ---------------------------------------------------------------------------
# coefficients and fibers


def lattice_coefficients(sym: FourierSymbol, h: float) -> dict:
    """c(m, n) = t(m, n) e^{i m n h / 2}, including the constant at (0, 0)."""
    out = {}
    keys = set(sym.support())
    if sym.constant != 0:
        keys.add((0, 0))
    for m, n in sorted(keys):
        t = sym.coefficient(m, n)
        if t != 0:
            out[(m, n)] = t * np.exp(0.5j * m * n * h)
    return out


def _fiber_table(coeffs: dict):
    """n -> (k array, c(k, n) array)."""
    table = {}
    for (k, n), c in coeffs.items():
        table.setdefault(n, ([], []))
        table[n][0].append(k)
        table[n][1].append(c)
    return {n: (np.array(ks, dtype=float), np.array(cs, dtype=complex)) for n, (ks, cs) in table.items()}


def _fiber_values(table: dict, phi) -> dict:
    phi = np.asarray(phi, dtype=float)
    out = {}
    for n, (ks, cs) in table.items():
        out[n] = np.exp(1j * np.multiply.outer(phi, ks)) @ cs
    return out


def fiber_coefficients(sym: FourierSymbol, phi, h: float) -> dict:
    """b_n(phi) = sum_k c(k, n) e^{i k phi} for every n in the symbol's support."""
    return _fiber_values(_fiber_table(lattice_coefficients(sym, h)), phi)


# ---------------------------------------------------------------------------
# Hermitian eigensolver


def _round_robin(n: int):
    """n - 1 rounds of n/2 disjoint pairs covering every pair once (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        pairs = [(players[i], players[n - 1 - i]) for i in range(n // 2)]
        rounds.append(
            (np.array([min(a, b) for a, b in pairs]), np.array([max(a, b) for a, b in pairs]))
        )
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(stack: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_SWEEPS, vectors: bool = False):
    """Cyclic Jacobi for a stack of Hermitian matrices of shape (..., n, n).

    Rotations are applied in round-robin order so that each round touches
    n/2 disjoint index pairs of every matrix at once.  Converged when the
    off-diagonal Frobenius norm is below ``tol`` times the Frobenius norm.
    Returns ascending eigenvalues (and eigenvectors as columns).
    """
    a = np.array(stack, dtype=complex)
    shape = a.shape
    n = shape[-1]
    a = a.reshape(-1, n, n)
    padded = n % 2 == 1
    if padded:
        # a decoupled extra row never rotates and is dropped at the end
        a = np.pad(a, ((0, 0), (0, 1), (0, 1)))
    size = a.shape[-1]
    v = np.broadcast_to(np.eye(size, dtype=complex), a.shape).copy() if vectors else None
    scale = np.sqrt(np.sum(np.abs(a) ** 2, axis=(1, 2)))
    scale = np.where(scale > 0, scale, 1.0)
    rounds = _round_robin(size) if size > 1 else []
    diag_idx = np.arange(size)

    off_mask = ~np.eye(size, dtype=bool)

    def off_norm():
        return np.sqrt(np.sum(np.abs(a[:, off_mask]) ** 2, axis=1))

    sweeps = 0
    while True:
        off = off_norm()
        if np.all(off <= tol * scale):
            break
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps (off/scale = {np.max(off / scale):.3g})"
            )
        sweeps += 1
        for p, q in rounds:
            apq = a[:, p, q]
            mag = np.abs(apq)
            active = mag > 1e-300
            safe = np.where(active, mag, 1.0)
            unit = np.where(active, apq / safe, 1.0)
            tau = (a[:, q, q].real - a[:, p, p].real) / (2.0 * safe)
            # t = sgn(tau) / (|tau| + sqrt(1 + tau^2)) without overflowing tau^2
            big = np.abs(tau) > 1e150
            tau_s = np.where(big, 1.0, tau)
            t = np.where(tau_s >= 0, 1.0, -1.0) / (np.abs(tau_s) + np.sqrt(1.0 + tau_s * tau_s))
            t = np.where(big, 0.5 / np.where(big, tau, 1.0), t)
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            c_ = c[:, None, :]
            su = (s * unit)[:, None, :]
            # columns: A J with J_pp = J_qq = c, J_pq = s u, J_qp = -s conj(u)
            ap = a[:, :, p]
            aq = a[:, :, q]
            a[:, :, p] = c_ * ap - np.conj(su) * aq
            a[:, :, q] = su * ap + c_ * aq
            # rows: J^H (A J)
            c_r = c[:, :, None]
            su_r = (s * unit)[:, :, None]
            rp = a[:, p, :]
            rq = a[:, q, :]
            a[:, p, :] = c_r * rp - su_r * rq
            a[:, q, :] = np.conj(su_r) * rp + c_r * rq
            if vectors:
                vp = v[:, :, p]
                vq = v[:, :, q]
                v[:, :, p] = c_ * vp - np.conj(su) * vq
                v[:, :, q] = su * vp + c_ * vq
    evals = a[:, diag_idx, diag_idx].real
    if padded:
        evals = evals[:, :n]
        if vectors:
            v = v[:, :n, :n]
    order = np.argsort(evals, axis=1, kind="stable")
    evals = np.take_along_axis(evals, order, axis=1).reshape(shape[:-1])
    if not vectors:
        return evals
    v = np.take_along_axis(v, order[:, None, :], axis=2).reshape(shape)
    return evals, v


def check_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    m = np.asarray(m)
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    defect = float(np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2))))) if m.size else 0.0
    if defect > tol * scale:
        raise HermiticityError(f"matrix not Hermitian: defect {defect:.3g}")


def hermitian_eigs(m, vectors: bool = False, method: str = "auto"):
    """Ascending eigenvalues of a Hermitian matrix or stack of matrices.

    ``method='auto'`` uses the Jacobi solver up to JACOBI_MAX_DIM and LAPACK
    beyond; 'jacobi' and 'lapack' force one or the other.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise DomainError("expected a square matrix or a stack of them")
    n = m.shape[-1]
    if n > 2000:
        raise DomainError(f"dimension {n} exceeds the eigensolver budget of 2000")
    check_hermitian(m)
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        return jacobi_eigh(m, vectors=vectors)
    if method == "lapack":
        if vectors:
            return np.linalg.eigh(m)
        return np.linalg.eigvalsh(m)
    raise ValueError(f"unknown method {method!r}")


def eig_residuals(m, evals, evecs) -> np.ndarray:
    """||M v - lambda v|| for every computed pair."""
    m = np.asarray(m)
    return np.linalg.norm(m @ evecs - evecs * evals[..., None, :], axis=-2)


# ---------------------------------------------------------------------------
# Bloch matrices


def _bloch_stack(table, flux: RationalFlux, thetas, kappas, convention: str = "symmetric"):
    """Bloch matrices for all (theta, kappa) pairs, shape (T, K, q, q)."""
    q = flux.q
    h = flux.h
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    kappas = np.atleast_1d(np.asarray(kappas, dtype=float))
    out = np.zeros((len(thetas), len(kappas), q, q), dtype=complex)
    for j in range(q):
        values = _fiber_values(table, j * h + thetas)
        for n, b in values.items():
            jp = (j + n) % q
            if convention == "symmetric":
                # g(m) = e^{i kappa m / q} v_{m mod q}
                phase = np.exp(1j * kappas * n / q)
            elif convention == "boundary":
                # g(m) = e^{i kappa floor(m / q)} v_{m mod q}
                phase = np.exp(1j * kappas * ((j + n) // q))
            else:
                raise ValueError(f"unknown Bloch convention {convention!r}")
            out[:, :, j, jp] += b[:, None] * phase[None, :]
    return out


def bloch_matrix(sym: FourierSymbol, flux: RationalFlux, theta: float, kappa: float, convention: str = "symmetric"):
    """q x q Bloch matrix of the quantized symbol at flux p/q."""
    table = _fiber_table(lattice_coefficients(sym, flux.h))
    mat = _bloch_stack(table, flux, [theta], [kappa], convention)[0, 0]
    check_hermitian(mat)
    return mat


# ---------------------------------------------------------------------------
# bands


@dataclass
class BandSet:
    """Per-index bands of a Bloch family and their merged union."""

    flux: RationalFlux
    bands: list  # [(lower, upper)] by eigenvalue index
    merge_tol: float
    intervals: list = field(default_factory=list)
    touching: list = field(default_factory=list)
    grid: tuple = (64, 64)
    grid_delta: float = 0.0

    def __post_init__(self):
        if not self.intervals:
            self.intervals, self.touching = merge_bands(self.bands, self.merge_tol)

    @property
    def lower(self) -> float:
        return self.intervals[0][0]

    @property
    def upper(self) -> float:
        return self.intervals[-1][1]

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return any(lo - tol <= value <= hi + tol for lo, hi in self.intervals)

    def measure(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)

    def csv_rows(self) -> list:
        return [(self.flux.p, self.flux.q, i, lo, hi) for i, (lo, hi) in enumerate(self.bands)]


def merge_bands(bands, merge_tol: float):
    """Merge overlapping or touching intervals; returns (intervals, touching index pairs)."""
    order = sorted(range(len(bands)), key=lambda i: bands[i][0])
    intervals = []
    touching = []
    last = None
    for i in order:
        lo, hi = bands[i]
        if intervals and lo <= intervals[-1][1] + merge_tol:
            touching.append((last, i))
            intervals[-1][1] = max(intervals[-1][1], hi)
        else:
            intervals.append([lo, hi])
        last = i
    return [tuple(iv) for iv in intervals], touching


def _grid(n: int, period: float):
    return period * np.arange(n) / n


def _edges(evals: np.ndarray):
    flat = evals.reshape(-1, evals.shape[-1])
    return flat.min(axis=0), flat.max(axis=0)


def band_spectrum(
    sym: FourierSymbol,
    flux: RationalFlux,
    grid=(64, 64),
    polish: bool = True,
    convention: str = "symmetric",
) -> BandSet:
    """Bands of the quantized symbol at rational flux.

    Eigenvalues are computed on a (theta, kappa) grid, theta in [0, 2 pi/q)
    (the shift theta -> theta + h permutes the fibers) and kappa in
    [0, 2 pi).  Band i is the range of the i-th eigenvalue.  The edges are
    then polished by local optimisation from the best grid point.  The
    merge tolerance is 4x the edge change between the grid and its
    stride-2 subgrid.
    """
    n_theta, n_kappa = grid
    if n_theta < 2 or n_kappa < 2:
        raise DomainError("grid must be at least 2 x 2")
    if not sym.is_real():
        raise DomainError("band_spectrum needs a real symbol")
    table = _fiber_table(lattice_coefficients(sym, flux.h))
    theta_period = 2.0 * math.pi / flux.q
    thetas = _grid(n_theta, theta_period)
    kappas = _grid(n_kappa, 2.0 * math.pi)
    mats = _bloch_stack(table, flux, thetas, kappas, convention)
    check_hermitian(mats)
    evals = hermitian_eigs(mats)
    lo, hi = _edges(evals)
    lo2, hi2 = _edges(evals[::2, ::2])
    delta = float(max(np.max(np.abs(lo - lo2)), np.max(np.abs(hi - hi2))))
    scale = max(1.0, float(np.max(np.abs(evals))))
    merge_tol = max(4.0 * delta, 1e-9 * scale)
    lo = lo.copy()
    hi = hi.copy()
    if polish:
        flat = evals.reshape(len(thetas), len(kappas), -1)
        for i in range(flux.q):
            for sign, target in ((1.0, lo), (-1.0, hi)):
                k = int(np.argmin(sign * flat[:, :, i]))
                t0, k0 = thetas[k // len(kappas)], kappas[k % len(kappas)]
                best = _polish_edge(table, flux, i, sign, t0, k0, convention)
                if sign * best < sign * target[i]:
                    target[i] = best
    bands = [(float(a), float(b)) for a, b in zip(lo, hi)]
    return BandSet(flux, bands, merge_tol, grid=tuple(grid), grid_delta=delta)


def _polish_edge(table, flux, index, sign, theta0, kappa0, convention):
    def f(x):
        mat = _bloch_stack(table, flux, [x[0]], [x[1]], convention)[0, 0]
        return sign * np.linalg.eigvalsh(mat)[index]

    res = minimize(
        f,
        np.array([theta0, kappa0]),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 400},
    )
    return sign * float(res.fun)


# ---------------------------------------------------------------------------
# truncated operators


def fiber_matrix(sym: FourierSymbol, h: float, theta: float, N: int) -> np.ndarray:
    """The fiber operator C(theta) restricted to |m| <= N."""
    table = _fiber_table(lattice_coefficients(sym, h))
    ms = np.arange(-N, N + 1)
    values = _fiber_values(table, ms * h + theta)
    size = len(ms)
    mat = np.zeros((size, size), dtype=complex)
    for n, b in values.items():
        rows = np.arange(size)
        cols = rows + n
        ok = (cols >= 0) & (cols < size)
        mat[rows[ok], cols[ok]] = b[ok]
    return mat


def truncated_spectrum_1d(sym: FourierSymbol, h: float, theta: float, N: int, method: str = "auto") -> np.ndarray:
    """Eigenvalues of the (2N+1) x (2N+1) truncation of the fiber operator."""
    if N < 10:
        raise DomainError("N must be >= 10")
    return hermitian_eigs(fiber_matrix(sym, h, theta, N), method=method)


def truncated_spectra_1d(sym: FourierSymbol, h: float, thetas, N: int) -> np.ndarray:
    """Batched truncated fiber spectra, one row per theta."""
    mats = np.stack([fiber_matrix(sym, h, t, N) for t in thetas])
    return hermitian_eigs(mats)


def magnetic_laplacian_coefficients() -> dict:
    """Unit hopping to the four nearest neighbours."""
    return {(1, 0): 1.0, (-1, 0): 1.0, (0, 1): 1.0, (0, -1): 1.0}


def symbol_from_lattice_coefficients(coeffs: dict, h: float) -> FourierSymbol:
    """t(m, n) = c(m, n) e^{-i m n h / 2}."""
    t = {k: complex(c) * np.exp(-0.5j * k[0] * k[1] * h) for k, c in coeffs.items() if k != (0, 0)}
    return FourierSymbol(t, coeffs.get((0, 0), 0.0))


def covariant_matrix(coeffs: dict, h: float, N: int):
    """C(p, q) = e^{i h p2 (q1 - p1)} c(q - p) on sites with |p1|, |p2| <= N."""
    r = np.arange(-N, N + 1)
    p1, p2 = np.meshgrid(r, r, indexing="ij")
    sites = np.column_stack([p1.ravel(), p2.ravel()])
    size = len(sites)
    mat = np.zeros((size, size), dtype=complex)
    d1 = sites[None, :, 0] - sites[:, None, 0]
    d2 = sites[None, :, 1] - sites[:, None, 1]
    for (k1, k2), c in coeffs.items():
        mask = (d1 == k1) & (d2 == k2)
        rows, cols = np.nonzero(mask)
        mat[rows, cols] = np.exp(1j * h * sites[rows, 1] * (sites[cols, 0] - sites[rows, 0])) * c
    return mat, sites


def covariant_defect(mat: np.ndarray, sites: np.ndarray, h: float, shifts=((1, 0), (0, 1), (1, 1), (-1, 2))) -> float:
    """max |C(p+k, q+k) - e^{-i h k2 (p1 - q1)} C(p, q)| over in-range pairs."""
    index = {tuple(s): i for i, s in enumerate(sites.tolist())}
    worst = 0.0
    for k1, k2 in shifts:
        src = [i for i, s in enumerate(sites.tolist()) if (s[0] + k1, s[1] + k2) in index]
        dst = [index[(sites[i][0] + k1, sites[i][1] + k2)] for i in src]
        src = np.array(src)
        dst = np.array(dst)
        base = mat[np.ix_(src, src)]
        moved = mat[np.ix_(dst, dst)]
        diff = sites[src, 0][:, None] - sites[src, 0][None, :]
        worst = max(worst, float(np.max(np.abs(moved - np.exp(-1j * h * k2 * diff) * base))))
    return worst


def truncated_spectrum_2d(coeffs: dict, h: float, N: int, method: str = "auto") -> np.ndarray:
    """Eigenvalues of the covariant Z^2 operator truncated to |p1|, |p2| <= N."""
    if (2 * N + 1) ** 2 > 2000:
        raise DomainError("(2N+1)^2 exceeds the eigensolver budget of 2000")
    mat, _ = covariant_matrix(coeffs, h, N)
    return hermitian_eigs(mat, method=method)
