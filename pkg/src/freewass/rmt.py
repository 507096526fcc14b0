"""Random-matrix oracle: spectra of ``A + sqrt(r) H`` with ``H`` from the GUE.

``A`` is the diagonal of quantile midpoints of ``mu``, ``H`` a complex
Hermitian Gaussian matrix with ``E|H_ij|^2 = 1/n``.  For large ``n`` the
empirical spectral law approaches ``mu [+] sigma_r``, giving an oracle for
the free-convolution solver that shares none of its code.

The eigensolver is in-house: Householder reduction of the complex Hermitian
matrix to a real symmetric tridiagonal one, then implicit-shift QL.

Randomness: trial ``k`` draws from ``PCG64(SeedSequence(seed).spawn(n_trials)[k])``,
so results do not depend on the order or concurrency of the trials.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .measure import cdf, quantile
from .records import inequality

MIN_DIM = 32
ANCHOR_RMT = "spectrum of A + sqrt(r) GUE approaches mu [+] sigma_r"


class EigenError(RuntimeError):
    """The implicit QL iteration did not converge."""


@numba.njit(cache=True, nogil=True)
def _householder_tridiagonal(a):
    """Reduce a complex Hermitian matrix (overwritten) to real ``(d, e)``.

    Step ``k`` reflects ``x = A[k+1:, k]`` onto ``alpha e_1`` with
    ``v = (x - alpha e_1)/|x - alpha e_1|`` and applies the rank-two update
    ``A <- A - 2 (v w^* + w v^*)``, ``w = p - (v^* p) v``, ``p = A v``.
    A diagonal unitary similarity finally makes the off-diagonal ``|e_k|``.
    """
    n = a.shape[0]
    e = np.zeros(n - 1, dtype=np.complex128)
    for k in range(n - 2):
        m = n - k - 1
        x0 = a[k + 1, k]
        norm2 = 0.0
        for i in range(k + 1, n):
            norm2 += a[i, k].real ** 2 + a[i, k].imag ** 2
        xnorm = math.sqrt(norm2)
        if xnorm == 0.0:
            e[k] = 0.0
            continue
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 > 0.0 else 1.0 + 0.0j
        alpha = -phase * xnorm
        v = np.empty(m, dtype=np.complex128)
        for i in range(m):
            v[i] = a[k + 1 + i, k]
        v[0] -= alpha
        vn = 0.0
        for i in range(m):
            vn += v[i].real ** 2 + v[i].imag ** 2
        vn = math.sqrt(vn)
        if vn == 0.0:
            e[k] = x0
            continue
        for i in range(m):
            v[i] /= vn
        p = np.zeros(m, dtype=np.complex128)
        for i in range(m):
            acc = 0.0 + 0.0j
            for j in range(m):
                acc += a[k + 1 + i, k + 1 + j] * v[j]
            p[i] = acc
        kk = 0.0 + 0.0j
        for i in range(m):
            kk += v[i].conjugate() * p[i]
        w = np.empty(m, dtype=np.complex128)
        for i in range(m):
            w[i] = p[i] - kk.real * v[i]
        for i in range(m):
            vi2 = 2.0 * v[i]
            wi2 = 2.0 * w[i]
            for j in range(m):
                a[k + 1 + i, k + 1 + j] -= vi2 * w[j].conjugate() + wi2 * v[j].conjugate()
        e[k] = alpha
    if n >= 2:
        e[n - 2] = a[n - 1, n - 2]
    d = np.empty(n)
    for i in range(n):
        d[i] = a[i, i].real
    off = np.empty(n - 1)
    for i in range(n - 1):
        off[i] = abs(e[i])
    return d, off


@numba.njit(cache=True, nogil=True)
def _tqli(d, e, max_iter):
    """Eigenvalues of the symmetric tridiagonal ``(d, e)`` by implicit-shift QL.

    Returns the number of iterations used, or ``-1`` when ``max_iter`` is exceeded.
    ``d`` is overwritten with the (unsorted) eigenvalues.
    """
    n = d.size
    ee = np.zeros(n)
    ee[: n - 1] = e
    total = 0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(ee[m]) <= 2.220446049250313e-16 * dd:
                    break
                m += 1
            if m == l:
                break
            total += 1
            if total > max_iter:
                return -1
            g = (d[l + 1] - d[l]) / (2.0 * ee[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + ee[l] / (g + (r if g >= 0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * ee[i]
                b = c * ee[i]
                r = math.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ee[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow and i >= l:
                continue
            d[l] -= p
            ee[l] = g
            ee[m] = 0.0
    return total


def tridiagonal_eigenvalues(d, e) -> np.ndarray:
    """Sorted eigenvalues of a real symmetric tridiagonal matrix."""
    d = np.array(d, dtype=float)
    e = np.asarray(e, dtype=float)
    if e.size != max(d.size - 1, 0):
        raise ValueError("off-diagonal must have n - 1 entries")
    if d.size == 0:
        return d
    if _tqli(d, e, 30 * d.size) < 0:
        raise EigenError(f"QL iteration did not converge in {30 * d.size} steps")
    return np.sort(d)


def hermitian_eigenvalues(a) -> np.ndarray:
    """Sorted eigenvalues of a complex Hermitian matrix (in-house solver)."""
    a = np.array(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if np.max(np.abs(a - a.conj().T), initial=0.0) > 1e-12 * scale:
        raise ValueError("matrix must be Hermitian")
    if a.shape[0] == 1:
        return np.array([a[0, 0].real])
    d, e = _householder_tridiagonal(a)
    return tridiagonal_eigenvalues(d, e)


@dataclass(frozen=True)
class SpectralSample:
    """Pooled eigenvalues of ``n_trials`` matrices of size ``n_dim`` (sorted within each trial)."""

    n_dim: int
    n_trials: int
    eigenvalues: np.ndarray
    seed: int
    r: float = 1.0

    def __post_init__(self):
        if self.eigenvalues.size != self.n_dim * self.n_trials:
            raise ValueError("eigenvalue count must equal n_dim * n_trials")

    def trial(self, k: int) -> np.ndarray:
        return self.eigenvalues[k * self.n_dim:(k + 1) * self.n_dim]


def gue(n: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian Gaussian matrix: off-diagonal ``(X + iY)/sqrt(2n)``, diagonal ``N(0, 1/n)``."""
    x = rng.standard_normal((n, n))
    y = rng.standard_normal((n, n))
    z = (x + 1j * y) / math.sqrt(2.0 * n)
    h = np.triu(z, 1)
    h = h + h.conj().T
    h[np.diag_indices(n)] = rng.standard_normal(n) / math.sqrt(n)
    return h


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("FREEWASS_WORKERS", "1")))
    except ValueError:
        return 1


def sample_deformed_gue(m, r: float, n_dim: int, n_trials: int, seed: int,
                        workers: int | None = None) -> SpectralSample:
    """Eigenvalues of ``diag(q_mu((i + 1/2)/n)) + sqrt(r) H`` over independent trials."""
    if n_dim < MIN_DIM:
        raise ValueError(f"n_dim must be >= {MIN_DIM}")
    if n_trials < 1:
        raise ValueError("n_trials must be positive")
    if not r > 0:
        raise ValueError("r must be positive")
    diag = quantile(m, (np.arange(n_dim) + 0.5) / n_dim)
    streams = np.random.SeedSequence(int(seed)).spawn(n_trials)
    root = math.sqrt(r)

    def one(k):
        rng = np.random.Generator(np.random.PCG64(streams[k]))
        a = root * gue(n_dim, rng)
        a[np.diag_indices(n_dim)] += diag
        return hermitian_eigenvalues(a)

    workers = workers or _workers()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(one, range(n_trials)))
    else:
        parts = [one(k) for k in range(n_trials)]
    return SpectralSample(n_dim, n_trials, np.concatenate(parts), int(seed), float(r))


def ks_distance(sample: SpectralSample, m) -> float:
    """Kolmogorov-Smirnov distance between the pooled empirical law and ``m``."""
    x = np.sort(sample.eigenvalues)
    n = x.size
    f = cdf(m, x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def empirical_w2(sample: SpectralSample, m) -> float:
    """``W_2`` between the pooled empirical law and ``m`` (quantile coupling at midpoints)."""
    x = np.sort(sample.eigenvalues)
    u = (np.arange(x.size) + 0.5) / x.size
    return float(np.sqrt(np.mean((x - quantile(m, u)) ** 2)))


def compare_spectrum(sample: SpectralSample, m, ks_threshold: float = 0.03,
                     w2_threshold: float = 0.05, measure_id: str = ""):
    """KS and ``W_2`` records (each passes when below its threshold)."""
    params = {"n_dim": sample.n_dim, "n_trials": sample.n_trials, "seed": sample.seed,
              "r": sample.r}
    mid = measure_id or getattr(m, "label", "")
    return [
        inequality("check_rmt_spectrum", ANCHOR_RMT, mid, dict(params, statistic="ks"),
                   ks_distance(sample, m), ks_threshold, 0.0),
        inequality("check_rmt_spectrum", ANCHOR_RMT, mid, dict(params, statistic="w2"),
                   empirical_w2(sample, m), w2_threshold, 0.0),
    ]


def write_eigenvalue_csv(sample: SpectralSample, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "index", "eigenvalue"])
        for k in range(sample.n_trials):
            for i, lam in enumerate(sample.trial(k)):
                w.writerow([k, i, f"{lam:.16e}"])
