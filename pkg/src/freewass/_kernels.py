"""Integration kernels for piecewise-linear densities on uniform grids.

A grid density ``p_0, ..., p_{n-1}`` on nodes ``x_m = x_0 + m h`` is read as
the continuous piecewise-linear interpolant ``sum_m p_m hat_m(x)``.  Every
transform below is exact for that interpolant, so the only error left is the
interpolation error of the density itself.

Densities that vanish like a square root at both grid ends additionally get a
reference part ``sqrt((x-a)(b-x)) (c0 + c1 t)`` subtracted first; its
transforms are closed form and the remainder vanishes like ``s**1.5``.
"""

import cmath
import math

import numba
import numpy as np
from scipy.signal import fftconvolve
from scipy.special import zeta

# Navot correction for trapezoid sums of f(x) = sqrt(x) g(x)
ZETA_HALF = float(zeta(-0.5))

# reassociation only: signed zeros must survive (they select boundary branches)
FAST_FLAGS = {"reassoc", "contract", "arcp", "afn"}

FAR_FIELD = 4
SERIES_TERMS = 12
# |w| > 16: 1/16**14 is below double precision
HALF_TERMS = 14


def _xlogx(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    nz = u != 0
    out[nz] = u[nz] * np.log(np.abs(u[nz]))
    return out


def _safe_log_abs(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    nz = u != 0
    out[nz] = np.log(np.abs(u[nz]))
    return out


# -- quadrature -----------------------------------------------------------

def trapezoid_weights(n, h, sqrt_edges=(False, False)):
    """Trapezoid weights, with the two-term Navot correction on sqrt edges."""
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    c = ZETA_HALF * h
    if sqrt_edges[0]:
        w[1] -= 2.0 * c
        w[2] += c / math.sqrt(2.0)
    if sqrt_edges[1]:
        w[-2] -= 2.0 * c
        w[-3] += c / math.sqrt(2.0)
    return w


# -- semicircle reference ---------------------------------------------------

def edge_reference(lo, hi, p):
    """Coefficients (c0, c1) of the sqrt-edge reference matching ``p``.

    The edge coefficient ``c`` in ``p ~ c sqrt(s)`` is taken from the first
    two interior nodes with the O(s) correction eliminated.
    """
    n = p.size
    h = (hi - lo) / (n - 1)
    span = hi - lo
    c_left = 2.0 * p[1] / math.sqrt(h) - p[2] / math.sqrt(2.0 * h)
    c_right = 2.0 * p[-2] / math.sqrt(h) - p[-3] / math.sqrt(2.0 * h)
    c0 = (c_left + c_right) / (2.0 * math.sqrt(span))
    c1 = (c_right - c_left) / (2.0 * math.sqrt(span))
    return c0, c1


def reference_density(lo, hi, c0, c1, x):
    t = (2.0 * x - lo - hi) / (hi - lo)
    root = np.sqrt(np.clip((x - lo) * (hi - x), 0.0, None))
    return root * (c0 + c1 * t)


def reference_hilbert(lo, hi, c0, c1, x):
    half = 0.5 * (hi - lo)
    t = (2.0 * x - lo - hi) / (hi - lo)
    return half * (c0 * t + 0.5 * c1 * (2.0 * t * t - 1.0))


def reference_log_potential(lo, hi, c0, c1, x):
    half = 0.5 * (hi - lo)
    t = (2.0 * x - lo - hi) / (hi - lo)
    return half * half * (
        c0 * 0.5 * math.pi * (math.log(half) + t * t - 0.5 - math.log(2.0))
        + c1 * math.pi * (t ** 3 / 3.0 - 0.5 * t)
    )


def reference_cauchy(lo, hi, c0, c1, z):
    """Cauchy transform and derivative of the reference part (Im z >= 0)."""
    half = 0.5 * (hi - lo)
    zeta_ = (2.0 * z - lo - hi) / (hi - lo)
    root = np.sqrt(zeta_ - 1.0) * np.sqrt(zeta_ + 1.0)
    # zeta - root, written without cancellation for large |zeta|
    q = 1.0 / (zeta_ + root)
    g = half * math.pi * (c0 * q + 0.5 * c1 * q * q)
    with np.errstate(divide="ignore", invalid="ignore"):
        dq = -q / root
    dg = math.pi * (c0 + c1 * q) * dq
    return g, dg


# -- on-grid Toeplitz transforms -------------------------------------------

def _hilbert_full(d):
    return _xlogx(d + 1.0) - 2.0 * _xlogx(d) + _xlogx(d - 1.0)


def _hilbert_right_half(d):
    return _xlogx(d - 1.0) - _xlogx(d) + _safe_log_abs(d) + 1.0


def _hilbert_left_half(d):
    return _xlogx(d + 1.0) - _xlogx(d) - _safe_log_abs(d) - 1.0


def pl_hilbert_on_grid(p):
    """``pi * Hp`` at the grid nodes for the piecewise-linear interpolant.

    The result is dimensionless in h.  At an end node carrying a jump the
    logarithmic singularity is replaced by its finite part.
    """
    n = p.size
    d = np.arange(-(n - 1), n, dtype=float)
    out = fftconvolve(p, _hilbert_full(d))[n - 1:2 * n - 1]
    j = np.arange(n, dtype=float)
    out -= p[0] * (_hilbert_full(j) - _hilbert_right_half(j))
    out -= p[-1] * (_hilbert_full(j - (n - 1)) - _hilbert_left_half(j - (n - 1)))
    return out


def _pot_a(u):
    return _xlogx(u) - u


def _pot_b(u):
    u = np.asarray(u, dtype=float)
    return 0.5 * u * _xlogx(u) - 0.25 * u * u


def _log_right_half(d):
    # int_0^1 (1 - v) log|d - v| dv
    return (1.0 - d) * (_pot_a(d) - _pot_a(d - 1.0)) + _pot_b(d) - _pot_b(d - 1.0)


def _log_left_half(d):
    # int_{-1}^0 (1 + v) log|d - v| dv
    return (1.0 + d) * (_pot_a(d + 1.0) - _pot_a(d)) - (_pot_b(d + 1.0) - _pot_b(d))


def pl_log_potential_on_grid(p, h):
    """``int p(y) log|x_j - y| dy`` at the nodes, exact for the interpolant."""
    n = p.size
    d = np.arange(-(n - 1), n, dtype=float)
    full = _log_right_half(d) + _log_left_half(d)
    out = fftconvolve(p, full)[n - 1:2 * n - 1]
    j = np.arange(n, dtype=float)
    out -= p[0] * _log_left_half(j)
    out -= p[-1] * _log_right_half(j - (n - 1))
    mass = h * (p.sum() - 0.5 * (p[0] + p[-1]))
    return h * out + mass * math.log(h)


# -- off-grid Cauchy transform ----------------------------------------------

@numba.njit(cache=True, fastmath=FAST_FLAGS)
def _far(iw, n_terms):
    """Hat-kernel moment series in ``iw = 1/w``: returns (K, dK/dw)."""
    iw2 = iw * iw
    g = 0j
    d = 0j
    for k in range(n_terms - 1, -1, -1):
        g = g * iw2 + 2.0 / ((2 * k + 1) * (2 * k + 2))
        d = d * iw2 + 1.0 / (k + 1)
    return iw * g, -iw2 * d


@numba.njit(cache=True, fastmath=FAST_FLAGS)
def _far_half(iw, left):
    """Moment series of an end half-hat (``left``: support to the right)."""
    sign = 1.0 if left else -1.0
    g = 0j
    d = 0j
    for k in range(HALF_TERMS - 1, -1, -1):
        c = sign ** k / ((k + 1) * (k + 2))
        g = g * iw + c
        d = d * iw + (k + 1) * c
    return iw * g, -iw * iw * d


@numba.njit(cache=True, fastmath=FAST_FLAGS)
def _pl_cauchy_kernel(z, x0, h, p, g_out, dg_out):
    n = p.size
    for i in range(z.size):
        zi = z[i]
        gs = 0j
        ds = 0j
        centre = (zi.real - x0) / h
        lo_near = max(1, int(math.floor(centre)) - FAR_FIELD)
        hi_near = min(n - 2, int(math.ceil(centre)) + FAR_FIELD)
        for m in range(1, n - 1):
            pm = p[m]
            if pm == 0.0:
                continue
            w = (zi - (x0 + m * h)) / h
            if m < lo_near or m > hi_near or abs(w) > 4.0 * FAR_FIELD:
                # far field: |Re w| > FAR_FIELD (or |w| large), series truncation below 1e-17
                iw = 1.0 / w
                if abs(w.real) < 16.0:
                    k, dk = _far(iw, SERIES_TERMS)
                    gs += pm * k
                    ds += pm * dk
                else:
                    iw2 = iw * iw
                    gs += pm * iw * (1.0 + iw2 * (1.0 / 6.0 + iw2 * (1.0 / 15.0 + iw2 * (
                        1.0 / 28.0 + iw2 / 45.0))))
                    ds -= pm * iw2 * (1.0 + iw2 * (0.5 + iw2 * (1.0 / 3.0 + iw2 * (
                        0.25 + iw2 * 0.2))))
            else:
                # near field: exact second difference of w log w
                lm = cmath.log(w - 1.0) if w != 1.0 else 0j
                l0 = cmath.log(w) if w != 0.0 else 0j
                lp = cmath.log(w + 1.0) if w != -1.0 else 0j
                gs += pm * ((w + 1.0) * lp - 2.0 * w * l0 + (w - 1.0) * lm)
                ds += pm * (lp - 2.0 * l0 + lm)
        # end nodes carry half hats
        for m in (0, n - 1):
            pm = p[m]
            if pm == 0.0:
                continue
            w = (zi - (x0 + m * h)) / h
            if abs(w) > 4.0 * FAR_FIELD:
                k, dk = _far_half(1.0 / w, m == 0)
                gs += pm * k
                ds += pm * dk
                continue
            l0 = cmath.log(w) if w != 0.0 else 0j
            inv = 1.0 / w if w != 0.0 else 0j
            if m == 0:
                lm = cmath.log(w - 1.0) if w != 1.0 else 0j
                gs += pm * ((w - 1.0) * lm - w * l0 + l0 + 1.0)
                ds += pm * (lm - l0 + inv)
            else:
                lp = cmath.log(w + 1.0) if w != -1.0 else 0j
                gs += pm * ((w + 1.0) * lp - w * l0 - l0 - 1.0)
                ds += pm * (lp - l0 - inv)
        g_out[i] = gs
        dg_out[i] = ds / h


def pl_cauchy(z, lo, h, p):
    """Cauchy transform and z-derivative of the interpolant at ``z``."""
    z = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    g = np.empty_like(z)
    dg = np.empty_like(z)
    _pl_cauchy_kernel(z, float(lo), float(h), np.ascontiguousarray(p, dtype=float), g, dg)
    return g, dg
