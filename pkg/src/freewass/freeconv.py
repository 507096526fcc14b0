"""Free convolution with semicircle laws and the free Ornstein-Uhlenbeck flow.

For a probability measure ``mu`` and ``r > 0`` the Cauchy transform of
``mu [+] sigma_r`` (``sigma_r`` the centred semicircle of variance ``r``) is

    G_r(z) = G_mu(omega(z)),    omega(z) + r G_mu(omega(z)) = z,

with ``omega`` the unique solution in the upper half-plane.  Read as an
equation for the starting point ``z0 = omega`` of the straight line
``z = z0 + r G_mu(z0)``, this is the method of characteristics for the complex
Burgers equation ``dG/dr + G dG/dz = 0``.

The free OU process started at ``X`` has law

    X(t) = exp(-t/2) X + sqrt(1 - exp(-t)) S,

computed as a dilation by ``exp(-t/2)`` followed by ``[+] sigma_{1 - exp(-t)}``.
"""

from __future__ import annotations

import csv
import math
import threading
import warnings
from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .cauchy import BoundaryTransform
from .measure import AtomicMeasure, GridMeasure, DEFAULT_N_GRID, dilate

DAMPING = 0.5
LADDER_RATIO = 0.25
NEWTON_TOL = 2e-12
STALL_STEP = 1e-12


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver does not converge."""


def _radius(m) -> float:
    return max(abs(m.support_lo), abs(m.support_hi))


def _upper(w):
    """Force a nonnegative (and +0.0, never -0.0) imaginary part."""
    return w.real + 1j * (np.maximum(w.imag, 0.0) + 0.0)


# -- subordination by damped fixed point --------------------------------------

def free_convolve_semicircle(m, r: float, z, damping: float = DAMPING, tol: float = 1e-14,
                             max_iter: int = 20000, ratio: float = 0.5, noise: float = 1e-11):
    """``G_{mu [+] sigma_r}(z)`` by damped subordination iteration.

    Iterates ``w <- (1 - damping) w + damping G_mu(z - r w)`` starting at
    ``Im z = 8 max(1, radius)`` and stepping ``Im z`` down geometrically to the
    target, each level warm-started from the previous one.  A level ends when
    the a-posteriori error bound ``delta q / (1 - q)`` (``q`` the observed
    contraction rate) drops below ``tol``, or when the iteration stalls on the
    rounding floor of the Cauchy transform below ``noise``.

    Parameters
    ----------
    m : measure
    r : float
        Variance of the semicircular summand, ``r > 0``.
    z : complex or array, ``Im z > 0``

    Raises
    ------
    ConvergenceError
        If a continuation level does not converge within ``max_iter``.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    za = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(za.imag <= 0):
        raise ValueError("free_convolve_semicircle needs Im z > 0")
    y0 = 8.0 * max(1.0, _radius(m))
    target = za.imag
    levels = []
    y = y0
    while np.any(y > target):
        levels.append(y)
        y *= ratio
    w = 1.0 / (za.real + 1j * max(y0, target.max()))
    for y in levels + [None]:
        zk = za if y is None else za.real + 1j * np.maximum(y, target)
        done = np.zeros(za.shape, dtype=bool)
        prev = np.full(za.shape, np.nan)
        for _ in range(max_iter):
            g, _ = m.cauchy_pair(zk - r * w)
            new = (1.0 - damping) * w + damping * g
            delta = np.abs(new - w)
            w = new
            scale = 1.0 + np.abs(w)
            with np.errstate(divide="ignore", invalid="ignore"):
                q = delta / prev
                # a-posteriori error of a contraction with rate q is delta q / (1 - q);
                # once q stops dropping below 1 the iterate sits on the rounding floor
                small = (q < 1) & (delta * q / (1.0 - q) <= tol * scale)
            prev = delta
            done |= (delta <= tol * scale) | small | ((q >= 1) & (delta <= noise * scale))
            if np.all(done):
                break
        else:
            raise ConvergenceError("subordination iteration did not converge; refine continuation")
    return complex(w[0]) if np.ndim(z) == 0 else w.reshape(np.shape(z))


# -- characteristics -------------------------------------------------------------

def _newton(m, r, z, w, tol=NEWTON_TOL, max_iter=60):
    """Newton on ``F(w) = w + r G(w) - z`` keeping ``Im w >= Im z``.

    Returns the iterate and a convergence mask.
    """
    w = _upper(w.astype(complex))
    ok = np.zeros(z.shape, bool)
    floor = np.maximum(z.imag, 0.0)
    scale = 1.0 + np.abs(z)
    active = np.arange(z.size)
    for _ in range(max_iter):
        if active.size == 0:
            break
        wa = w[active]
        g, dg = m.cauchy_pair(wa)
        F = wa + r * g - z[active]
        done = np.abs(F) <= tol * scale[active]
        ok[active[done]] = True
        keep = ~done
        active, wa, F, dg = active[keep], wa[keep], F[keep], dg[keep]
        if active.size == 0:
            break
        step = F / (1.0 + r * dg)
        step[~np.isfinite(step)] = 0.0
        lam = np.ones(active.size)
        new = wa - step
        for _ in range(40):
            bad = new.imag < floor[active]
            if not bad.any():
                break
            lam[bad] *= 0.5
            new[bad] = wa[bad] - lam[bad] * step[bad]
        new = np.where(new.imag < floor[active], new.real + 1j * floor[active], new)
        # roundoff floor: the step has stopped moving and the residual is small
        stalled = (np.abs(new - wa) <= STALL_STEP * (1.0 + np.abs(wa))) & (
            np.abs(F) <= 1e-9 * scale[active])
        w[active] = _upper(new)
        ok[active[stalled]] = True
        active = active[~stalled]
    return w, ok


def _ladder(m, r, z, w_start=None):
    """Newton continuation from large ``Im z`` down to the target."""
    y0 = 8.0 * max(1.0, _radius(m), math.sqrt(r))
    floor = 1e-14 * max(1.0, _radius(m))
    target = z.imag
    zk = z.real + 1j * np.maximum(y0, target)
    w = zk - r / zk if w_start is None else w_start
    y = y0
    while True:
        zk = z.real + 1j * np.maximum(y, target)
        w, ok = _newton(m, r, zk, w)
        if np.all(target >= y) or y < floor:
            break
        y *= LADDER_RATIO
    w, ok = _newton(m, r, z, w)
    return w, ok


def solve_subordination(m, r: float, z, guess=None):
    """``omega(z)`` solving ``omega + r G_mu(omega) = z`` (``Im z >= 0``).

    Uses Newton's method.  With a ``guess`` it first tries a direct solve and
    falls back to continuation in ``Im z`` for nonconverged points.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = _upper(z.ravel())
    if guess is not None:
        w, ok = _newton(m, r, z, np.asarray(guess, dtype=complex).ravel())
        # a converged iterate must satisfy Im w >= Im z (Herglotz branch)
        ok &= w.imag >= z.imag
        if not ok.all():
            idx = np.flatnonzero(~ok)
            w2, ok2 = _ladder(m, r, z[idx])
            w[idx] = w2
            ok[idx] = ok2
    else:
        w, ok = _ladder(m, r, z)
    if not ok.all():
        raise ConvergenceError(f"{(~ok).sum()} points did not converge in the characteristic solve")
    return w.reshape(shape)


def _solve_on_line(m, r, x, coarse: int = 129):
    """``omega(x + i0)`` on a sorted real grid, coarse to fine."""
    n = x.size
    if n <= coarse:
        return solve_subordination(m, r, x + 0j)
    sizes = []
    k = coarse
    while k < n:
        sizes.append(k)
        k = 2 * k - 1
    idx = np.unique(np.linspace(0, n - 1, sizes[0]).round().astype(int))
    w_sub = solve_subordination(m, r, x[idx] + 0j)
    for size in sizes[1:] + [n]:
        nxt = np.unique(np.linspace(0, n - 1, size).round().astype(int))
        guess = np.interp(x[nxt], x[idx], w_sub.real) + 1j * np.interp(x[nxt], x[idx], w_sub.imag)
        w_sub = solve_subordination(m, r, x[nxt] + 0j, guess=guess)
        idx = nxt
    return w_sub


def _atomic_roots(m: AtomicMeasure, r: float, z: complex):
    """All roots of ``(z0 - z) prod(z0 - a_i) + r sum w_i prod_{j!=i}(z0 - a_j)``."""
    a = m.locations
    poly = np.poly1d(np.poly(a)) * np.poly1d([1.0, -z])
    for i, wi in enumerate(m.weights):
        poly = poly + r * wi * np.poly1d(np.poly(np.delete(a, i)))
    return np.roots(poly.coeffs)


def burgers_characteristics(m, r: float, z, return_root: bool = False):
    """``G_{mu [+] sigma_r}(z)`` by following the characteristic through ``z``.

    Solves ``z = z0 + r G_mu(z0)`` for the foot point ``z0`` in the upper
    half-plane and returns ``G_mu(z0)``.  For atomic ``mu`` the equation is a
    polynomial and all roots are computed; the upper-half-plane root (the one
    continued from ``Im z -> infinity``) is selected and polished.  Otherwise
    Newton's method with continuation in ``Im z`` is used.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    za = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(za.imag <= 0):
        raise ValueError("burgers_characteristics needs Im z > 0")
    if isinstance(m, AtomicMeasure):
        z0 = np.empty_like(za)
        for k, zk in enumerate(za):
            roots = _atomic_roots(m, r, zk)
            upper = roots[roots.imag > 1e-10 * (1.0 + abs(zk))]
            if upper.size != 1:
                warnings.warn(f"characteristic root ambiguity at z={zk}: {upper.size} upper roots")
            z0[k] = roots[np.argmax(roots.imag)]
        z0, ok = _newton(m, r, za, z0)
    else:
        z0 = solve_subordination(m, r, za)
    g, _ = m.cauchy_pair(z0)
    if np.ndim(z) == 0:
        g, z0 = complex(g[0]), complex(z0[0])
    else:
        g, z0 = g.reshape(np.shape(z)), z0.reshape(np.shape(z))
    return (g, z0) if return_root else g


# -- support of mu [+] sigma_r ------------------------------------------------------

def support_edges(m, r: float):
    """End points of the support of ``mu [+] sigma_r``.

    Outside the support, ``omega`` is real; the edges are the images
    ``u + r G_mu(u)`` of the points ``u`` beyond the support of ``mu`` where
    ``r int dmu(a) / (u - a)^2 = 1``.

    Returns
    -------
    (x_left, x_right, u_left, u_right)
    """
    a, b = m.support_lo, m.support_hi
    scale = max(1.0, b - a, math.sqrt(r))
    lo_log = math.log(1e-12 * scale)
    hi_log = math.log(4.0 * (math.sqrt(r) + (b - a)) + 1.0)

    def slope(u):
        _, dg = m.cauchy_pair(np.array([u + 0j]))
        return -r * dg[0].real - 1.0

    out = []
    for side in (-1.0, 1.0):
        anchor = a if side < 0 else b

        def f(tau):
            return slope(anchor + side * math.exp(tau))

        if f(lo_log) <= 0:
            u = anchor + side * math.exp(lo_log)
        else:
            u = anchor + side * math.exp(brentq(f, lo_log, hi_log, xtol=1e-15, rtol=1e-15))
        g, _ = m.cauchy_pair(np.array([u + 0j]))
        out.append((u + r * g[0].real, u))
    (xl, ul), (xr, ur) = out
    return xl, xr, ul, ur


# -- free convolution on a grid ---------------------------------------------------

def _subordinated_transform(m, r, seed_x=None, seed_w=None):
    """Closure ``z -> (G_r(z), G_r'(z))`` through the subordination function."""

    def transform(z):
        z = np.asarray(z, dtype=complex)
        guess = None
        if seed_x is not None:
            guess = np.interp(z.real, seed_x, seed_w.real) + 1j * (
                np.interp(z.real, seed_x, seed_w.imag) + z.imag)
        w = solve_subordination(m, r, z, guess=guess)
        g, dg = m.cauchy_pair(w)
        with np.errstate(divide="ignore", invalid="ignore"):
            dg_r = dg / (1.0 + r * dg)
        return g, dg_r

    return transform


def free_convolution(m, r: float, n_grid: int = DEFAULT_N_GRID, label: str = ""):
    """``mu [+] sigma_r`` as a GridMeasure on its exact support.

    The grid runs between the two support edges, where the density vanishes
    like a square root.  The density and boundary values are evaluated from
    the subordination function on the real axis; the returned measure
    carries a transform closure for further evaluations off the grid.

    Returns
    -------
    measure : GridMeasure
    omega : ndarray
        Subordination function at the grid nodes.
    """
    if r == 0:
        return m, None
    xl, xr, ul, ur = support_edges(m, r)
    x = np.linspace(xl, xr, n_grid)
    w = np.empty(n_grid, complex)
    w[1:-1] = _solve_on_line(m, r, x[1:-1])
    w[0], w[-1] = ul + 0j, ur + 0j
    g, _ = m.cauchy_pair(w)
    p = np.clip(-g.imag / math.pi, 0.0, None)
    p[0] = p[-1] = 0.0
    g[0], g[-1] = g[0].real + 0j, g[-1].real + 0j
    out = GridMeasure(xl, xr, p, sqrt_edges=(True, True), total_mass_tolerance=1e-4,
                      transform=_subordinated_transform(m, r, x, w), boundary_values=g,
                      label=label)
    return out, w


@dataclass(frozen=True, eq=False)
class FlowState:
    """Law of ``X(t)`` along the free OU flow.

    Attributes
    ----------
    t : float
    measure : GridMeasure
    boundary : BoundaryTransform
        Exact boundary values ``G(x + i0)`` on the measure grid.
    r_effective : float
        ``1 - exp(-t)``, the semicircular variance added after rescaling.
    omega : ndarray or None
        Subordination function on the grid.
    """

    t: float
    measure: GridMeasure
    boundary: BoundaryTransform
    r_effective: float
    omega: Optional[np.ndarray] = None


_FLOW_CACHE: "OrderedDict[tuple, tuple]" = OrderedDict()
FLOW_CACHE_SIZE = 48
_FLOW_LOCK = threading.Lock()


def ou_flow(m0, t: float, n_grid: int = DEFAULT_N_GRID) -> FlowState:
    """Law of ``exp(-t/2) X + sqrt(1 - exp(-t)) S`` for ``X ~ m0``.

    Results are memoized per (measure object, t, n_grid); measures are
    immutable, so this is invisible apart from speed.
    """
    key = (id(m0), float(t), int(n_grid))
    with _FLOW_LOCK:
        hit = _FLOW_CACHE.get(key)
        if hit is not None and hit[0] is m0:
            _FLOW_CACHE.move_to_end(key)
            return hit[1]
    state = _ou_flow(m0, t, n_grid)
    with _FLOW_LOCK:
        _FLOW_CACHE[key] = (m0, state)
        while len(_FLOW_CACHE) > FLOW_CACHE_SIZE:
            _FLOW_CACHE.popitem(last=False)
    return state


def _ou_flow(m0, t, n_grid):
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        if not isinstance(m0, GridMeasure):
            raise ValueError("the flow at t=0 of an atomic measure has no density")
        bt = BoundaryTransform(m0.nodes, 0.0, np.array(m0.boundary), False, None, m0.sqrt_edges)
        return FlowState(0.0, m0, bt, 0.0, None)
    r = -math.expm1(-t)
    scaled = dilate(m0, math.exp(-0.5 * t))
    label = f"ou({m0.label},{t:g})" if m0.label else ""
    meas, w = free_convolution(scaled, r, n_grid=n_grid, label=label)
    bt = BoundaryTransform(meas.nodes, 0.0, np.array(meas.boundary), False, None, (True, True))
    return FlowState(float(t), meas, bt, r, w)


def flow_transform(m0, t: float, z):
    """``G(t, z)``, the Cauchy transform of ``X(t)``, for ``Im z >= 0``."""
    z = np.asarray(z, dtype=complex)
    if t == 0:
        return m0.cauchy_pair(z)[0]
    r = -math.expm1(-t)
    scaled = dilate(m0, math.exp(-0.5 * t))
    w = solve_subordination(scaled, r, z)
    return scaled.cauchy_pair(w)[0]


def burgers_residual(m0, t: float, z, dt: float = 1e-3, dz: float = 1e-3):
    """Residual of ``dG/dt + (G - z/2) dG/dz - G/2`` along the OU flow.

    Derivatives are central differences of step ``dt`` in time and ``dz``
    along the real direction (``G`` is analytic in ``z``).
    """
    if not t > dt:
        raise ValueError("need t > dt")
    z = np.asarray(z, dtype=complex)
    g = flow_transform(m0, t, z)
    g_t = (flow_transform(m0, t + dt, z) - flow_transform(m0, t - dt, z)) / (2 * dt)
    g_z = (flow_transform(m0, t, z + dz) - flow_transform(m0, t, z - dz)) / (2 * dz)
    return g_t + (g - 0.5 * z) * g_z - 0.5 * g


def write_flow_csv(states, path) -> None:
    """Rows ``t, x, p, Hp`` with one block per flow state."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "p", "hp"])
        for st in states:
            hp = st.boundary.hilbert
            for x, p, h in zip(st.measure.nodes, st.measure.density, hp):
                w.writerow([f"{st.t:.16e}", f"{x:.16e}", f"{p:.16e}", f"{h:.16e}"])
