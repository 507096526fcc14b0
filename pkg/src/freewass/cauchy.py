"""Cauchy transforms, Stieltjes inversion, Hilbert transforms and Cauchy smoothing.

Convention: ``G(z) = int dmu(x) / (z - x)`` and, on the real axis,
``G(x + i0) = pi Hp(x) - i pi p(x)``, i.e. ``Hp = Re G(x+i0) / pi`` and
``p = -Im G(x+i0) / pi``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kernels import trapezoid_weights
from .measure import DEFAULT_N_GRID, GridMeasure, MeasureError


class InversionError(RuntimeError):
    """Raised when boundary values do not define a density."""


def cauchy_transform(m, z):
    """``G(z) = int dmu(x) / (z - x)`` for ``Im z > 0``.

    Parameters
    ----------
    m : GridMeasure or AtomicMeasure
    z : complex or array of complex, strictly in the upper half-plane

    Returns
    -------
    complex or ndarray of complex
    """
    za = np.asarray(z, dtype=complex)
    if np.any(za.imag <= 0):
        raise ValueError("cauchy_transform needs Im z > 0")
    g, _ = m.cauchy_pair(za)
    return complex(g) if g.ndim == 0 else g


@dataclass(frozen=True)
class BoundaryTransform:
    """Values ``G(x_j + i eps)`` on a real grid.

    ``epsilon == 0`` means exact boundary values ``G(x_j + i0)``.  When
    ``extrapolated`` is set, ``g_half`` holds ``G(x_j + i eps/2)`` and the
    boundary limit is estimated by the linear Richardson combination
    ``2 G(eps/2) - G(eps)``.
    """

    grid: np.ndarray
    epsilon: float
    g_values: np.ndarray
    extrapolated: bool = False
    g_half: Optional[np.ndarray] = None
    sqrt_edges: tuple = (False, False)

    @property
    def limit(self) -> np.ndarray:
        if self.extrapolated:
            return 2.0 * self.g_half - self.g_values
        return self.g_values

    @property
    def density(self) -> np.ndarray:
        return -self.limit.imag / math.pi

    @property
    def hilbert(self) -> np.ndarray:
        return self.limit.real / math.pi


def boundary_transform(m, grid=None, epsilon: Optional[float] = None,
                       extrapolate: bool = True) -> BoundaryTransform:
    """Evaluate ``G`` just above a real grid.

    Parameters
    ----------
    m : measure
    grid : array, optional
        Real nodes; defaults to the grid of a GridMeasure.
    epsilon : float, optional
        Height above the axis; default four grid spacings.  ``0`` requests
        exact boundary values (no extrapolation).
    extrapolate : bool
        Also evaluate at ``epsilon / 2`` for Richardson extrapolation.
    """
    if grid is None:
        if not isinstance(m, GridMeasure):
            raise ValueError("a grid is required for atomic measures")
        grid = m.nodes
        edges = m.sqrt_edges
    else:
        edges = (False, False)
    grid = np.asarray(grid, dtype=float)
    h = (grid[-1] - grid[0]) / (grid.size - 1)
    if epsilon is None:
        epsilon = 4.0 * h
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if epsilon == 0:
        if isinstance(m, GridMeasure) and grid is m.nodes:
            g = np.array(m.boundary)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                g, _ = m.cauchy_pair(grid + 0j)
        return BoundaryTransform(grid, 0.0, g, False, None, edges)
    g, _ = m.cauchy_pair(grid + 1j * epsilon)
    g_half = None
    if extrapolate:
        g_half, _ = m.cauchy_pair(grid + 0.5j * epsilon)
    return BoundaryTransform(grid, float(epsilon), g, bool(extrapolate), g_half, edges)


def stieltjes_invert(bt: BoundaryTransform, mass_tolerance: float = 0.01,
                     label: str = "") -> GridMeasure:
    """Density ``-Im G(x + i0) / pi`` recovered from boundary values.

    The (extrapolated) density is clipped at zero and renormalized; the factor
    is stored on the result.  Inputs without a density limit -- atoms, whose
    boundary values blow up like ``1 / eps`` -- are rejected: either the mass
    misses 1 by more than ``mass_tolerance``, or the two epsilon levels
    disagree by more than a quarter of the peak density.
    """
    p = np.clip(bt.density, 0.0, None)
    p[~np.isfinite(p)] = 0.0
    if bt.extrapolated:
        p_eps = -bt.g_values.imag / math.pi
        p_half = -bt.g_half.imag / math.pi
        peak = max(p.max(), 1e-300)
        if np.max(np.abs(p_half - p_eps)) > 0.25 * peak:
            raise InversionError("boundary values do not converge as epsilon -> 0 (atoms?)")
    x = bt.grid
    h = (x[-1] - x[0]) / (x.size - 1)
    mass = float(trapezoid_weights(x.size, h, bt.sqrt_edges) @ p)
    if not abs(mass - 1.0) <= mass_tolerance:
        raise InversionError(f"inverted mass {mass:.6g} deviates from 1 by more than {mass_tolerance:g}")
    return GridMeasure(x[0], x[-1], p / mass, sqrt_edges=bt.sqrt_edges,
                       renormalization=1.0 / mass, label=label)


def hilbert_density(m: GridMeasure) -> np.ndarray:
    """``Hp`` at the grid nodes, from exact boundary values of ``G``.

    Uses the closed-form transform when the measure carries one, otherwise
    the exact transform of the piecewise-linear interpolant.
    """
    if not isinstance(m, GridMeasure):
        raise MeasureError("hilbert_density needs a GridMeasure")
    return m.boundary.real / math.pi


def cauchy_smooth(m, lam: float, n_grid: int = DEFAULT_N_GRID, window: float = 50.0,
                  label: str = "") -> GridMeasure:
    """Density of ``X + lam C`` (``C`` standard Cauchy) on a bounded window.

    The smoothed density is ``-Im G(x + i lam) / pi``.  It is sampled on
    ``[lo - window lam, hi + window lam]``; the mass outside the window is
    stored as ``truncated_mass`` and the density renormalized.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    lo = m.support_lo - window * lam
    hi = m.support_hi + window * lam
    x = np.linspace(lo, hi, n_grid)
    g, _ = m.cauchy_pair(x + 1j * lam)
    p = -g.imag / math.pi
    captured = float(trapezoid_weights(n_grid, (hi - lo) / (n_grid - 1)) @ p)
    return GridMeasure(lo, hi, p / captured, truncated_mass=1.0 - captured,
                       renormalization=1.0 / captured,
                       label=label or (f"smooth({m.label},{lam:g})" if m.label else ""))


def write_boundary_csv(bt: BoundaryTransform, path) -> None:
    """Dump ``x, Re G, Im G, epsilon`` rows."""
    g = bt.limit
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "re_g", "im_g", "epsilon"])
        for x, gv in zip(bt.grid, g):
            w.writerow([f"{x:.16e}", f"{gv.real:.16e}", f"{gv.imag:.16e}", f"{bt.epsilon:.16e}"])


__all__ = [
    "BoundaryTransform", "InversionError", "boundary_transform", "cauchy_smooth",
    "cauchy_transform", "hilbert_density", "stieltjes_invert", "write_boundary_csv",
]
