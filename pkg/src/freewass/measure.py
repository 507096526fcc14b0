"""Compactly supported probability measures on the real line.

Two representations are used throughout:

* :class:`GridMeasure` -- a density sampled on a uniform grid, read as its
  piecewise-linear interpolant.  Edges may be flagged as square-root edges
  (density vanishing like ``sqrt(distance)``), which switches on edge-corrected
  quadrature and an analytic reference part in every singular integral.
  A measure may additionally carry an exact Cauchy transform; all downstream
  code prefers it over quadrature when present.
* :class:`AtomicMeasure` -- finitely many weighted atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels

DEFAULT_N_GRID = 4096

TransformFn = Callable[[np.ndarray], "tuple[np.ndarray, np.ndarray]"]


class MeasureError(ValueError):
    """Raised on invalid measure construction."""


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Density on the uniform grid ``linspace(support_lo, support_hi, n_grid)``.

    Parameters
    ----------
    support_lo, support_hi : float
        Grid end points.
    density : array_like
        Nonnegative density values at the grid nodes.
    sqrt_edges : (bool, bool)
        Whether the density vanishes like a square root at the left/right end.
    total_mass_tolerance : float
        Accepted deviation of the total mass from 1.
    truncated_mass : float
        Mass discarded when the measure was cut down to a bounded support.
    renormalization : float
        Factor the density was multiplied with to restore unit mass.
    transform : callable, optional
        ``z -> (G(z), G'(z))`` for complex arrays with ``Im z >= 0``; boundary
        values at ``Im z = +0`` must be the limits from above.
    label : str
        Free-form identifier used in reports.
    boundary_values : array, optional
        Precomputed ``G(x_j + i0)`` at the nodes (e.g. from a solver).
    """

    support_lo: float
    support_hi: float
    density: np.ndarray
    sqrt_edges: tuple = (False, False)
    total_mass_tolerance: float = 1e-6
    truncated_mass: float = 0.0
    renormalization: float = 1.0
    transform: Optional[TransformFn] = field(default=None, repr=False)
    label: str = ""
    boundary_values: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "support_lo", float(self.support_lo))
        object.__setattr__(self, "support_hi", float(self.support_hi))
        object.__setattr__(self, "density", _readonly(self.density))
        object.__setattr__(self, "sqrt_edges", tuple(bool(e) for e in self.sqrt_edges))
        if not self.support_lo < self.support_hi:
            raise MeasureError("support_lo must be < support_hi")
        if self.density.ndim != 1 or self.density.size < 16:
            raise MeasureError("density must be a 1-d array with at least 16 nodes")
        if not np.all(np.isfinite(self.density)) or np.any(self.density < 0):
            raise MeasureError("density must be finite and nonnegative")
        mass = self.mass
        if abs(mass - 1.0) > self.total_mass_tolerance:
            raise MeasureError(
                f"total mass {mass:.10g} deviates from 1 by more than {self.total_mass_tolerance:g}"
            )

    # -- grid geometry ------------------------------------------------------
    @property
    def n_grid(self) -> int:
        return self.density.size

    @property
    def h(self) -> float:
        return (self.support_hi - self.support_lo) / (self.n_grid - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return _readonly(np.linspace(self.support_lo, self.support_hi, self.n_grid))

    @cached_property
    def weights(self) -> np.ndarray:
        return _readonly(_kernels.trapezoid_weights(self.n_grid, self.h, self.sqrt_edges))

    @property
    def mass(self) -> float:
        return float(self.weights @ self.density)

    def integrate(self, values) -> float:
        """Quadrature of ``values * density`` over the grid."""
        return float(self.weights @ (np.asarray(values) * self.density))

    # -- singular-integral helpers -----------------------------------------
    @property
    def has_reference(self) -> bool:
        return all(self.sqrt_edges)

    @cached_property
    def _reference(self):
        if not self.has_reference:
            return None
        c0, c1 = _kernels.edge_reference(self.support_lo, self.support_hi, self.density)
        rest = self.density - _kernels.reference_density(
            self.support_lo, self.support_hi, c0, c1, self.nodes)
        return c0, c1, rest

    def _pl_pair(self, z):
        ref = self._reference
        if ref is None:
            return _kernels.pl_cauchy(z, self.support_lo, self.h, self.density)
        c0, c1, rest = ref
        g, dg = _kernels.pl_cauchy(z, self.support_lo, self.h, rest)
        gr, dgr = _kernels.reference_cauchy(self.support_lo, self.support_hi, c0, c1, z)
        return g + gr, dg + dgr

    def cauchy_pair(self, z):
        """``(G(z), G'(z))`` for ``Im z >= 0``; exact transform if available."""
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        if self.transform is not None:
            g, dg = self.transform(z.ravel())
        else:
            g, dg = self._pl_pair(z.ravel())
        return np.asarray(g).reshape(shape), np.asarray(dg).reshape(shape)

    @cached_property
    def boundary(self) -> np.ndarray:
        """``G(x_j + i0)`` at the grid nodes."""
        if self.boundary_values is not None:
            g = np.array(self.boundary_values, dtype=complex)
        elif self.transform is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                g, _ = self.transform(self.nodes + 0j)
            g = np.asarray(g, dtype=complex)
        else:
            ref = self._reference
            if ref is None:
                re = _kernels.pl_hilbert_on_grid(self.density)
            else:
                c0, c1, rest = ref
                re = _kernels.pl_hilbert_on_grid(rest) + math.pi * _kernels.reference_hilbert(
                    self.support_lo, self.support_hi, c0, c1, self.nodes)
            g = re - 1j * math.pi * self.density
        g.setflags(write=False)
        return g

    @cached_property
    def log_potential(self) -> np.ndarray:
        """``int log|x_j - y| p(y) dy`` at the grid nodes."""
        ref = self._reference
        if ref is None:
            return _readonly(_kernels.pl_log_potential_on_grid(self.density, self.h))
        c0, c1, rest = ref
        u = _kernels.pl_log_potential_on_grid(rest, self.h)
        u += _kernels.reference_log_potential(self.support_lo, self.support_hi, c0, c1, self.nodes)
        return _readonly(u)

    @cached_property
    def _cell_table(self):
        """Cell masses and cumulative masses of the interpolant (sqrt cells exact)."""
        p = self.density
        h = self.h
        cell = 0.5 * h * (p[:-1] + p[1:])
        if self.sqrt_edges[0]:
            cell[0] = 2.0 / 3.0 * h * p[1]
        if self.sqrt_edges[1]:
            cell[-1] = 2.0 / 3.0 * h * p[-2]
        cum = np.concatenate([[0.0], np.cumsum(cell)])
        total = cum[-1]
        return cell / total, cum / total


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finitely many atoms; canonicalized to sorted, merged locations."""

    locations: np.ndarray
    weights: np.ndarray
    label: str = ""

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if loc.size == 0 or loc.size != w.size:
            raise MeasureError("atoms need matching, nonempty locations and weights")
        if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(w))):
            raise MeasureError("atoms must be finite")
        if np.any(w <= 0):
            raise MeasureError("atom weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise MeasureError(f"atom weights sum to {w.sum():.15g}, not 1")
        uniq, inv = np.unique(loc, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inv, w)
        object.__setattr__(self, "locations", _readonly(uniq))
        object.__setattr__(self, "weights", _readonly(merged))

    @property
    def atoms(self):
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    @property
    def support_lo(self) -> float:
        return float(self.locations[0])

    @property
    def support_hi(self) -> float:
        return float(self.locations[-1])

    def cauchy_pair(self, z):
        z = np.asarray(z, dtype=complex)
        d = z[..., None] - self.locations
        inv = 1.0 / d
        return inv @ self.weights, -(inv * inv) @ self.weights


Measure = "GridMeasure | AtomicMeasure"


@dataclass(frozen=True)
class QuantileTable:
    """Quantile function sampled at midpoints ``u_k = (k + 1/2) / n``."""

    n_quantile: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        if self.values.size != self.n_quantile:
            raise MeasureError("values must have n_quantile entries")
        if np.any(np.diff(self.values) < 0):
            raise MeasureError("quantile values must be nondecreasing")

    @property
    def u(self) -> np.ndarray:
        return (np.arange(self.n_quantile) + 0.5) / self.n_quantile

    def __call__(self, u):
        """Linear interpolation in ``u`` (constant beyond the first/last node)."""
        return np.interp(u, self.u, self.values)


# -- constructors --------------------------------------------------------------

def _semicircle_unit(zeta):
    root = np.sqrt(zeta - 2.0) * np.sqrt(zeta + 2.0)
    # (zeta - root) / 2, rationalized so large |zeta| does not cancel
    g = 2.0 / (zeta + root)
    with np.errstate(divide="ignore", invalid="ignore"):
        dg = -g / root
    return g, dg


def semicircle_transform(center: float, variance: float) -> TransformFn:
    """Closed-form Cauchy transform of the semicircle law, with derivative."""
    s = math.sqrt(variance)

    def transform(z):
        g, dg = _semicircle_unit((np.asarray(z, dtype=complex) - center) / s)
        return g / s, dg / variance

    return transform


def semicircle(center: float = 0.0, variance: float = 1.0, n_grid: int = DEFAULT_N_GRID,
               label: str = "") -> GridMeasure:
    """Semicircle law with density ``(2 pi v)^-1 sqrt(4v - (x-c)^2)``."""
    if not variance > 0:
        raise MeasureError("variance must be positive")
    s = math.sqrt(variance)
    x = np.linspace(-2.0, 2.0, n_grid)
    p = np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2.0 * math.pi * s)
    p[0] = p[-1] = 0.0
    p = 0.5 * (p + p[::-1])
    return GridMeasure(center - 2 * s, center + 2 * s, p, sqrt_edges=(True, True),
                       transform=semicircle_transform(center, variance),
                       label=label or f"semicircle({center:g},{variance:g})")


def uniform(lo: float = 0.0, hi: float = 1.0, n_grid: int = DEFAULT_N_GRID,
            label: str = "") -> GridMeasure:
    """Uniform law on ``[lo, hi]``."""
    width = hi - lo

    def transform(z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = (np.log(z - lo) - np.log(z - hi)) / width
            dg = (1.0 / (z - lo) - 1.0 / (z - hi)) / width
        return g, dg

    return GridMeasure(lo, hi, np.full(n_grid, 1.0 / width), transform=transform,
                       label=label or f"uniform({lo:g},{hi:g})")


def atoms(pairs: Sequence, label: str = "") -> AtomicMeasure:
    """AtomicMeasure from ``[(location, weight), ...]``."""
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    return AtomicMeasure(arr[:, 0], arr[:, 1], label=label)


def grid_measure(lo, hi, density, normalize: bool = False, **kw) -> GridMeasure:
    """GridMeasure from raw values, optionally rescaled to unit mass."""
    density = np.asarray(density, dtype=float)
    factor = 1.0
    if normalize:
        w = _kernels.trapezoid_weights(density.size, (hi - lo) / (density.size - 1),
                                       kw.get("sqrt_edges", (False, False)))
        factor = 1.0 / float(w @ density)
    return GridMeasure(lo, hi, density * factor, renormalization=factor, **kw)


# -- CDF / quantiles -----------------------------------------------------------

def cdf(m, a):
    """Cumulative distribution function, exact for the grid interpolant."""
    a = np.asarray(a, dtype=float)
    if isinstance(m, AtomicMeasure):
        cum = np.concatenate([[0.0], np.cumsum(m.weights)])
        out = cum[np.searchsorted(m.locations, a, side="right")]
        return np.minimum(out, 1.0) if out.ndim else float(min(out, 1.0))
    cell, cum = m._cell_table
    p = m.density
    h = m.h
    s = np.clip((a - m.support_lo) / h, 0.0, m.n_grid - 1)
    j = np.minimum(np.floor(s).astype(int), m.n_grid - 2)
    f = s - j
    # within-cell mass fraction of the interpolant
    pj = p[j]
    pk = p[j + 1]
    raw = h * (pj * f + 0.5 * (pk - pj) * f * f)
    denom = 0.5 * h * (pj + pk)
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(denom > 0, raw / denom, f)
    if m.sqrt_edges[0]:
        frac = np.where(j == 0, f ** 1.5, frac)
    if m.sqrt_edges[1]:
        frac = np.where(j == m.n_grid - 2, 1.0 - (1.0 - f) ** 1.5, frac)
    out = np.clip(cum[j] + cell[j] * frac, 0.0, 1.0)
    return out if out.ndim else float(out)


def _invert_cells(m, u):
    cell, cum = m._cell_table
    p = m.density
    j = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, m.n_grid - 2)
    frac = np.clip((u - cum[j]) / np.where(cell[j] > 0, cell[j], 1.0), 0.0, 1.0)
    pj = p[j]
    pk = p[j + 1]
    # solve pj f + (pk - pj) f^2 / 2 = frac (pj + pk) / 2 for f in [0, 1]
    a = 0.5 * (pk - pj)
    b = pj
    c = -0.5 * frac * (pj + pk)
    disc = np.sqrt(np.maximum(b * b - 4 * a * c, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(b + disc > 0, -2.0 * c / (b + disc), frac)
    if m.sqrt_edges[0]:
        f = np.where(j == 0, frac ** (2.0 / 3.0), f)
    if m.sqrt_edges[1]:
        f = np.where(j == m.n_grid - 2, 1.0 - (1.0 - frac) ** (2.0 / 3.0), f)
    return m.support_lo + (j + np.clip(f, 0.0, 1.0)) * m.h


def quantile(m, u):
    """Generalized inverse ``inf{x : F(x) >= u}``."""
    u = np.asarray(u, dtype=float)
    if isinstance(m, AtomicMeasure):
        cum = np.cumsum(m.weights)
        idx = np.minimum(np.searchsorted(cum, u - 1e-12, side="left"), m.locations.size - 1)
        return m.locations[idx]
    return _invert_cells(m, u)


def quantile_table(m, n_quantile: int) -> QuantileTable:
    """Quantiles at the midpoint nodes ``(k + 1/2) / n_quantile``."""
    if n_quantile < 2:
        raise MeasureError("n_quantile must be >= 2")
    u = (np.arange(n_quantile) + 0.5) / n_quantile
    values = np.maximum.accumulate(quantile(m, u))
    return QuantileTable(n_quantile, values)


def moment(m, k: int) -> float:
    """``int x^k dmu``."""
    if k < 0:
        raise MeasureError("moment order must be >= 0")
    if isinstance(m, AtomicMeasure):
        return float(m.weights @ m.locations ** k)
    return m.integrate(m.nodes ** k)


def variance(m) -> float:
    return moment(m, 2) - moment(m, 1) ** 2


# -- transformations ------------------------------------------------------------

def dilate(m, alpha: float):
    """Law of ``alpha X``."""
    alpha = float(alpha)
    if alpha == 0.0 or not math.isfinite(alpha):
        raise MeasureError("dilation factor must be finite and nonzero")
    label = f"dilate({m.label},{alpha:g})" if m.label else ""
    if isinstance(m, AtomicMeasure):
        return AtomicMeasure(alpha * m.locations, m.weights, label=label)
    if alpha == 1.0:
        return m
    base = m.transform
    bv = m.__dict__.get("boundary")
    if alpha > 0:
        lo, hi, p, edges = alpha * m.support_lo, alpha * m.support_hi, m.density / alpha, m.sqrt_edges
        transform = None
        if base is not None:
            def transform(z):
                g, dg = base(np.asarray(z) / alpha)
                return g / alpha, dg / alpha ** 2
        if bv is not None:
            bv = bv / alpha
    else:
        lo, hi = alpha * m.support_hi, alpha * m.support_lo
        p = m.density[::-1] / abs(alpha)
        edges = m.sqrt_edges[::-1]
        transform = None
        if base is not None:
            def transform(z):
                g, dg = base(np.conj(np.asarray(z, dtype=complex)) / alpha)
                return np.conj(g) / alpha, np.conj(dg) / alpha ** 2
        if bv is not None:
            bv = np.conj(bv[::-1]) / alpha
    return GridMeasure(lo, hi, p, sqrt_edges=edges, total_mass_tolerance=m.total_mass_tolerance,
                       truncated_mass=m.truncated_mass, renormalization=m.renormalization,
                       transform=transform, label=label, boundary_values=bv)


def shift(m, c: float):
    """Law of ``X + c``."""
    c = float(c)
    label = f"shift({m.label},{c:g})" if m.label else ""
    if isinstance(m, AtomicMeasure):
        return AtomicMeasure(m.locations + c, m.weights, label=label)
    base = m.transform
    transform = None
    if base is not None:
        def transform(z):
            return base(np.asarray(z, dtype=complex) - c)
    return GridMeasure(m.support_lo + c, m.support_hi + c, m.density, sqrt_edges=m.sqrt_edges,
                       total_mass_tolerance=m.total_mass_tolerance,
                       truncated_mass=m.truncated_mass, renormalization=m.renormalization,
                       transform=transform, label=label,
                       boundary_values=m.__dict__.get("boundary"))


def mix(components: Sequence, n_grid: Optional[int] = None, label: str = ""):
    """Convex combination ``sum w_i mu_i`` of measures of the same kind.

    Grid components are resampled onto a common grid; when every component has
    an exact transform, the mixture density is taken from the boundary values
    of the mixed transform (exact at all nodes) and the transform is kept.
    """
    ws = np.array([float(w) for w, _ in components])
    ms = [mm for _, mm in components]
    if np.any(ws <= 0) or abs(ws.sum() - 1.0) > 1e-12:
        raise MeasureError("mixture weights must be positive and sum to 1")
    if all(isinstance(mm, AtomicMeasure) for mm in ms):
        loc = np.concatenate([mm.locations for mm in ms])
        w = np.concatenate([wi * mm.weights for wi, mm in zip(ws, ms)])
        return AtomicMeasure(loc, w / w.sum(), label=label)
    if not all(isinstance(mm, GridMeasure) for mm in ms):
        raise MeasureError("cannot mix atomic and grid measures")
    lo = min(mm.support_lo for mm in ms)
    hi = max(mm.support_hi for mm in ms)
    n = n_grid or max(mm.n_grid for mm in ms)
    x = np.linspace(lo, hi, n)
    edges = (
        all(mm.sqrt_edges[0] for mm in ms if mm.support_lo == lo),
        all(mm.sqrt_edges[1] for mm in ms if mm.support_hi == hi),
    )
    if all(mm.transform is not None for mm in ms):
        fns = [mm.transform for mm in ms]

        def transform(z):
            z = np.asarray(z, dtype=complex)
            g = np.zeros(z.shape, complex)
            dg = np.zeros(z.shape, complex)
            for wi, fn in zip(ws, fns):
                gi, dgi = fn(z)
                g += wi * gi
                dg += wi * dgi
            return g, dg

        with np.errstate(divide="ignore", invalid="ignore"):
            g, _ = transform(x + 0j)
        p = np.clip(-g.imag / math.pi, 0.0, None)
        p[~np.isfinite(p)] = 0.0
    else:
        transform = None
        p = sum(wi * np.interp(x, mm.nodes, mm.density, left=0.0, right=0.0)
                for wi, mm in zip(ws, ms))
    if edges[0]:
        p[0] = 0.0
    if edges[1]:
        p[-1] = 0.0
    # interior square-root edges of the components are only resolved to O(h^1.5);
    # rescale so that the grid quadrature sees exactly unit mass
    mass = float(_kernels.trapezoid_weights(n, (hi - lo) / (n - 1), edges) @ p)
    tol = max(max(mm.total_mass_tolerance for mm in ms), 1e-4, ((hi - lo) / (n - 1)) ** 1.5)
    if not abs(mass - 1.0) <= tol:
        raise MeasureError(f"mixture mass {mass:.10g} deviates from 1 by more than {tol:g}")
    return GridMeasure(lo, hi, p / mass, sqrt_edges=edges, total_mass_tolerance=tol,
                       renormalization=1.0 / mass, transform=transform, label=label)


# -- JSON specs -------------------------------------------------------------------

def measure_from_spec(spec: dict, n_grid: int = DEFAULT_N_GRID, path: str = "measure"):
    """Build a measure from its JSON description.

    Supported types: ``semicircle``, ``atoms``, ``grid``, ``dilate``, ``mix``,
    ``uniform``, ``shift``, ``smooth`` (Cauchy smoothing).  Errors name the
    offending field path.
    """

    def need(key, kind=None):
        if not isinstance(spec, dict) or key not in spec:
            raise MeasureError(f"{path}.{key}: missing")
        val = spec[key]
        if kind is float:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise MeasureError(f"{path}.{key}: expected a number, got {val!r}")
            return float(val)
        return val

    if not isinstance(spec, dict):
        raise MeasureError(f"{path}: expected an object")
    kind = spec.get("type")
    try:
        if kind == "semicircle":
            return semicircle(float(spec.get("center", 0.0)), need("variance", float), n_grid=n_grid)
        if kind == "uniform":
            return uniform(need("lo", float), need("hi", float), n_grid=n_grid)
        if kind == "atoms":
            raw = need("atoms")
            if not isinstance(raw, list) or not raw:
                raise MeasureError(f"{path}.atoms: expected a nonempty list of [x, w]")
            for i, pair in enumerate(raw):
                if not (isinstance(pair, list) and len(pair) == 2):
                    raise MeasureError(f"{path}.atoms[{i}]: expected [location, weight]")
            return atoms(raw)
        if kind == "grid":
            return grid_measure(need("lo", float), need("hi", float), need("density"),
                                normalize=bool(spec.get("normalize", False)),
                                sqrt_edges=tuple(spec.get("sqrt_edges", (False, False))))
        if kind == "dilate":
            return dilate(measure_from_spec(need("of"), n_grid, f"{path}.of"), need("alpha", float))
        if kind == "shift":
            return shift(measure_from_spec(need("of"), n_grid, f"{path}.of"), need("by", float))
        if kind == "mix":
            comps = need("components")
            if not isinstance(comps, list) or not comps:
                raise MeasureError(f"{path}.components: expected a nonempty list")
            built = []
            for i, c in enumerate(comps):
                if not (isinstance(c, list) and len(c) == 2):
                    raise MeasureError(f"{path}.components[{i}]: expected [weight, spec]")
                built.append((float(c[0]), measure_from_spec(c[1], n_grid, f"{path}.components[{i}][1]")))
            return mix(built, n_grid=n_grid)
        if kind == "smooth":
            from .cauchy import cauchy_smooth
            return cauchy_smooth(measure_from_spec(need("of"), n_grid, f"{path}.of"),
                                 need("lambda", float), n_grid=n_grid)
    except (TypeError, ValueError) as exc:
        msg = str(exc)
        if isinstance(exc, MeasureError) and msg.startswith(path):
            raise
        raise MeasureError(f"{path}: {msg}") from None
    raise MeasureError(f"{path}.type: unknown measure type {kind!r}")
