"""One-dimensional optimal transport.

On the line the optimal coupling for every convex cost is the monotone
(quantile) coupling, so ``W_p(mu, nu)^p = int_0^1 |q_mu(u) - q_nu(u)|^p du``.
For a single self-adjoint variable this is also the value of the free
Wasserstein distance, which is why everything here is classical.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measure import AtomicMeasure, GridMeasure, QuantileTable, cdf, quantile, quantile_table
from .records import identity, inequality

DEFAULT_N_QUANTILE = 16384
MAX_BRUTE_ATOMS = 8


def quantile_partition(measures: Sequence, n_quantile: int) -> tuple[np.ndarray, np.ndarray]:
    """Midpoints and lengths of a partition of ``[0, 1]`` for quantile integrals.

    The uniform grid of ``n_quantile`` cells is refined by the cumulative
    weights of every atomic law in ``measures``, so atomic quantile functions
    are constant on each cell and contribute no quadrature error.  With no
    grid-based law the uniform cells are dropped and the rule is exact.
    """
    breaks = [np.array([0.0, 1.0])]
    if not all(isinstance(mm, AtomicMeasure) for mm in measures):
        breaks.append(np.linspace(0.0, 1.0, n_quantile + 1))
    breaks += [np.cumsum(mm.weights)[:-1] for mm in measures if isinstance(mm, AtomicMeasure)]
    b = np.unique(np.clip(np.concatenate(breaks), 0.0, 1.0))
    b = b[np.concatenate([[True], np.diff(b) > 1e-15])]
    b[-1] = 1.0
    return 0.5 * (b[:-1] + b[1:]), np.diff(b)


def _pairwise_w(values: np.ndarray, du: np.ndarray, p: float) -> np.ndarray:
    """``W_p`` between every pair of rows of quantile values on a shared partition."""
    d = np.abs(values[:, None, :] - values[None, :, :])
    return (d ** p @ du) ** (1.0 / p)


def _atomic_w(m: AtomicMeasure, v: AtomicMeasure, p: float) -> float:
    """Exact quantile-coupling cost for two atomic laws."""
    mid, du = quantile_partition([m, v], 0)
    d = np.abs(quantile(m, mid) - quantile(v, mid))
    return float(du @ d ** p) ** (1.0 / p)


def wasserstein(m, v, p: float = 2.0, n_quantile: int = DEFAULT_N_QUANTILE) -> float:
    """``W_p`` through the quantile coupling.

    Exact for two atomic laws; otherwise the midpoint rule on ``n_quantile``
    uniform cells, refined at the atoms of any atomic argument.  Symmetric
    in its arguments.
    """
    if not p >= 1:
        raise ValueError("p must be >= 1")
    if math.isinf(p):
        raise ValueError("p = inf is not supported")
    if isinstance(m, AtomicMeasure) and isinstance(v, AtomicMeasure):
        return _atomic_w(m, v, p)
    mid, du = quantile_partition([m, v], n_quantile)
    d = np.abs(quantile(m, mid) - quantile(v, mid))
    return float(du @ d ** p) ** (1.0 / p)


def _equal_atoms(m: AtomicMeasure, n: int):
    counts = m.weights * n
    k = np.rint(counts).astype(int)
    if np.any(np.abs(counts - k) > 1e-9) or k.sum() != n:
        return None
    return np.repeat(m.locations, k)


def brute_force_w(m: AtomicMeasure, v: AtomicMeasure, p: float = 2.0) -> float:
    """``W_p`` by enumerating every permutation coupling.

    Both laws are expanded into ``N <= 8`` equal-weight atoms (``N`` the
    smallest common denominator of the weights); the minimum of
    ``sum |x_i - y_sigma(i)|^p / N`` over all permutations is returned.
    """
    for n in range(1, MAX_BRUTE_ATOMS + 1):
        xs, ys = _equal_atoms(m, n), _equal_atoms(v, n)
        if xs is not None and ys is not None:
            break
    else:
        raise ValueError("weights do not expand to at most 8 equal atoms")
    cost = np.abs(xs[:, None] - ys[None, :]) ** p
    perms = np.array(list(itertools.permutations(range(n))))
    totals = cost[np.arange(n), perms].sum(axis=1)
    return float(totals.min() / n) ** (1.0 / p)


@dataclass(frozen=True)
class Coupling:
    """Transport plan; ``explicit`` plans list ``(x, y, mass)`` triples."""

    kind: str
    plan: tuple = ()

    def marginals(self):
        xs, ys = {}, {}
        for x, y, w in self.plan:
            xs[x] = xs.get(x, 0.0) + w
            ys[y] = ys.get(y, 0.0) + w
        return xs, ys


def optimal_coupling(m: AtomicMeasure, v: AtomicMeasure) -> Coupling:
    """Monotone (north-west corner) plan between two atomic laws."""
    i = j = 0
    a = m.weights.copy()
    b = v.weights.copy()
    plan = []
    while i < a.size and j < b.size:
        w = min(a[i], b[j])
        if w > 0:
            plan.append((float(m.locations[i]), float(v.locations[j]), float(w)))
        a[i] -= w
        b[j] -= w
        if a[i] <= 1e-15 and i < a.size:
            i += 1
        if j < b.size and b[j] <= 1e-15:
            j += 1
    return Coupling("explicit", tuple(plan))


def write_coupling_csv(c: Coupling, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "mass"])
        for x, y, mass in c.plan:
            w.writerow([f"{x:.16e}", f"{y:.16e}", f"{mass:.16e}"])


@dataclass(frozen=True)
class TransportMap:
    """Monotone map ``phi = q_target o F_source`` stored as two quantile tables."""

    source: QuantileTable
    target: QuantileTable
    kind: str = "monotone"

    def __call__(self, x):
        xs = self.source.values
        u = self.source.u
        # invert the source quantile table; flat stretches are harmless
        keep = np.concatenate([[True], np.diff(xs) > 0])
        return self.target(np.interp(x, xs[keep], u[keep]))


def monotone_map(m, v, n_quantile: int = 4096) -> TransportMap:
    """Increasing map pushing ``m`` to ``v``; atomic sources are rejected."""
    if isinstance(m, AtomicMeasure):
        raise ValueError("a monotone map from an atomic source need not exist")
    return TransportMap(quantile_table(m, n_quantile), quantile_table(v, n_quantile))


def pushforward_cdf_gap(tmap: TransportMap, m, v, n_probe: int = 2001) -> float:
    """``sup_y |F_{phi # m}(y) - F_v(y)|`` on a probe grid."""
    xs = np.linspace(m.support_lo, m.support_hi, n_probe)
    ys = tmap(xs)
    fy = cdf(m, xs)
    probe = np.linspace(ys[0], ys[-1], n_probe)
    # F_{phi # m}(y) = F_m(phi^{-1}(y)) for increasing phi
    push = np.interp(probe, ys, fy)
    return float(np.max(np.abs(push - cdf(v, probe))))


@dataclass(frozen=True)
class TransportResidual:
    """Residual of ``d/dt phi_{s,t}(x) = pi Hp_t(phi_{s,t}(x)) - phi_{s,t}(x) / 2``."""

    x: np.ndarray
    residual: np.ndarray

    @property
    def max(self) -> float:
        return float(np.max(np.abs(self.residual)))

    @property
    def mean(self) -> float:
        return float(np.mean(np.abs(self.residual)))


def transport_equation_residual(m0, s: float, t: float, dt: float = 1e-3, n_nodes: int = 256,
                                n_grid: int = 4096) -> TransportResidual:
    """Finite-difference check of the transport equation along the OU flow.

    ``phi_{s,t} = q_t o F_s`` moves the law of ``X(s)`` to that of ``X(t)``.
    At the quantile nodes ``x_k = q_s(u_k)`` the time derivative of
    ``phi_{s,t}(x_k) = q_t(u_k)`` is a central difference of step ``dt``; the
    velocity field ``pi Hp_t - x/2`` is evaluated exactly from the flow's
    Cauchy transform.
    """
    from .freeconv import ou_flow

    if not 0 < s < t:
        raise ValueError("need 0 < s < t")
    u = (np.arange(n_nodes) + 0.5) / n_nodes
    x = quantile(ou_flow(m0, s, n_grid).measure, u)
    mid = ou_flow(m0, t, n_grid).measure
    up = ou_flow(m0, t + dt, n_grid).measure
    down = ou_flow(m0, t - dt, n_grid).measure
    qt = quantile(mid, u)
    dq = (quantile(up, u) - quantile(down, u)) / (2.0 * dt)
    g, _ = mid.cauchy_pair(qt + 0j)
    velocity = g.real - 0.5 * qt
    return TransportResidual(x, dq - velocity)


ANCHOR_METRIC = "W_p is a metric: symmetry, identity of indiscernibles, triangle inequality"


def metric_axiom_suite(measures: Sequence, p: float = 2.0, n_quantile: int = DEFAULT_N_QUANTILE,
                       tolerance: float = 1e-12, ids=None):
    """Symmetry, identity of indiscernibles and triangle inequality on all triples."""
    if len(measures) < 3:
        raise ValueError("need at least three measures")
    if not 1 <= p < math.inf:
        raise ValueError("p must be finite and >= 1")
    ids = ids or [getattr(mm, "label", "") or f"m{i}" for i, mm in enumerate(measures)]
    k = len(measures)
    # one partition for all pairs: the discrete distances are then L^p norms
    # under a single measure and satisfy the triangle inequality exactly
    mid, du = quantile_partition(measures, n_quantile)
    W = _pairwise_w(np.array([quantile(mm, mid) for mm in measures]), du, p)
    tables = [quantile_table(mm, 1024).values for mm in measures]
    recs = []
    for i in range(k):
        for j in range(i, k):
            pid = f"{ids[i]}|{ids[j]}"
            recs.append(identity("metric_symmetry", ANCHOR_METRIC, pid, {"p": p},
                                 W[i, j], W[j, i], tolerance))
            if i == j:
                recs.append(identity("metric_identity", ANCHOR_METRIC, pid, {"p": p},
                                     W[i, i], 0.0, tolerance))
            else:
                # W vanishes exactly when the quantile functions coincide
                same = float(np.max(np.abs(tables[i] - tables[j]))) < 1e-9
                consistent = (W[i, j] <= tolerance) == same
                recs.append(identity("metric_identity", ANCHOR_METRIC, pid,
                                     {"p": p, "equal_tables": same},
                                     float(consistent), 1.0, 0.0))
    for i, j, l in itertools.permutations(range(k), 3):
        recs.append(inequality("metric_triangle", ANCHOR_METRIC, f"{ids[i]}|{ids[j]}|{ids[l]}",
                               {"p": p}, W[i, l], W[i, j] + W[j, l], tolerance))
    return recs
