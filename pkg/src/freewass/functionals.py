"""Free entropy, free Fisher information and their relatives for one variable.

For a law with density ``p`` (``Hp`` its Hilbert transform, second moment
``tau(X^2)``):

* ``log_energy = int int log|s - t| p(s) p(t) ds dt``
* ``chi = log_energy + 3/4 + log(2 pi) / 2``                 (free entropy)
* ``Phi = (4/3) pi^2 int p^3 = 4 pi^2 int (Hp)^2 p``          (free Fisher information)
* ``I = 4 int (pi Hp - x/2)^2 p = Phi - 2 + tau(X^2)``         (relative Fisher information)
* ``Sigma = tau(X^2)/2 - log_energy - 3/4``                    (relative free entropy)

All vanish or reduce to simple constants at the standard semicircle.
Atomic laws have ``log_energy = chi = -inf`` and ``Sigma = +inf``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .measure import AtomicMeasure, GridMeasure, moment

CHI_CONSTANT = 0.75 + 0.5 * math.log(2.0 * math.pi)


class QuadratureWarning(RuntimeWarning):
    """A consistency check between two quadrature routes failed."""


def log_energy(m) -> float:
    """``int int log|s - t| dmu(s) dmu(t)``; ``-inf`` for atomic laws.

    The inner integral is exact for the piecewise-linear density (plus the
    closed-form square-root reference part at square-root edges), so the
    logarithmic singularity on the diagonal needs no special treatment.
    """
    if isinstance(m, AtomicMeasure):
        return -math.inf
    return m.integrate(m.log_potential)


def chi(m) -> float:
    """Free entropy ``log_energy + 3/4 + log(2 pi)/2``."""
    le = log_energy(m)
    return le + CHI_CONSTANT if math.isfinite(le) else le


def _hilbert(m: GridMeasure) -> np.ndarray:
    return m.boundary.real / math.pi


def phi_forms(m: GridMeasure):
    """Both Fisher-information routes and their relative gap.

    Returns
    -------
    (phi_cubic, phi_hilbert, relative_gap)
    """
    if not isinstance(m, GridMeasure):
        return math.inf, math.inf, 0.0
    cubic = 4.0 / 3.0 * math.pi ** 2 * float(m.weights @ m.density ** 3)
    hp = _hilbert(m)
    hilb = 4.0 * math.pi ** 2 * m.integrate(hp * hp)
    gap = abs(cubic - hilb) / max(abs(cubic), 1e-300)
    return cubic, hilb, gap


def phi(m, gap_tolerance: float = 0.01) -> float:
    """Free Fisher information ``(4/3) pi^2 int p^3``.

    The Hilbert-transform form ``4 pi^2 int (Hp)^2 p`` is computed alongside;
    a relative gap above ``gap_tolerance`` raises a QuadratureWarning.
    """
    cubic, _, gap = phi_forms(m)
    if gap > gap_tolerance:
        warnings.warn(f"Fisher information routes disagree by {gap:.3g}", QuadratureWarning)
    return cubic


def i_ou_forms(m: GridMeasure):
    """``(integral form, Phi - 2 + tau(X^2), relative gap)``."""
    if not isinstance(m, GridMeasure):
        return math.inf, math.inf, 0.0
    x = m.nodes
    d = math.pi * _hilbert(m) - 0.5 * x
    direct = 4.0 * m.integrate(d * d)
    via_phi = phi_forms(m)[0] - 2.0 + moment(m, 2)
    gap = abs(direct - via_phi) / max(abs(direct), abs(via_phi), 1e-300)
    return direct, via_phi, gap


def i_ou(m, gap_tolerance: float = 1e-3) -> float:
    """``I = 4 int (pi Hp(x) - x/2)^2 p(x) dx``, cross-checked against ``Phi - 2 + tau(X^2)``.

    The cross-check is only flagged when ``I`` is not tiny (``> 1e-6``), since
    a relative gap is meaningless near the semicircle.
    """
    direct, via_phi, gap = i_ou_forms(m)
    if gap > gap_tolerance and abs(direct) > 1e-6:
        warnings.warn(f"I(X) routes disagree by {gap:.3g}", QuadratureWarning)
    return direct


def sigma_tilde(m, negative_tolerance: float = 1e-6) -> float:
    """``tau(X^2)/2 - log_energy - 3/4``; ``+inf`` for atomic laws."""
    le = log_energy(m)
    if not math.isfinite(le):
        return math.inf
    val = 0.5 * moment(m, 2) - le - 0.75
    if val < -negative_tolerance:
        warnings.warn(f"relative free entropy is negative ({val:.3g})", QuadratureWarning)
    return val


def phi_from_entropy_derivative(m, eps: float = 1e-3) -> float:
    """``2 (chi(mu [+] sigma_eps) - chi(mu)) / eps``, a forward difference for ``Phi``."""
    from .freeconv import free_convolution

    n = m.n_grid if isinstance(m, GridMeasure) else 4096
    moved, _ = free_convolution(m, eps, n_grid=n)
    return 2.0 * (chi(moved) - chi(m)) / eps


@dataclass(frozen=True)
class FunctionalReport:
    """Free-entropy functionals of one law."""

    measure_id: str
    tau_x2: float
    log_energy: float
    chi: float
    phi: float
    i_ou: float
    sigma_tilde: float
    phi_consistency_gap: float
    i_ou_identity_gap: float
    w2_to_semicircle: float


def report(m, measure_id: str = "") -> FunctionalReport:
    from .measure import semicircle
    from .transport import wasserstein

    ph, _, gap = phi_forms(m)
    i_direct, _, igap = i_ou_forms(m)
    return FunctionalReport(
        measure_id=measure_id or getattr(m, "label", ""),
        tau_x2=moment(m, 2),
        log_energy=log_energy(m),
        chi=chi(m),
        phi=ph,
        i_ou=i_direct,
        sigma_tilde=sigma_tilde(m),
        phi_consistency_gap=gap,
        i_ou_identity_gap=igap,
        w2_to_semicircle=wasserstein(m, semicircle(0.0, 1.0), 2.0),
    )


REPORT_COLUMNS = ["measure_id", "tau_x2", "log_energy", "chi", "phi", "i_ou", "sigma_tilde",
                  "phi_consistency_gap", "i_ou_identity_gap", "w2_to_semicircle"]


def format_number(x) -> str:
    """17-significant-digit scientific notation (``inf``/``-inf``/``nan`` spelled out)."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.16e}"


def write_report_csv(reports, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        for rep in reports:
            row = asdict(rep)
            w.writerow([row["measure_id"]] + [format_number(row[c]) for c in REPORT_COLUMNS[1:]])
