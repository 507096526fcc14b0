"""Verification harness: identities and inequalities as residuals or signed margins.

Every check returns a list of :class:`~freewass.records.VerificationRecord`.
Pass/fail semantics come only from the tolerance passed in (defaults live in
the registry :data:`CHECKS`); "reported" checks never pass or fail.
"""

from __future__ import annotations

import inspect
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import functionals as fn
from .freeconv import (burgers_characteristics, burgers_residual, free_convolve_semicircle,
                       ou_flow)
from .measure import GridMeasure, semicircle
from .records import identity, inequality, reported
from .transport import metric_axiom_suite, transport_equation_residual, wasserstein

T_MIN = 1e-2


def _mid(m, measure_id):
    return measure_id or getattr(m, "label", "") or "measure"


def _flow_measure(m0, t, n_grid):
    return ou_flow(m0, t, n_grid).measure


def _standard_semicircle(n_grid=4096):
    return semicircle(0.0, 1.0, n_grid)


# -- single-measure identities ------------------------------------------------------

def check_lsi(m, tolerance=1e-4, measure_id=""):
    """``Sigma(X) <= I(X) / 2``."""
    s = fn.sigma_tilde(m)
    i = fn.i_ou(m)
    return [inequality("check_lsi", CHECKS["check_lsi"].anchor, _mid(m, measure_id), {},
                       s, 0.5 * i, tolerance)]


def check_identity_i_ou(m, tolerance=1e-3, measure_id=""):
    """``4 int (pi Hp - x/2)^2 p = Phi - 2 + tau(X^2)`` (relative)."""
    direct, via_phi, _ = fn.i_ou_forms(m)
    return [identity("check_identity_i_ou", CHECKS["check_identity_i_ou"].anchor,
                     _mid(m, measure_id), {}, direct, via_phi, tolerance, relative=True,
                     floor=1.0)]


def check_phi_forms(m, tolerance=1e-3, measure_id=""):
    """The cubic and Hilbert-transform forms of the free Fisher information (relative)."""
    cubic, hilb, _ = fn.phi_forms(m)
    return [identity("check_phi_forms", CHECKS["check_phi_forms"].anchor, _mid(m, measure_id),
                     {}, hilb, cubic, tolerance, relative=True)]


def check_hilbert_pairing(m, tolerance=1e-4, measure_id=""):
    """``int x Hp(x) p(x) dx = 1 / (2 pi)``."""
    hp = m.boundary.real / math.pi
    val = m.integrate(m.nodes * hp)
    return [identity("check_hilbert_pairing", CHECKS["check_hilbert_pairing"].anchor,
                     _mid(m, measure_id), {}, val, 1.0 / (2.0 * math.pi), tolerance)]


def check_chi_scaling(m, alpha=2.0, tolerance=1e-6, measure_id=""):
    """Scaling of ``chi``, ``Phi`` and the logarithmic energy under ``X -> alpha X``."""
    from .measure import dilate

    md = dilate(m, alpha)
    mid = _mid(m, measure_id)
    anchor = CHECKS["check_chi_scaling"].anchor
    params = {"alpha": alpha}
    la = math.log(abs(alpha))
    return [
        identity("check_chi_scaling", anchor, mid, dict(params, quantity="chi"),
                 fn.chi(md), fn.chi(m) + la, tolerance),
        identity("check_chi_scaling", anchor, mid, dict(params, quantity="log_energy"),
                 fn.log_energy(md), fn.log_energy(m) + la, tolerance),
        identity("check_chi_scaling", anchor, mid, dict(params, quantity="phi"),
                 fn.phi(md), fn.phi(m) / alpha ** 2, tolerance),
    ]


def check_sigma_nonnegative(m, tolerance=1e-6, measure_id=""):
    """``Sigma(X) >= 0``."""
    return [inequality("check_sigma_nonnegative", CHECKS["check_sigma_nonnegative"].anchor,
                       _mid(m, measure_id), {}, 0.0, fn.sigma_tilde(m), tolerance)]


def check_entropy_fisher(m, eps=1e-3, tolerance=1e-2, measure_id=""):
    """``2 (chi(X + sqrt(eps) S) - chi(X)) / eps -> Phi(X)`` (relative, first order in eps)."""
    est = fn.phi_from_entropy_derivative(m, eps)
    return [identity("check_entropy_fisher", CHECKS["check_entropy_fisher"].anchor,
                     _mid(m, measure_id), {"eps": eps}, est, fn.phi(m), tolerance,
                     relative=True)]


# -- transport inequalities -------------------------------------------------------------

def check_talagrand(m, measure_id="", n_grid=4096):
    """Both constants of the transportation inequality, reported as signed margins."""
    w = wasserstein(m, _standard_semicircle(n_grid), 2.0)
    s = fn.sigma_tilde(m)
    mid = _mid(m, measure_id)
    anchor = CHECKS["check_talagrand"].anchor
    out = []
    for c in (1.0, 2.0):
        rhs = c * s
        margin = math.inf if math.isinf(rhs) else rhs - w * w
        out.append(reported("check_talagrand", anchor, mid, {"constant": c}, w * w, rhs, margin))
    return out


def check_monotone_functional(m0, t_grid=(0.1, 0.3, 0.6, 1.0, 2.0, 4.0), measure_id="",
                              n_grid=4096):
    """Tabulate ``W(X(t), S) - sqrt(c Sigma(X(t)))`` along the flow for ``c = 1, 2``."""
    t_grid = [float(t) for t in t_grid]
    if len(t_grid) < 4 or any(t <= 0 for t in t_grid) or any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid needs >= 4 increasing positive times")
    sc = _standard_semicircle(n_grid)
    ws, ss = [], []
    for t in t_grid:
        mt = _flow_measure(m0, t, n_grid)
        ws.append(wasserstein(mt, sc, 2.0))
        ss.append(max(fn.sigma_tilde(mt), 0.0))
    out = []
    for c in (1.0, 2.0):
        seq = [w - math.sqrt(c * s) for w, s in zip(ws, ss)]
        inc = float(np.min(np.diff(seq)))
        out.append(reported("check_monotone_functional", CHECKS["check_monotone_functional"].anchor,
                            _mid(m0, measure_id),
                            {"constant": c, "t": t_grid, "values": seq, "increasing": inc >= 0},
                            seq[0], seq[-1], inc))
    return out


def _sup_i(m0, s, t, n_grid, n_nodes=17, refine=6):
    """``sup_{s<=h<=t} I(X(h))`` from Chebyshev-Lobatto nodes plus golden-section refinement."""
    k = np.arange(n_nodes)
    hs = 0.5 * (s + t) + 0.5 * (s - t) * np.cos(np.pi * k / (n_nodes - 1))

    def i_at(h):
        return fn.i_ou(_flow_measure(m0, float(h), n_grid))

    vals = np.array([i_at(h) for h in hs])
    j = int(np.argmax(vals))
    best = float(vals[j])
    lo, hi = hs[max(j - 1, 0)], hs[min(j + 1, n_nodes - 1)]
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = hi - g * (hi - lo), lo + g * (hi - lo)
    fa, fb = i_at(a), i_at(b)
    for _ in range(refine):
        if fa > fb:
            hi, b, fb = b, a, fa
            a = hi - g * (hi - lo)
            fa = i_at(a)
        else:
            lo, a, fa = a, b, fb
            b = lo + g * (hi - lo)
            fb = i_at(b)
    return max(best, fa, fb)


def check_distance_speed(m0, s=0.2, t=0.4, tolerance=1e-6, measure_id="", n_grid=4096):
    """``4 W(X(s), X(t))^2 / (t - s)^2 <= sup_{s<=h<=t} I(X(h))``."""
    if not 0 < s < t:
        raise ValueError("need 0 < s < t")
    w = wasserstein(_flow_measure(m0, s, n_grid), _flow_measure(m0, t, n_grid), 2.0)
    lhs = 4.0 * w * w / (t - s) ** 2
    rhs = _sup_i(m0, s, t, n_grid)
    return [inequality("check_distance_speed", CHECKS["check_distance_speed"].anchor,
                       _mid(m0, measure_id), {"s": s, "t": t}, lhs, rhs, tolerance)]


# -- flow identities ----------------------------------------------------------------------

def check_entropy_derivative(m0, t=0.5, dt=1e-3, tolerance=1e-2, measure_id="", n_grid=4096):
    """``d/dt Sigma(X(t)) = -I(X(t)) / 2`` by central differences (relative)."""
    if not t - dt >= 0:
        raise ValueError("need t >= dt")
    sp = fn.sigma_tilde(_flow_measure(m0, t + dt, n_grid))
    sm = fn.sigma_tilde(_flow_measure(m0, t - dt, n_grid))
    lhs = (sp - sm) / (2.0 * dt)
    rhs = -0.5 * fn.i_ou(_flow_measure(m0, t, n_grid))
    return [identity("check_entropy_derivative", CHECKS["check_entropy_derivative"].anchor,
                     _mid(m0, measure_id), {"t": t, "dt": dt}, lhs, rhs, tolerance,
                     relative=True, floor=1e-6)]


def density_system_residual(m0, t, dt=1e-3, n_grid=4096, interior=0.2, derivative="exact"):
    """Residuals of the real system for ``(p, q)``, ``q = -Hp``, along the OU flow.

        q_t = pi (q q_x - p p_x) + (x q_x + q) / 2
        p_t = pi (p q_x + q p_x) + (x p_x + p) / 2

    Time derivatives are central differences of step ``dt`` at the nodes of the
    flow grid at ``t``.  Space derivatives come from the exact derivative of the
    Cauchy transform (``derivative="exact"``) or from central differences on the
    grid (``"grid"``).  Only nodes with ``p >= interior * max p`` are kept,
    since the time difference is singular where the support edge moves.

    Returns
    -------
    x, residual_q, residual_p : arrays on the interior nodes
    """
    m = _flow_measure(m0, t, n_grid)
    x = m.nodes
    g = np.array(m.boundary)
    gu = _flow_measure(m0, t + dt, n_grid).cauchy_pair(x + 0j)[0]
    gd = _flow_measure(m0, t - dt, n_grid).cauchy_pair(x + 0j)[0]
    g_t = (gu - gd) / (2.0 * dt)
    if derivative == "exact":
        g_x = m.cauchy_pair(x + 0j)[1]
    elif derivative == "grid":
        g_x = np.gradient(g, x)
    else:
        raise ValueError("derivative must be 'exact' or 'grid'")
    q, p = -g.real / math.pi, -g.imag / math.pi
    q_x, p_x = -g_x.real / math.pi, -g_x.imag / math.pi
    q_t, p_t = -g_t.real / math.pi, -g_t.imag / math.pi
    res_q = q_t - (math.pi * (q * q_x - p * p_x) + 0.5 * (x * q_x + q))
    res_p = p_t - (math.pi * (p * q_x + q * p_x) + 0.5 * (x * p_x + p))
    mask = p >= interior * p.max()
    mask[:2] = mask[-2:] = False
    return x[mask], res_q[mask], res_p[mask]


def tail_decay_constant(m):
    """``max p(x) (1 + |x|)^2`` -- bounded for Cauchy-smoothed laws."""
    return float(np.max(m.density * (1.0 + np.abs(m.nodes)) ** 2))


def check_density_system(m0, t=0.5, dt=1e-3, tolerance=5e-3, measure_id="", n_grid=4096,
                         interior=0.2, derivative="exact"):
    """Max interior residual of the real (p, q) system."""
    _, rq, rp = density_system_residual(m0, t, dt, n_grid, interior, derivative)
    res = float(max(np.max(np.abs(rq)), np.max(np.abs(rp))))
    params = {"t": t, "dt": dt, "interior": interior, "derivative": derivative}
    if isinstance(m0, GridMeasure):
        params["tail_decay_constant"] = tail_decay_constant(m0)
    return [identity("check_density_system", CHECKS["check_density_system"].anchor,
                     _mid(m0, measure_id), params, res, 0.0, tolerance)]


def check_transport_equation(m0, s=0.2, t=0.4, dt=1e-3, tolerance=5e-3, measure_id="",
                             n_grid=4096):
    """Max residual of the transport equation for ``phi_{s,t}``."""
    r = transport_equation_residual(m0, s, t, dt, n_grid=n_grid)
    return [identity("check_transport_equation", CHECKS["check_transport_equation"].anchor,
                     _mid(m0, measure_id), {"s": s, "t": t, "dt": dt, "mean": r.mean},
                     r.max, 0.0, tolerance)]


def default_z_grid(n=25, im=1.0, lo=-3.0, hi=3.0):
    return np.linspace(lo, hi, n) + 1j * im


def check_burgers(m0, t=0.5, dt=1e-3, dz=1e-3, tolerance=1e-4, measure_id="", z=None):
    """Max modulus of the Burgers residual on a horizontal line of ``z``."""
    z = default_z_grid() if z is None else np.asarray(z, dtype=complex)
    res = float(np.max(np.abs(burgers_residual(m0, t, z, dt, dz))))
    return [identity("check_burgers", CHECKS["check_burgers"].anchor, _mid(m0, measure_id),
                     {"t": t, "dt": dt, "dz": dz, "im_z": float(z.imag.min())}, res, 0.0,
                     tolerance)]


def check_subordination_agreement(m, r=0.5, tolerance=1e-8, measure_id="", z=None):
    """Damped subordination iteration vs. characteristics foot-point solve."""
    if z is None:
        z = np.concatenate([default_z_grid(25, 0.5), default_z_grid(25, 1.0),
                            default_z_grid(13, 3.0)])
    a = free_convolve_semicircle(m, r, z)
    b = burgers_characteristics(m, r, z)
    gap = float(np.max(np.abs(a - b)))
    return [identity("check_subordination_agreement",
                     CHECKS["check_subordination_agreement"].anchor, _mid(m, measure_id),
                     {"r": r, "im_z_min": float(np.min(np.imag(z)))}, gap, 0.0, tolerance)]


def check_metric_axioms(measures, p=2.0, tolerance=1e-12, ids=None, n_quantile=16384):
    """Symmetry, identity of indiscernibles and the triangle inequality on all triples."""
    return metric_axiom_suite(measures, p=p, n_quantile=n_quantile, tolerance=tolerance, ids=ids)


def check_rmt_spectrum(m, r=1.0, n_dim=400, n_trials=50, seed=0, ks_threshold=0.03,
                       w2_threshold=0.05, measure_id="", n_grid=4096):
    """Monte Carlo spectrum of ``A + sqrt(r) H`` vs. the free convolution."""
    from .freeconv import free_convolution
    from .rmt import compare_spectrum, sample_deformed_gue

    sample = sample_deformed_gue(m, r, n_dim, n_trials, seed)
    target, _ = free_convolution(m, r, n_grid=n_grid)
    return compare_spectrum(sample, target, ks_threshold, w2_threshold,
                            measure_id=_mid(m, measure_id))


# -- registry ------------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckSpec:
    func: Callable
    anchor: str
    tolerance: float
    reported: bool = False
    takes_list: bool = False


CHECKS = {
    "check_lsi": CheckSpec(
        check_lsi, "log-Sobolev inequality of the free OU process: Sigma(X) <= I(X)/2", 1e-4),
    "check_entropy_derivative": CheckSpec(
        check_entropy_derivative,
        "entropy dissipation along the free OU flow: d/dt Sigma(X(t)) = -I(X(t))/2", 1e-2),
    "check_distance_speed": CheckSpec(
        check_distance_speed,
        "distance-speed bound: 4 W(X(s),X(t))^2/(t-s)^2 <= sup_[s,t] I(X(h))", 1e-6),
    "check_talagrand": CheckSpec(
        check_talagrand, "free transportation inequality W(X,S)^2 <= c Sigma(X), c = 1 and c = 2",
        0.0, reported=True),
    "check_monotone_functional": CheckSpec(
        check_monotone_functional,
        "W(X(t),S) - sqrt(c Sigma(X(t))) is increasing along the flow", 0.0, reported=True),
    "check_density_system": CheckSpec(
        check_density_system, "real (p, q = -Hp) form of the flow's Burgers equation", 5e-3),
    "check_transport_equation": CheckSpec(
        check_transport_equation,
        "transport equation d/dt phi_st = pi Hp_t(phi_st) - phi_st/2", 5e-3),
    "check_burgers": CheckSpec(
        check_burgers, "Burgers equation of the OU flow: G_t + (G - z/2) G_z - G/2 = 0", 1e-4),
    "check_identity_i_ou": CheckSpec(
        check_identity_i_ou, "I(X) = 4 int (pi Hp - x/2)^2 p = Phi(X) - 2 + tau(X^2)", 1e-3),
    "check_phi_forms": CheckSpec(
        check_phi_forms, "Phi(X) = 4 pi^2 int (Hp)^2 p = (4/3) pi^2 int p^3", 1e-3),
    "check_hilbert_pairing": CheckSpec(
        check_hilbert_pairing, "int x Hp(x) p(x) dx = 1/(2 pi)", 1e-4),
    "check_chi_scaling": CheckSpec(
        check_chi_scaling, "chi(aX) = chi(X) + log|a|; Phi(aX) = Phi(X)/a^2", 1e-6),
    "check_metric_axioms": CheckSpec(
        check_metric_axioms, "W_p is a metric on laws with finite p-th moment", 1e-12,
        takes_list=True),
    "check_sigma_nonnegative": CheckSpec(
        check_sigma_nonnegative, "Sigma(X) >= 0: the semicircle maximizes chi at fixed variance",
        1e-6),
    "check_subordination_agreement": CheckSpec(
        check_subordination_agreement,
        "G of mu [+] sigma_r by subordination equals G along Burgers characteristics", 1e-8),
    "check_rmt_spectrum": CheckSpec(
        check_rmt_spectrum, "spectrum of A + sqrt(r) GUE approaches mu [+] sigma_r", 0.03),
    "check_entropy_fisher": CheckSpec(
        check_entropy_fisher, "d/de chi(X + sqrt(e) S) at e = 0 equals Phi(X)/2", 1e-2),
}


def run_check(check_id, measures, params=None, tolerance=None, measure_id="", ids=None,
              defaults=None):
    """Dispatch one registered check; numerical faults become failed records.

    ``defaults`` (e.g. resolution settings) are passed only to checks whose
    signature accepts them and only when ``params`` does not set them.
    """
    spec = CHECKS[check_id]
    params = dict(params or {})
    kw = dict(params)
    accepted = inspect.signature(spec.func).parameters
    reserved = {"measure_id", "ids", "tolerance", "m", "m0", "measures"}
    bad = sorted(k for k in params if k not in accepted or k in reserved)
    if bad:
        raise KeyError(f"{check_id}: unknown parameter(s) {', '.join(bad)}")
    for key, val in (defaults or {}).items():
        if key in accepted and key not in kw:
            kw[key] = val
    if not spec.reported:
        kw["tolerance"] = spec.tolerance if tolerance is None else tolerance
        if check_id == "check_rmt_spectrum":
            kw["ks_threshold"] = kw.pop("tolerance")
    try:
        if spec.takes_list:
            return spec.func(list(measures), ids=ids, **kw)
        return spec.func(measures[0], measure_id=measure_id, **kw)
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        from .records import VerificationRecord, _params_text

        return [VerificationRecord(check_id, spec.anchor, measure_id, _params_text(params),
                                   math.nan, math.nan, math.nan,
                                   float(kw.get("tolerance", 0.0)),
                                   "reported" if spec.reported else "fail",
                                   f"error: {type(exc).__name__}: {exc}")]


__all__ = ["CHECKS", "CheckSpec", "run_check", "T_MIN", "density_system_residual",
           "tail_decay_constant"] + [k for k in CHECKS]
