"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or ``python tests/test_acceptance.py``.
"""

import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np
import pytest

from freewass.cli import main as cli_main
from freewass.families import bernoulli, scaled_semicircle, smooth_family, smoothed_bernoulli
from freewass.freeconv import burgers_residual, free_convolution
from freewass.functionals import chi, i_ou, i_ou_forms, log_energy, phi, sigma_tilde
from freewass.measure import GridMeasure, atoms, semicircle, shift, uniform
from freewass.rmt import sample_deformed_gue
from freewass.transport import (brute_force_w, metric_axiom_suite,
                                transport_equation_residual, wasserstein)
from freewass.verify import (check_burgers, check_chi_scaling, check_density_system,
                             check_distance_speed, check_entropy_derivative,
                             check_hilbert_pairing, check_lsi, check_rmt_spectrum,
                             check_subordination_agreement, check_talagrand,
                             check_transport_equation, default_z_grid, density_system_residual)

ROOT = Path(__file__).resolve().parents[1]
RESULTS = {}
SEED = 20240611

# closed forms at the standard semicircle
CHI_SEMICIRCLE = 0.5 + 0.5 * math.log(2 * math.pi)


def verdict(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


def observed_order(steps, residuals):
    """Least-squares slope of log(residual) against log(step)."""
    return float(np.polyfit(np.log(steps), np.log(residuals), 1)[0])


def second_order(steps, residuals):
    p = observed_order(steps, residuals)
    return 1.5 <= p <= 2.5, p


@pytest.fixture(scope="module")
def fam():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return smooth_family()


@pytest.fixture(scope="module")
def sc():
    return semicircle(0.0, 1.0)


@pytest.fixture(scope="module")
def sc2():
    return scaled_semicircle(2.0)


def test_criterion_01_semicircle_ground_truths(sc):
    vals = {"sigma": (sigma_tilde(sc), 0.0, 1e-4), "phi": (phi(sc), 1.0, 1e-3),
            "I": (i_ou(sc), 0.0, 1e-4), "log_energy": (log_energy(sc), -0.25, 1e-4),
            "chi": (chi(sc), CHI_SEMICIRCLE, 1e-4)}
    errs = {k: abs(v - ref) for k, (v, ref, _) in vals.items()}
    ok = all(errs[k] <= tol for k, (_, _, tol) in vals.items())
    verdict(1, ok, "semicircle ground truths, max errors "
            + ", ".join(f"{k}={e:.1e}" for k, e in errs.items()))


def test_criterion_02_i_identity(fam):
    gaps = {}
    for name, m in fam.items():
        direct, via_phi, _ = i_ou_forms(m)
        # relative, with unit floor: I vanishes at the semicircle
        gaps[name] = abs(direct - via_phi) / max(abs(direct), abs(via_phi), 1.0)
    worst = max(gaps, key=gaps.get)
    verdict(2, len(gaps) == 10 and gaps[worst] <= 1e-3,
            f"I = Phi - 2 + tau(X^2) on {len(gaps)} laws, worst rel gap {gaps[worst]:.1e} "
            f"({worst}) <= 1e-3")


def test_criterion_03_scaling_laws(fam):
    worst = 0.0
    n = 0
    for m in fam.values():
        for alpha in (0.5, 2.0, 3.0):
            for r in check_chi_scaling(m, alpha, tolerance=1e-6):
                worst = max(worst, r.margin)
                n += 1
    verdict(3, worst <= 1e-6, f"chi/log_energy/Phi scaling, {n} records, worst error "
            f"{worst:.1e} <= 1e-6")


def test_criterion_04_hilbert_benchmark(sc, fam):
    # the closed-form boundary values and the interpolant quadrature route
    bare = GridMeasure(sc.support_lo, sc.support_hi, sc.density, sqrt_edges=(True, True))
    err = max(float(np.max(np.abs(mm.boundary.real / math.pi - mm.nodes / (2 * math.pi))))
              for mm in (sc, bare))
    pairing = max(check_hilbert_pairing(m)[0].margin for m in fam.values())
    verdict(4, err <= 1e-4 and pairing <= 1e-4,
            f"Hp = x/(2pi) max error {err:.1e}; pairing identity worst {pairing:.1e} "
            f"(both <= 1e-4)")


def test_criterion_05_free_convolution_oracles(sc, sc2, fam):
    laws = dict(fam, bernoulli=bernoulli())
    z = np.concatenate([default_z_grid(25, 0.5), default_z_grid(25, 1.0),
                        default_z_grid(13, 3.0)])
    sub_gap = max(check_subordination_agreement(m, 0.5, z=z)[0].margin for m in laws.values())
    dens_err = 0.0
    for a, b in ((1.0, 1.0), (0.5, 2.0), (2.0, 0.25)):
        m, _ = free_convolution(semicircle(0.0, a), b)
        v = a + b
        exact = np.sqrt(np.clip(4 * v - m.nodes ** 2, 0, None)) / (2 * math.pi * v)
        dens_err = max(dens_err, float(np.max(np.abs(m.density - exact))))
    stationary = check_burgers(sc)[0].margin
    zz = default_z_grid()
    steps = np.array([0.04, 0.02, 0.01])
    orders = {}
    for name, m in (("semicircle_a2", sc2), ("smooth_bernoulli", fam["smooth_bernoulli"])):
        res = [float(np.max(np.abs(burgers_residual(m, 0.5, zz, d, d)))) for d in steps]
        orders[name] = second_order(steps, res)
    ok = (sub_gap <= 1e-8 and dens_err < 1e-3 and stationary < 1e-4
          and all(o[0] for o in orders.values()))
    verdict(5, ok, f"subordination vs characteristics {sub_gap:.1e} <= 1e-8 on {len(laws)} laws; "
            f"sigma_a [+] sigma_b density {dens_err:.1e} < 1e-3; stationary Burgers "
            f"{stationary:.1e} < 1e-4; step orders "
            + ", ".join(f"{k}={o[1]:.2f}" for k, o in orders.items()))


def test_criterion_06_rmt_oracle():
    d0 = atoms([(0.0, 1.0)])
    rec0 = check_rmt_spectrum(d0, 1.0, 400, 50, seed=0, ks_threshold=0.03)
    rec1 = check_rmt_spectrum(bernoulli(), 0.5, 400, 50, seed=1, ks_threshold=0.03)
    ks0, ks1 = rec0[0].lhs, rec1[0].lhs
    a = sample_deformed_gue(d0, 1.0, 400, 3, seed=0)
    b = sample_deformed_gue(d0, 1.0, 400, 3, seed=0)
    same = np.array_equal(a.eigenvalues, b.eigenvalues)
    verdict(6, ks0 < 0.03 and ks1 < 0.03 and same,
            f"delta0 + GUE KS {ks0:.4f}, Bernoulli [+] sigma_0.5 KS {ks1:.4f} (< 0.03, "
            f"n_dim=400, 50 trials); reseeded rerun identical: {same}")


def _random_atomic(rng, total):
    k = int(rng.integers(1, total + 1))
    cuts = np.sort(rng.choice(np.arange(1, total), size=k - 1, replace=False)) \
        if k > 1 else np.array([], int)
    parts = np.diff(np.concatenate([[0], cuts, [total]]))
    locs = rng.choice(np.arange(-40, 41), size=k, replace=False) / 8.0
    return atoms(list(zip(locs.tolist(), (parts / total).tolist())))


def _random_law(rng):
    kind = int(rng.integers(3))
    if kind == 0:
        return _random_atomic(rng, int(rng.integers(1, 9)))
    if kind == 1:
        return semicircle(float(rng.uniform(-3, 3)), float(rng.uniform(0.1, 3)), n_grid=512)
    return shift(uniform(0.0, float(rng.uniform(0.2, 3.0)), n_grid=512), float(rng.uniform(-3, 2)))


def test_criterion_07_transport():
    rng = np.random.default_rng(SEED)
    worst_bf = 0.0
    for _ in range(200):
        total = int(rng.integers(1, 9))
        m, v = _random_atomic(rng, total), _random_atomic(rng, total)
        for p in (1.0, 2.0):
            w_q, w_bf = wasserstein(m, v, p), brute_force_w(m, v, p)
            worst_bf = max(worst_bf, abs(w_q - w_bf) / max(1.0, w_bf))
    violations = 0
    n_records = 0
    for k in range(100):
        laws = [_random_law(rng) for _ in range(3)]
        if k % 10 == 0:
            laws[2] = laws[0]
        for p in (1.0, 2.0):
            recs = metric_axiom_suite(laws, p, ids=["a", "b", "c"])
            violations += sum(r.status != "pass" for r in recs)
            n_records += len(recs)
    verdict(7, worst_bf <= 1e-12 and violations == 0,
            f"quantile vs brute-force W on 200 pairs x p in {{1,2}}: worst rel diff "
            f"{worst_bf:.1e}; metric axioms on 100 triples: {violations} violations in "
            f"{n_records} records")


def test_criterion_08_flow_identities(sc2, fam):
    sb = fam["smooth_bernoulli"]
    lines = []
    ok = True
    for name, m in (("semicircle_a2", sc2), ("smooth_bernoulli", sb)):
        ent = check_entropy_derivative(m, 0.5, 1e-3, tolerance=1e-2)[0]
        dens = check_density_system(m, tolerance=5e-3)[0]
        trans = check_transport_equation(m, tolerance=5e-3)[0]
        ok &= all(r.status == "pass" for r in (ent, dens, trans))
        lines.append(f"{name}: dSigma/dt rel {ent.margin:.1e}, (p,q) {dens.margin:.1e}, "
                     f"transport {trans.margin:.1e}")
    # refinement in the time step and in the grid spacing
    dts = np.array([0.04, 0.02, 0.01])
    orders = {}
    for name, m in (("semicircle_a2", scaled_semicircle(2.0, 1024)),
                    ("smooth_bernoulli", smoothed_bernoulli(0.05, 1024))):
        res = [max(float(np.max(np.abs(r))) for r in density_system_residual(m, 0.5, d, 1024)[1:])
               for d in dts]
        orders[f"(p,q) dt {name}"] = second_order(dts, res)
    grids = (512, 1024, 2048)
    for name, mk in (("semicircle_a2", lambda n: scaled_semicircle(2.0, n)),
                     ("smooth_bernoulli", lambda n: smoothed_bernoulli(0.05, n))):
        res = [max(float(np.max(np.abs(r)))
                   for r in density_system_residual(mk(n), 0.5, 1e-3, n, derivative="grid")[1:])
               for n in grids]
        orders[f"(p,q) h {name}"] = second_order(1.0 / np.array(grids), res)
    m = scaled_semicircle(2.0, 1024)
    res = [transport_equation_residual(m, 0.2, 0.4, d, n_grid=1024).max for d in dts]
    orders["transport dt semicircle_a2"] = second_order(dts, res)
    grids = (1024, 2048, 4096)
    res = [transport_equation_residual(sb if n == 4096 else smoothed_bernoulli(0.05, n),
                                       0.2, 0.4, 1e-3, n_grid=n).max for n in grids]
    orders["transport h smooth_bernoulli"] = second_order(1.0 / np.array(grids), res)
    ok &= all(o[0] for o in orders.values())
    verdict(8, ok, "; ".join(lines) + "; orders " + ", ".join(
        f"{k}={o[1]:.2f}" for k, o in orders.items()))


def test_criterion_09_inequalities(sc2, fam):
    lsi = [check_lsi(m, measure_id=n)[0] for n, m in fam.items()]
    lsi_ok = all(r.status == "pass" for r in lsi)
    windows = [(sc2, "semicircle_a2", s, t, 4096)
               for s, t in ((0.05, 0.1), (0.1, 0.3), (0.2, 0.4), (0.5, 1.0), (1.0, 2.0))]
    windows += [(fam["mix_asym"], "mix_asym", 0.2, 0.4, 4096),
                (fam["bimodal"], "bimodal", 0.2, 0.4, 4096),
                (smoothed_bernoulli(0.05, 1024), "smooth_bernoulli", 0.2, 0.4, 1024)]
    ds = [check_distance_speed(m, s, t, n_grid=n, measure_id=name)[0]
          for m, name, s, t, n in windows]
    ds_ok = all(r.status == "pass" for r in ds)
    min_lsi = min(r.margin for r in lsi)
    min_ds = min(r.margin for r in ds)
    verdict(9, lsi_ok and ds_ok,
            f"Sigma <= I/2 on {len(lsi)} laws (min slack {min_lsi:.2e}); distance-speed on "
            f"{len(ds)} windows (min slack {min_ds:.2e})")


def test_criterion_10_talagrand_probe(sc2, fam):
    c1, c2 = check_talagrand(sc2)
    w2 = c1.lhs
    sig = c1.rhs
    probe_ok = (abs(w2 - 1.0) <= 1e-3 and abs(sig - 0.80685) <= 1e-3
                and abs(c1.margin + 0.193) <= 2e-3 and abs(c2.margin - 0.614) <= 2e-3
                and c1.status == c2.status == "reported")
    margins = {n: check_talagrand(m)[1].margin for n, m in fam.items()}
    worst = min(margins, key=margins.get)
    verdict(10, probe_ok and margins[worst] >= 0,
            f"dilate(sigma,2): W^2 {w2:.6f}, Sigma {sig:.6f}, margin1 {c1.margin:+.4f} "
            f"(reported), margin2 {c2.margin:+.4f}; family min margin2 {margins[worst]:.2e} "
            f"({worst})")


def test_criterion_11_determinism(tmp_path):
    raw = json.loads((ROOT / "configs" / "flow_suite.json").read_text())
    outputs = []
    for k, workers in enumerate(("1", "2")):
        d = tmp_path / f"run{k}"
        d.mkdir()
        cfg = dict(raw, output_dir=str(d / "out"))
        path = d / "cfg.json"
        path.write_text(json.dumps(cfg))
        old = os.environ.get("FREEWASS_WORKERS")
        os.environ["FREEWASS_WORKERS"] = workers
        try:
            status = cli_main(["run", str(path)])
        finally:
            if old is None:
                os.environ.pop("FREEWASS_WORKERS")
            else:
                os.environ["FREEWASS_WORKERS"] = old
        assert status == 0
        outputs.append({p.name: p.read_bytes() for p in sorted((d / "out").glob("*.csv"))})
    same = outputs[0] == outputs[1]
    verdict(11, same and len(outputs[0]) >= 4,
            f"two runs of the flow suite (1 and 2 workers): {len(outputs[0])} CSVs "
            f"byte-identical: {same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
