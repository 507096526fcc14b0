"""Calibrate the random-matrix oracle.

Prints the KS and ``W_2`` distances between pooled deformed-GUE spectra and
the free convolution computed by subordination, as the dimension grows, and
the KS distance to deliberately wrong targets (which the oracle must reject).

Usage::

    python scripts/rmt_calibration.py [--trials 20] [--seed 0]
"""

import argparse

from freewass.families import bernoulli
from freewass.freeconv import free_convolution
from freewass.measure import atoms, dilate, semicircle
from freewass.rmt import empirical_w2, ks_distance, sample_deformed_gue


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    cases = {"delta0 [+] sigma_1": (atoms([(0.0, 1.0)]), 1.0),
             "bernoulli [+] sigma_0.5": (bernoulli(), 0.5)}
    for name, (m, r) in cases.items():
        target, _ = free_convolution(m, r)
        print(name)
        for n in (50, 100, 200, 400):
            s = sample_deformed_gue(m, r, n, args.trials, args.seed)
            print(f"  n_dim {n:4d}  KS {ks_distance(s, target):.4f}  W2 {empirical_w2(s, target):.4f}")
    s = sample_deformed_gue(atoms([(0.0, 1.0)]), 1.0, 400, args.trials, args.seed)
    for name, wrong in (("sigma_2 (variance doubled)", semicircle(0.0, 2.0)),
                        ("dilate(sigma_1, 2) (std doubled)", dilate(semicircle(0.0, 1.0), 2.0))):
        print(f"wrong target {name}: KS {ks_distance(s, wrong):.4f}")


if __name__ == "__main__":
    main()
