"""Refinement study for the flow identities.

Prints the residual of the complex Burgers equation, of the real system for
``(p, q)`` and of the transport equation as the time step or the grid
spacing is halved, together with the observed order (least-squares slope
of ``log residual`` against ``log step``).

Usage::

    python scripts/convergence_study.py [--quick]
"""

import argparse

import numpy as np

from freewass.families import scaled_semicircle, smoothed_bernoulli
from freewass.freeconv import burgers_residual
from freewass.transport import transport_equation_residual
from freewass.verify import default_z_grid, density_system_residual


def order(steps, res):
    return float(np.polyfit(np.log(steps), np.log(res), 1)[0])


def table(title, steps, res):
    print(title)
    for h, r in zip(steps, res):
        print(f"  step {h:<12.6g} residual {r:.3e}")
    print(f"  observed order {order(steps, res):.2f}")


def density_max(m, dt, n, derivative="exact"):
    return max(float(np.max(np.abs(r)))
               for r in density_system_residual(m, 0.5, dt, n, derivative=derivative)[1:])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="skip the n_grid = 4096 transport run")
    args = ap.parse_args(argv)

    laws = {"semicircle_a2": lambda n: scaled_semicircle(2.0, n),
            "smooth_bernoulli": lambda n: smoothed_bernoulli(0.05, n)}
    dts = np.array([0.04, 0.02, 0.01])
    z = default_z_grid()
    for name, mk in laws.items():
        m = mk(1024)
        table(f"Burgers, {name}, dt = dz",
              dts, [float(np.max(np.abs(burgers_residual(m, 0.5, z, d, d)))) for d in dts])
        table(f"(p, q) system, {name}, dt (n_grid 1024)",
              dts, [density_max(m, d, 1024) for d in dts])
        grids = np.array([512, 1024, 2048])
        table(f"(p, q) system, {name}, grid derivative, h = 1/n_grid",
              1.0 / grids, [density_max(mk(n), 1e-3, n, "grid") for n in grids])
    m = scaled_semicircle(2.0, 1024)
    table("transport, semicircle_a2, dt (n_grid 1024)",
          dts, [transport_equation_residual(m, 0.2, 0.4, d, n_grid=1024).max for d in dts])
    grids = np.array([1024, 2048] if args.quick else [1024, 2048, 4096])
    table("transport, smooth_bernoulli, h = 1/n_grid (dt 1e-3)",
          1.0 / grids, [transport_equation_residual(smoothed_bernoulli(0.05, n), 0.2, 0.4, 1e-3,
                                                    n_grid=n).max for n in grids])


if __name__ == "__main__":
    main()
