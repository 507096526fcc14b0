"""Named test measures used by the checks, the scripts and the test suite."""

from __future__ import annotations

from .cauchy import cauchy_smooth
from .measure import atoms, dilate, mix, semicircle, shift, uniform

BERNOULLI = ((-1.0, 0.5), (1.0, 0.5))


def bernoulli():
    return atoms(BERNOULLI, label="bernoulli")


def smoothed_bernoulli(lam: float = 0.05, n_grid: int = 4096):
    return cauchy_smooth(bernoulli(), lam, n_grid=n_grid, label=f"smooth_bernoulli_{lam:g}")


def smoothed_uniform(lam: float = 0.05, n_grid: int = 4096):
    return cauchy_smooth(uniform(-1.0, 1.0, n_grid=n_grid), lam, n_grid=n_grid,
                         label=f"smooth_uniform_{lam:g}")


def scaled_semicircle(alpha: float, n_grid: int = 4096):
    return dilate(semicircle(0.0, 1.0, n_grid=n_grid, label="semicircle"), alpha)


def bimodal(n_grid: int = 4096):
    return mix([(0.5, semicircle(-2.0, 0.5, n_grid)), (0.5, semicircle(2.0, 0.5, n_grid))],
               label="bimodal")


def smooth_family(n_grid: int = 4096):
    """Ten laws with continuous densities: semicircles, mixtures, smoothed laws."""
    return {
        "semicircle": semicircle(0.0, 1.0, n_grid, label="semicircle"),
        "semicircle_a0.5": scaled_semicircle(0.5, n_grid),
        "semicircle_a2": scaled_semicircle(2.0, n_grid),
        "semicircle_a3": scaled_semicircle(3.0, n_grid),
        "semicircle_shift1.5": shift(semicircle(0.0, 1.0, n_grid), 1.5),
        "bimodal": bimodal(n_grid),
        "mix_asym": mix([(0.3, semicircle(-1.0, 0.3, n_grid)), (0.7, semicircle(1.0, 0.5, n_grid))],
                        label="mix_asym"),
        "smooth_bernoulli": smoothed_bernoulli(0.05, n_grid),
        "smooth_uniform": smoothed_uniform(0.05, n_grid),
        "smooth_three_atoms": cauchy_smooth(atoms([(-1.5, 0.25), (0.0, 0.5), (2.0, 0.25)]), 0.1,
                                            n_grid=n_grid, label="smooth_three_atoms"),
    }
