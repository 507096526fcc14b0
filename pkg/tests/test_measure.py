import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from freewass.measure import (AtomicMeasure, GridMeasure, MeasureError, atoms, cdf, dilate,
                              grid_measure, measure_from_spec, mix, moment, quantile,
                              quantile_table, semicircle, shift, uniform, variance)

# closed-form semicircle CDF at 1, 1/2 + (sqrt(3) + 4 arcsin(1/2)) / (4 pi),
# cross-checked by 30-digit adaptive quadrature of the density
SEMICIRCLE_CDF_1 = 0.8044988905221147


def test_semicircle_density_at_center(sc):
    assert sc.density[sc.n_grid // 2 - 1: sc.n_grid // 2 + 1].max() == pytest.approx(
        1 / math.pi, abs=1e-6)


def test_semicircle_moments(sc):
    assert sc.mass == pytest.approx(1.0, abs=1e-9)
    assert moment(sc, 1) == pytest.approx(0.0, abs=1e-14)
    assert moment(sc, 2) == pytest.approx(1.0, abs=1e-6)
    # Catalan number C_2
    assert moment(sc, 4) == pytest.approx(2.0, abs=1e-5)


def test_semicircle_support_and_symmetry():
    m = semicircle(3.0, 1.0)
    assert (m.support_lo, m.support_hi) == (1.0, 5.0)
    np.testing.assert_array_equal(m.density, m.density[::-1])


def test_semicircle_rejects_bad_variance():
    with pytest.raises(MeasureError):
        semicircle(0.0, 0.0)
    with pytest.raises(MeasureError):
        semicircle(0.0, -1.0)


def test_gridmeasure_validation():
    with pytest.raises(MeasureError):
        GridMeasure(0.0, 1.0, np.ones(8))
    with pytest.raises(MeasureError):
        GridMeasure(1.0, 0.0, np.ones(32))
    with pytest.raises(MeasureError):
        GridMeasure(0.0, 1.0, -np.ones(32))
    with pytest.raises(MeasureError):
        GridMeasure(0.0, 1.0, 2 * np.ones(32))
    m = grid_measure(0.0, 2.0, np.ones(64), normalize=True)
    assert m.mass == pytest.approx(1.0, abs=1e-14)
    assert m.renormalization == pytest.approx(0.5)


def test_atomic_canonicalization():
    m = atoms([(1.0, 0.25), (-1.0, 0.5), (1.0, 0.25)])
    np.testing.assert_array_equal(m.locations, [-1.0, 1.0])
    np.testing.assert_allclose(m.weights, [0.5, 0.5])
    with pytest.raises(MeasureError):
        atoms([(0.0, 0.5)])
    with pytest.raises(MeasureError):
        atoms([(0.0, 1.5), (1.0, -0.5)])


def test_cdf_values(sc):
    assert cdf(sc, 0.0) == pytest.approx(0.5, abs=1e-12)
    assert cdf(sc, 2.0) == 1.0
    assert cdf(sc, -3.0) == 0.0
    assert cdf(sc, 1.0) == pytest.approx(SEMICIRCLE_CDF_1, abs=1e-6)


def test_quantile_table_examples(sc, bern):
    np.testing.assert_array_equal(quantile_table(bern, 4).values, [-1.0, -1.0, 1.0, 1.0])
    q = quantile_table(sc, 1000).values
    np.testing.assert_allclose(q, -q[::-1], atol=1e-12)
    assert abs(quantile_table(sc, 1001).values[500]) < 1e-12


def test_quantile_reproduces_x_within_a_cell(family):
    for m in family.values():
        # nodes with positive density (the quantile is not unique inside gaps)
        x = m.nodes[5:-5:37][m.density[5:-5:37] > 0]
        assert np.max(np.abs(quantile(m, cdf(m, x)) - x)) <= m.h


@given(st.floats(0.001, 0.999))
def test_cdf_quantile_inversion(u):
    m = semicircle(0.3, 1.7, n_grid=512)
    assert abs(cdf(m, quantile(m, u)) - u) <= 1.0 / m.n_grid


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_cdf_monotone(a, b):
    m = semicircle(0.0, 1.0, n_grid=256)
    lo, hi = min(a, b), max(a, b)
    assert cdf(m, lo) <= cdf(m, hi)


def test_moment_atoms(bern):
    assert moment(bern, 2) == 1.0
    assert variance(bern) == 1.0
    with pytest.raises(MeasureError):
        moment(bern, -1)


def test_dilate_semicircle_matches_wider_semicircle(sc):
    a = dilate(sc, 2.0)
    b = semicircle(0.0, 4.0)
    assert (a.support_lo, a.support_hi) == (b.support_lo, b.support_hi)
    np.testing.assert_allclose(a.density, b.density, atol=1e-12)
    assert dilate(sc, 1.0) is sc
    with pytest.raises(MeasureError):
        dilate(sc, 0.0)


def test_dilate_negative_mirrors():
    m = mix([(0.3, semicircle(-1, 0.3, 512)), (0.7, semicircle(1, 0.5, 512))])
    r = dilate(m, -1.0)
    np.testing.assert_allclose(r.density, m.density[::-1])
    assert moment(r, 1) == pytest.approx(-moment(m, 1), abs=1e-14)
    z = np.array([0.3 + 0.5j, -1.2 + 0.1j])
    np.testing.assert_allclose(r.cauchy_pair(z)[0], -np.conj(m.cauchy_pair(-np.conj(z))[0]))


@given(st.floats(-3, 3).filter(lambda a: abs(a) > 0.1), st.integers(1, 4))
def test_dilate_moment_scaling(alpha, k):
    m = mix([(0.3, semicircle(-1, 0.3, 256)), (0.7, semicircle(1, 0.5, 256))])
    lhs = moment(dilate(m, alpha), k)
    rhs = alpha ** k * moment(m, k)
    assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(rhs))


def test_shift_and_uniform():
    m = shift(semicircle(0, 1), 3.0)
    assert moment(m, 1) == pytest.approx(3.0, abs=1e-9)
    u = uniform(-1, 1)
    assert moment(u, 2) == pytest.approx(1 / 3, abs=1e-6)


def test_mix_mass_and_mean():
    m = mix([(0.5, semicircle(-2, 0.5)), (0.5, semicircle(2, 0.5))])
    assert m.mass == pytest.approx(1.0, abs=1e-12)
    assert moment(m, 1) == pytest.approx(0.0, abs=1e-9)
    # variance of the mixture: 0.5 + 4; the interior square-root edges of the
    # components limit the grid quadrature to O(h^1.5)
    assert moment(m, 2) == pytest.approx(4.5, abs=5e-5)
    a = mix([(0.5, atoms([(0, 1)])), (0.5, atoms([(1, 1)]))])
    assert isinstance(a, AtomicMeasure)
    with pytest.raises(MeasureError):
        mix([(0.5, semicircle(0, 1)), (0.5, atoms([(0, 1)]))])
    with pytest.raises(MeasureError):
        mix([(0.5, semicircle(0, 1)), (0.6, semicircle(0, 2))])


def test_measure_from_spec_roundtrip():
    m = measure_from_spec({"type": "dilate", "alpha": 2,
                           "of": {"type": "semicircle", "center": 0, "variance": 1}})
    assert moment(m, 2) == pytest.approx(4.0, abs=1e-5)
    m = measure_from_spec({"type": "mix", "components": [
        [0.5, {"type": "semicircle", "center": -2, "variance": 0.5}],
        [0.5, {"type": "semicircle", "center": 2, "variance": 0.5}]]})
    assert moment(m, 2) == pytest.approx(4.5, abs=5e-5)
    m = measure_from_spec({"type": "atoms", "atoms": [[-1, 0.5], [1, 0.5]]})
    assert isinstance(m, AtomicMeasure)
    m = measure_from_spec({"type": "grid", "lo": 0, "hi": 1, "density": [1.0] * 32})
    assert m.mass == pytest.approx(1.0)


@pytest.mark.parametrize("spec,field", [
    ({"type": "semicircle"}, "m.variance"),
    ({"type": "semicircle", "variance": "x"}, "m.variance"),
    ({"type": "dilate", "alpha": 2, "of": {"type": "nope"}}, "m.of.type"),
    ({"type": "mix", "components": [[1.0, {"type": "atoms", "atoms": [[0, 2]]}]]},
     "m.components[0][1]"),
    ({"type": "atoms", "atoms": [[0, 1, 2]]}, "m.atoms[0]"),
])
def test_measure_from_spec_errors_name_field(spec, field):
    with pytest.raises(MeasureError) as err:
        measure_from_spec(spec, path="m")
    assert str(err.value).startswith(field)
