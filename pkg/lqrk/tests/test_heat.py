import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from lqrk import build_kernel
from lqrk.core import InvalidArgumentError, make_uniform_grid
from lqrk.heat import (
    SpectralHeatModel,
    analytic_heat_kernel,
    check_heat_semigroup,
    check_K1_identity,
    discretize_heat,
    mode_frequencies,
    mode_kernel_analytic,
)
from lqrk.riccati import solve_riccati


grid = make_uniform_grid(0.0, 1.0, 20)
model = SpectralHeatModel(5, 2 * np.pi, 1.0, grid)
heat_table = build_kernel(discretize_heat(model))


def test_mode_order():
    assert mode_frequencies(5).tolist() == [0, 1, -1, 2, -2]
    assert mode_frequencies(1).tolist() == [0]
    assert_allclose(SpectralHeatModel(3, 2 * np.pi, 1.0, grid).rates, [0.0, 1.0, 1.0])
    assert_allclose(model.rates, [0.0, 1.0, 1.0, 4.0, 4.0])
    assert model.mode_index(-1) == 2
    assert model.rate(2) == pytest.approx(4.0)
    with pytest.raises(InvalidArgumentError):
        model.mode_index(3)


def test_rates_scale_with_domain_length():
    assert_allclose(SpectralHeatModel(3, 1.0, 1.0, grid).rates, [0.0, 4 * np.pi ** 2, 4 * np.pi ** 2])


@pytest.mark.parametrize('modes, length, lam', [
    (4, 2 * np.pi, 1.0),
    (0, 2 * np.pi, 1.0),
    (2.5, 2 * np.pi, 1.0),
    (3, 0.0, 1.0),
    (3, 2 * np.pi, 0.0),
])
def test_bad_models(modes, length, lam):
    with pytest.raises(InvalidArgumentError):
        SpectralHeatModel(modes, length, lam, grid)


def test_discretized_problem():
    p = discretize_heat(model)
    assert (p.n, p.m) == (5, 5)
    assert_allclose(p.A[0], np.diag(model.rates))
    assert not np.any(p.M.values)
    assert_allclose(p.J0, np.eye(5))
    assert not np.any(solve_riccati(p).P)


def test_analytic_heat_kernel():
    assert analytic_heat_kernel(1.0, 0.0, 0.0) == pytest.approx(0.2820948, abs=1e-7)
    assert analytic_heat_kernel(0.5, [1.0, 0.0], [0.0, 0.0], d=2) == pytest.approx(
        np.exp(-0.5) / (2 * np.pi))
    with pytest.raises(InvalidArgumentError):
        analytic_heat_kernel(0.0, 0.0, 0.0)


def test_mode_kernels():
    K0, K1 = mode_kernel_analytic(model, 1, 1.0, 1.0)
    assert K1 == pytest.approx(0.4323324, abs=1e-7)
    assert K0 == pytest.approx(np.exp(-2.0))
    assert mode_kernel_analytic(model, 0, 0.3, 0.8) == pytest.approx((1.0, 0.3))
    assert mode_kernel_analytic(model, -1, 0.5, 1.0)[1] == pytest.approx((np.exp(-0.5) - np.exp(-1.5)) / 2.0)
    assert mode_kernel_analytic(model, 2, 0.5, 1.0) == mode_kernel_analytic(model, 2, 1.0, 0.5)


def test_mode_kernels_use_elapsed_time():
    shifted = SpectralHeatModel(5, 2 * np.pi, 2.0, make_uniform_grid(1.0, 2.0, 20))
    K0, K1 = mode_kernel_analytic(shifted, 1, 2.0, 2.0)
    assert K0 == pytest.approx(np.exp(-2.0) / 2.0)
    assert K1 == pytest.approx(0.4323324, abs=1e-7)


@settings(deadline=None, max_examples=20)
@given(st.integers(min_value=0, max_value=20), st.integers(min_value=0, max_value=20),
       st.sampled_from([0, 1, -1, 2, -2]))
def test_kernel_table_matches_closed_form(i, j, k):
    index = model.mode_index(k)
    K0, K1 = mode_kernel_analytic(model, k, grid.nodes[i], grid.nodes[j])
    assert heat_table.block(i, j, 'K0')[index, index] == pytest.approx(K0, abs=1e-12)
    assert heat_table.block(i, j, 'K1')[index, index] == pytest.approx(K1, abs=1e-12)


def test_heat_modes_decouple():
    off_diagonal = heat_table.dense() * (1.0 - np.eye(5))
    assert not np.any(off_diagonal)
    assert heat_table.method == 'exact'


def test_identity_report():
    report = check_K1_identity(model, 1.0)
    assert report.passed
    assert not report.printed_holds
    assert not report.printed[0].passed
    assert report.printed[0].severity == 'info'
    assert report.printed[0].value == pytest.approx(1.0)
    data = report.as_dict()
    assert data['passed'] is True
    assert data['printed_identity_holds'] is False
    assert len(data['change_of_variables']) == 5


def test_identity_with_explicit_times():
    report = check_K1_identity(model, 0.5, 1.0, tolerance=1e-9)
    assert report.passed
    assert [c.node for c in report.change_of_variables] == list(range(5))


def test_heat_semigroup():
    assert check_heat_semigroup(0.3, 0.7) < 1e-8
    assert check_heat_semigroup(0.1, 0.2, x=-1.0) < 1e-8
    with pytest.raises(InvalidArgumentError):
        check_heat_semigroup(0.0, 1.0)
