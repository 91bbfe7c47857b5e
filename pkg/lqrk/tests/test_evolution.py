import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from lqrk.core import (
    GridMismatchError,
    InvalidArgumentError,
    OperatorPath,
    OutOfRangeError,
    make_uniform_grid,
)
from lqrk.evolution import (
    _column_chunks,
    adjoint_block,
    closed_loop_generator,
    open_loop_family,
    packed_index,
    propagate,
    solve_forward,
)
from lqrk.problems import random_problem, scalar_lq
from lqrk.riccati import solve_riccati


grid = make_uniform_grid(0.0, 1.0, 40)
rotation = np.array([[0.5, -1.0], [1.0, 0.5]])
rotation_family = propagate(OperatorPath.constant(rotation, grid))
varying_family = open_loop_family(random_problem(5, 3, 2, grid, time_varying=True))


def test_packed_index():
    assert [packed_index(i, j) for i in range(3) for j in range(i + 1)] == list(range(6))


def test_exact_diagonal_family():
    gen = OperatorPath.constant(np.diag([1.0, -2.0]), grid)
    family = propagate(gen)
    assert family.method == 'exact'
    assert_allclose(family.transition(1.0, 0.25), np.diag([np.exp(-0.75), np.exp(1.5)]))
    assert_allclose(family.block(7, 7), np.eye(2))


def test_rk4_matches_matrix_exponential():
    assert rotation_family.method == 'rk4'
    for i, j in [(40, 0), (20, 10), (33, 32)]:
        elapsed = grid.nodes[i] - grid.nodes[j]
        expected = scipy.linalg.expm(-rotation * elapsed)
        assert_allclose(rotation_family.block(i, j), expected, atol=1e-7)


def test_rk4_is_fourth_order():
    # Spiral generator with |λ| ≈ 3.3; errors stay well above rounding at 400 steps.
    generator = np.array([[-2.0, 3.0], [-3.0, -1.0]])
    exact = scipy.linalg.expm(-generator)
    counts = np.array([25, 50, 100, 200, 400])
    errors = []
    for count in counts:
        family = propagate(OperatorPath.constant(generator, make_uniform_grid(0.0, 1.0, count)),
                           method='rk4')
        errors.append(np.max(np.abs(family.block(count, 0) - exact)))
    errors = np.array(errors)
    ratios = errors[:-1] / errors[1:]
    assert np.all((ratios > 12.0) & (ratios < 20.0))
    slope = np.polyfit(np.log(1.0 / counts), np.log(errors), 1)[0]
    assert slope == pytest.approx(4.0, abs=0.2)


def test_rk4_and_exact_agree_on_diagonal_generators():
    gen = OperatorPath.constant(np.diag([0.3, 2.0]), grid)
    exact = propagate(gen, method='exact')
    rk4 = propagate(gen, method='rk4')
    assert_allclose(rk4.blocks, exact.blocks, atol=1e-7)


@settings(deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=40), min_size=3, max_size=3))
def test_composition_law(indices):
    j, k, i = sorted(indices)
    composed = varying_family.block(i, k).dot(varying_family.block(k, j))
    assert_allclose(composed, varying_family.block(i, j), rtol=1e-10, atol=1e-12)


def test_rows_and_columns():
    family = varying_family
    assert family.row(5).shape == (6, 3, 3)
    assert_allclose(family.row(5)[2], family.block(5, 2))
    assert family.column(38).shape == (3, 3, 3)
    assert_allclose(family.column(38)[1], family.block(39, 38))
    assert_allclose(family.from_start(), family.column(0))
    assert_allclose(family.from_start(4), family.block(4, 0))
    assert_allclose(family.apply(9, 3, np.ones(3)), family.block(9, 3).sum(axis=1))
    assert len(family) == 41 * 42 // 2


def test_transitions_only_go_forward():
    with pytest.raises(OutOfRangeError):
        rotation_family.block(3, 4)
    with pytest.raises(OutOfRangeError):
        rotation_family.transition(0.5, 0.75)
    with pytest.raises(OutOfRangeError):
        rotation_family.block(41, 0)


def test_adjoint_block():
    assert_allclose(adjoint_block(rotation_family, 0.5, 0.25), rotation_family.block(20, 10).T)
    with pytest.raises(OutOfRangeError):
        adjoint_block(rotation_family, 0.25, 0.5)


def test_bad_methods():
    with pytest.raises(InvalidArgumentError):
        propagate(OperatorPath.constant(rotation, grid), method='exact')
    with pytest.raises(InvalidArgumentError):
        propagate(OperatorPath.constant(rotation, grid), method='euler')
    with pytest.raises(InvalidArgumentError):
        propagate(OperatorPath.constant(np.ones((2, 3)), grid))
    with pytest.raises(GridMismatchError):
        propagate(OperatorPath.constant(rotation, grid), make_uniform_grid(0.0, 2.0, 40))


def test_thread_count_does_not_change_the_table(monkeypatch):
    gen = OperatorPath.constant(rotation, grid)
    monkeypatch.setenv('LQRK_THREADS', '1')
    serial = propagate(gen)
    monkeypatch.setenv('LQRK_THREADS', '4')
    threaded = propagate(gen)
    assert_allclose(serial.blocks, threaded.blocks, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize('size, chunks', [(5, 1), (41, 8), (100, 3), (3, 10)])
def test_column_chunks_cover_every_column(size, chunks):
    bounds = _column_chunks(size, chunks)
    assert bounds[0][0] == 0 and bounds[-1][1] == size
    for (_, hi), (lo, _) in zip(bounds, bounds[1:]):
        assert hi == lo
    assert all(lo < hi for lo, hi in bounds)


def test_blocks_are_read_only():
    with pytest.raises(ValueError):
        rotation_family.blocks[0, 0, 0] = 1.0


def test_closed_loop_generator_of_scalar_problem():
    p = scalar_lq(grid)
    P = solve_riccati(p)
    gen = closed_loop_generator(p, P)
    assert_allclose(gen.values[:, 0, 0], np.tanh(1.0 - grid.nodes), atol=1e-7)
    with pytest.raises(GridMismatchError):
        closed_loop_generator(scalar_lq(make_uniform_grid(0.0, 1.0, 10)), P)


def test_solve_forward_with_forcing():
    # dy/dt + y = 1 from y(0) = 0
    gen = OperatorPath.constant([[1.0]], grid)
    y = solve_forward(gen, [0.0], forcing=np.ones((len(grid), 1)))
    assert_allclose(y.values[:, 0], 1.0 - np.exp(-grid.nodes), atol=1e-8)


def test_solve_forward_agrees_with_family():
    y0 = np.array([1.0, -2.0, 0.5])
    y = solve_forward(varying_family.generator, y0)
    assert_allclose(y.values, varying_family.from_start().dot(y0), atol=1e-12)
