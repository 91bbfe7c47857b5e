import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from lqrk import build_kernel
from lqrk.core import (
    ControlPath,
    GridMismatchError,
    InvalidArgumentError,
    NotInSpaceError,
    OperatorPath,
    ProblemData,
    Trajectory,
    make_uniform_grid,
)
from lqrk.evolution import closed_loop_generator, open_loop_family, propagate
from lqrk.kernel import (
    RkhsElement,
    adjoint_asymmetry,
    build_kernel_table,
    canonical_control,
    check_reproducing,
    control_kernel,
    element_from_control,
    free_element,
    gram_min_eigenvalue,
    kernel_apply,
    kernel_at,
    kernel_combination,
    kernel_summary,
    project_onto_HK0,
    project_onto_HK1,
    project_onto_K0_section,
    rkhs_inner,
    rkhs_norm,
    split_element,
)
from lqrk.problems import random_problem, scalar_lq
from lqrk.riccati import solve_lyapunov_pi, solve_riccati


grid = make_uniform_grid(0.0, 1.0, 50)

# M = 0: P vanishes and K(s, t) = 1 + min(s, t).
integrator = scalar_lq(grid, m=0.0)
integrator_table = build_kernel(integrator)

# M = 1: P(t) = tanh(1 - t).
tanh_problem = scalar_lq(grid)
tanh_table = build_kernel(tanh_problem)

fine_grid = make_uniform_grid(0.0, 1.0, 200)
random = random_problem(2, 3, 2, fine_grid, time_varying=True)
random_table = build_kernel(random)
random_family = open_loop_family(random)


def sine_control(p, seed):  # type: (ProblemData, int) -> ControlPath
    rng = np.random.default_rng(seed)
    amplitudes = rng.standard_normal((3, p.m))
    k = np.arange(1, 4)[:, None]
    return ControlPath(p.grid, [np.sum(amplitudes * np.sin(k * np.pi * t + 0.3), axis=0)
                                for t in p.grid.nodes])


def test_one_plus_min():
    assert integrator_table.method == 'exact'
    nodes = grid.nodes
    assert_allclose(integrator_table.dense()[:, :, 0, 0], 1.0 + np.minimum.outer(nodes, nodes), atol=1e-12)
    assert_allclose(integrator_table.dense('K1')[:, :, 0, 0], np.minimum.outer(nodes, nodes), atol=1e-12)
    assert_allclose(integrator_table.dense('K0')[:, :, 0, 0], np.ones((51, 51)))


def test_kernel_at_interpolates():
    assert kernel_at(integrator_table, 0.5, 1.0)[0, 0] == pytest.approx(1.5)
    assert kernel_at(integrator_table, 0.3, 0.61)[0, 0] == pytest.approx(1.3)
    assert kernel_at(integrator_table, 0.61, 0.3, which='K1')[0, 0] == pytest.approx(0.3)
    assert kernel_at(integrator_table, 0.5, 0.5, which='K0')[0, 0] == pytest.approx(1.0)


def test_table_parts():
    assert integrator_table.block(10, 20, 'K1')[0, 0] == pytest.approx(0.2)
    assert integrator_table.column(5).shape == (51, 1, 1)
    with pytest.raises(InvalidArgumentError):
        integrator_table.block(0, 0, 'K2')
    with pytest.raises(InvalidArgumentError):
        integrator_table.apply(np.ones(51), 'K2')
    with pytest.raises(ValueError):
        integrator_table.diagonal[0, 0, 0] = 1.0
    with pytest.raises(ValueError):
        integrator_table.start[0, 0, 0] = 1.0


def test_table_is_factored():
    # Only per-node factors are stored; no part is kept as a nodes x nodes array.
    for name in ('K', 'K0', 'K1'):
        assert not hasattr(random_table, name)
    size, n = len(fine_grid), random.n
    assert random_table.diagonal.shape == (size, n, n)
    assert random_table.start.shape == (size, n, n)
    assert random_table.weighted_start.shape == (size, n, n)


@pytest.mark.parametrize('which', ['K', 'K0', 'K1'])
def test_rows_columns_and_apply_agree_with_dense(which):
    dense = random_table.dense(which)
    for i in (0, 1, 57, 200):
        assert_allclose(random_table.row(i, which), dense[i], atol=1e-14)
        assert_allclose(random_table.column(i, which), dense[:, i], atol=1e-14)
        assert_allclose(random_table.block(i, 120, which), dense[i, 120], atol=1e-14)
    vectors = np.random.default_rng(3).standard_normal((len(fine_grid), random.n))
    expected = np.einsum('ijab,jb->ia', dense, vectors)
    assert_allclose(random_table.apply(vectors, which), expected, atol=1e-12)


def test_exact_and_quadrature_diagonals_agree():
    damped = scalar_lq(grid, a=1.0, m=0.0)
    P = solve_riccati(damped)
    family = propagate(closed_loop_generator(damped, P))
    exact = build_kernel_table(damped, P, family, method='exact')
    quadrature = build_kernel_table(damped, P, family, method='quadrature')
    diagonal = exact.diagonal[:, 0, 0]
    assert_allclose(diagonal, (1.0 - np.exp(-2.0 * grid.nodes)) / 2.0, atol=1e-12)
    assert_allclose(quadrature.dense('K1'), exact.dense('K1'), atol=1e-3)


def test_table_methods_are_checked():
    P = random_table.riccati
    with pytest.raises(InvalidArgumentError):
        build_kernel_table(random, P, random_table.family, method='exact')
    with pytest.raises(InvalidArgumentError):
        build_kernel_table(random, P, random_table.family, method='simpson')
    with pytest.raises(GridMismatchError):
        build_kernel_table(scalar_lq(make_uniform_grid(0.0, 1.0, 10)), P, random_table.family)


def test_initial_blocks():
    assert tanh_table.method == 'quadrature'
    assert tanh_table.block(0, 0)[0, 0] == pytest.approx(1.0 / (1.0 + np.tanh(1.0)), rel=1e-7)
    assert_allclose(random_table.block(0, 0), random_table.riccati.initial_factor, atol=1e-12)
    assert not np.any(random_table.row(0, 'K1'))
    assert not np.any(random_table.column(0, 'K1'))


def test_kernel_is_symmetric_and_positive():
    assert adjoint_asymmetry(random_table) < 1e-12
    assert adjoint_asymmetry(random_table, 'K1') < 1e-14
    assert gram_min_eigenvalue(random_table, fine_grid.nodes[::20]) > -1e-10
    # det [[1.5, 1.5], [1.5, 2]] = 0.75
    expected = (3.5 - np.sqrt(3.5 ** 2 - 3.0)) / 2.0
    assert gram_min_eigenvalue(integrator_table, [0.5, 1.0]) == pytest.approx(expected)


def test_section_controls_jump_at_the_evaluation_time():
    section = kernel_apply(integrator_table, 0.5, [2.0])
    controls = section.control.values[:, 0]
    assert_allclose(controls[:25], 2.0)
    assert controls[25] == pytest.approx(1.0)
    assert_allclose(controls[26:], 0.0)
    assert_allclose(section.trajectory.values[:, 0], 2.0 * (1.0 + np.minimum(grid.nodes, 0.5)))
    K0_section = kernel_apply(integrator_table, 0.5, [2.0], which='K0')
    assert not np.any(K0_section.control.values)


def test_control_kernel_builds_its_own_table():
    P = tanh_table.riccati
    with_table = control_kernel(tanh_problem, P, tanh_table.family, 0.4, [1.0], kt=tanh_table)
    without = control_kernel(tanh_problem, P, tanh_table.family, 0.4, [1.0])
    assert_allclose(with_table.values, without.values, atol=1e-14)
    assert_allclose(with_table.values, kernel_apply(tanh_table, 0.4, [1.0]).control.values)


def test_section_inner_products():
    sections = [kernel_apply(integrator_table, t, [1.0]) for t in (0.0, 0.5, 1.0)]
    p = integrator
    assert rkhs_inner(p, sections[0], sections[0]) == pytest.approx(1.0)
    assert rkhs_inner(p, sections[0], sections[2]) == pytest.approx(1.0)
    assert rkhs_inner(p, sections[1], sections[2]) == pytest.approx(1.5)
    assert rkhs_norm(p, sections[2]) == pytest.approx(np.sqrt(2.0))


@settings(deadline=None, max_examples=20)
@given(st.integers(min_value=0, max_value=50), st.floats(min_value=-3.0, max_value=3.0),
       st.floats(min_value=-3.0, max_value=3.0))
def test_reproducing_is_exact_for_the_integrator(index, y0, z):
    e = element_from_control(integrator, [y0], sine_control(integrator, index))
    assert check_reproducing(integrator, integrator_table, e, grid.nodes[index], [z]) < 1e-10


@pytest.mark.parametrize('t', [0.0, 0.3, 0.62, 1.0])
def test_reproducing_random_problem(t):
    e = element_from_control(random, [1.0, -0.5, 0.2], sine_control(random, 11))
    assert check_reproducing(random, random_table, e, t, [0.3, 1.0, -1.0]) < 1e-3
    zero_start = element_from_control(random, np.zeros(3), sine_control(random, 12))
    assert check_reproducing(random, random_table, zero_start, t, [1.0, 0.0, 2.0], which='K1') < 1e-3


def test_kernel_combination():
    combined = kernel_combination(integrator_table, [0.5, 1.0], [[2.0], [-1.0]])
    assert_allclose(combined.trajectory.values[:, 0],
                    2.0 * (1.0 + np.minimum(grid.nodes, 0.5)) - (1.0 + grid.nodes))
    with pytest.raises(InvalidArgumentError):
        kernel_combination(integrator_table, [0.5], [[1.0], [2.0]])


def test_canonical_control():
    y = Trajectory(grid, grid.nodes ** 2)
    u = canonical_control(integrator, y)
    assert_allclose(u.values[:, 0], 2.0 * grid.nodes, atol=1e-10)


def test_trajectories_outside_the_space():
    p = ProblemData(
        A=OperatorPath.constant(np.zeros((2, 2)), grid),
        B=OperatorPath.constant([[1.0], [0.0]], grid),
        M=OperatorPath.constant(np.eye(2), grid),
        N=OperatorPath.constant([[1.0]], grid),
        J0=np.eye(2),
        nu=1.0,
    )
    reachable = Trajectory(grid, np.column_stack([np.sin(grid.nodes), np.ones(51)]))
    assert_allclose(canonical_control(p, reachable).values[:, 0], np.cos(grid.nodes), atol=1e-3)
    unreachable = Trajectory(grid, np.column_stack([np.zeros(51), grid.nodes]))
    with pytest.raises(NotInSpaceError) as info:
        canonical_control(p, unreachable)
    assert info.value.residual == pytest.approx(1.0)


def test_element_keeps_the_minimal_norm_control():
    p = ProblemData(
        A=OperatorPath.constant([[0.0]], grid),
        B=OperatorPath.constant([[1.0, 1.0]], grid),
        M=OperatorPath.constant([[1.0]], grid),
        N=OperatorPath.constant(np.eye(2), grid),
        J0=[[1.0]],
        nu=1.0,
    )
    e = element_from_control(p, [0.0], ControlPath(grid, np.column_stack([np.ones(51), np.zeros(51)])))
    assert_allclose(e.control.values, 0.5)
    assert_allclose(e.trajectory.values[:, 0], grid.nodes, atol=1e-12)


def test_projection_onto_uncontrolled_trajectories():
    pi = solve_lyapunov_pi(tanh_problem)
    projected = project_onto_HK0(tanh_problem, pi, open_loop_family(tanh_problem), 1.0, [1.0])
    assert_allclose(projected.trajectory.values, 0.5, atol=1e-9)
    assert not np.any(projected.control.values)


def test_K0_sections_are_not_the_uncontrolled_space():
    y = free_element(tanh_problem, open_loop_family(tanh_problem), [1.0])
    section = project_onto_K0_section(tanh_table, 1.0, [1.0])
    assert rkhs_inner(tanh_problem, section, y) == pytest.approx(1.0 / np.cosh(1.0), abs=1e-3)


def test_K0_sections_are_orthogonal_to_zero_initial_elements():
    w = element_from_control(random, np.zeros(3), sine_control(random, 4))
    for t in (0.0, 0.5, 1.0):
        section = project_onto_K0_section(random_table, t, [1.0, 2.0, -1.0])
        scale = rkhs_norm(random, section) * rkhs_norm(random, w)
        assert abs(rkhs_inner(random, section, w)) < 1e-4 * scale


def test_HK1_projection_starts_at_zero():
    section = project_onto_HK1(random_table, 0.5, [1.0, 0.0, 0.0])
    assert_allclose(section.initial, 0.0)
    full = kernel_apply(random_table, 0.5, [1.0, 0.0, 0.0])
    K0_part = project_onto_K0_section(random_table, 0.5, [1.0, 0.0, 0.0])
    assert_allclose((section + K0_part - full).trajectory.values, 0.0, atol=1e-14)


def test_split_element():
    e = element_from_control(random, [1.0, 2.0, 3.0], sine_control(random, 5))
    free, rest = split_element(random, random_family, e)
    assert_allclose(rest.initial, 0.0)
    assert_allclose((free + rest).trajectory.values, e.trajectory.values, atol=1e-12)
    assert not np.any(free.control.values)
    assert_allclose(rest.control.values, e.control.values)


def test_element_arithmetic():
    e = kernel_apply(integrator_table, 0.5, [1.0])
    assert_allclose((3 * e - e + -e).trajectory.values, e.trajectory.values)
    zero = RkhsElement.zeros(grid, 1, 1)
    assert rkhs_norm(integrator, zero) == 0.0
    with pytest.raises(GridMismatchError):
        RkhsElement(Trajectory.zeros(grid, 1), ControlPath.zeros(make_uniform_grid(0.0, 1.0, 5), 1))


def test_kernel_summary():
    summary = kernel_summary(integrator_table)
    assert summary['nodes'] == 51
    assert summary['method'] == 'exact'
    assert summary['K_t0_t0'] == [[1.0]]
    assert summary['adjoint_asymmetry'] == 0.0
