# -*- coding: utf-8 -*-
"""
The invariant suite behind ``lqrk verify``: closed forms, oracles and
structural properties of every layer, grouped in named blocks of Checks.
"""
import logging
from collections import OrderedDict
from typing import Any  # noqa
from typing import Callable  # noqa
from typing import Dict  # noqa
from typing import List  # noqa
from typing import Optional  # noqa
from typing import Tuple  # noqa

import numpy as np
import scipy.linalg

from lqrk.core import (
    Check,
    ControlPath,
    OperatorPath,
    ProblemData,
    TimeGrid,  # noqa
    VerificationError,
    make_uniform_grid,
)
from lqrk.evolution import closed_loop_generator, open_loop_family, propagate
from lqrk.heat import (
    SpectralHeatModel,
    check_heat_semigroup,
    check_K1_identity,
    discretize_heat,
    mode_kernel_analytic,
)
from lqrk.kernel import (
    KernelTable,  # noqa
    RkhsElement,
    adjoint_asymmetry,
    build_kernel_table,
    check_reproducing,
    element_from_control,
    free_element,
    gram_min_eigenvalue,
    kernel_apply,
    kernel_combination,
    project_onto_HK0,
    project_onto_K0_section,
    rkhs_inner,
    rkhs_norm,
    split_element,
)
from lqrk.problems import random_problem, scalar_lq
from lqrk.riccati import (
    decoupling_residual,
    lqr_cost,
    optimal_lqr_classical,
    riccati_residual,
    simulate,
    solve_lyapunov_pi,
    solve_optimality_system,
    solve_riccati,
)
from lqrk.solvers import (
    MayerProblem,
    assemble_gram,
    eval_objective,
    quadratic_terminal_cost,
    solve_interpolation,
    solve_lqr_via_kernel,
    solve_mayer,
    solve_mayer_direct,
)


logger = logging.getLogger(__name__)

REPRODUCING_TOLERANCE = 1e-3
ORDER_STEPS = (50, 100, 200, 400)
RK4_STEPS = (25, 50, 100, 200, 400)
RK4_GENERATOR = np.array([[-2.0, 3.0], [-3.0, -1.0]])


def at_most(name, value, bound, node=None):  # type: (str, float, float, Optional[int]) -> Check
    value = float(value)
    return Check(name, node, value, bound, bool(value <= bound))


def at_least(name, value, bound, node=None):  # type: (str, float, float, Optional[int]) -> Check
    value = float(value)
    return Check(name, node, value, bound, bool(value >= bound))


class VerificationReport(object):
    def __init__(self, blocks):  # type: (OrderedDict[str, List[Check]]) -> None
        self.blocks = blocks

    @property
    def failures(self):  # type: () -> List[Check]
        return [c for checks in self.blocks.values() for c in checks
                if c.severity == 'error' and not c.passed]

    @property
    def passed(self):  # type: () -> bool
        return not self.failures

    def block_passed(self, name):  # type: (str) -> bool
        return all(c.passed or c.severity != 'error' for c in self.blocks[name])

    def raise_for_failures(self):  # type: () -> None
        if not self.passed:
            raise VerificationError('Invariants failed: %s' % ', '.join(
                c.name for c in self.failures), report=self)

    def as_dict(self):  # type: () -> Dict[str, Any]
        return OrderedDict(
            (name, OrderedDict([
                ('status', 'pass' if self.block_passed(name) else 'fail'),
                ('checks', [c.as_dict() for c in checks]),
            ]))
            for name, checks in self.blocks.items())


class _Setup(object):
    """
    A problem with its Riccati solution, families and kernel table.
    """

    def __init__(self, p, check_invertibility=True):
        # type: (ProblemData, bool) -> None
        self.p = p
        self.P = solve_riccati(p, check_invertibility=check_invertibility)
        self.famA = open_loop_family(p)
        self.famAP = propagate(closed_loop_generator(p, self.P))
        self.kt = build_kernel_table(p, self.P, self.famAP)


def smooth_control(rng, grid, m, harmonics=3):
    # type: (np.random.Generator, TimeGrid, int, int) -> Callable[[TimeGrid], ControlPath]
    """
    A random control Σₖ cₖ sin(kπ(t - t0)/T + φₖ) drawn once and sampled on
    any grid over the same interval.
    """
    amplitudes = rng.standard_normal((harmonics, m))
    phases = rng.uniform(0, 2 * np.pi, (harmonics, m))
    k = np.arange(1, harmonics + 1)[:, None]

    def sample(target):  # type: (TimeGrid) -> ControlPath
        elapsed = (target.nodes - grid.t0) / grid.length
        values = [np.sum(amplitudes * np.sin(k * np.pi * s + phases), axis=0) for s in elapsed]
        return ControlPath(target, values)
    return sample


def rk4_order(generator, counts):  # type: (Any, Tuple[int, ...]) -> float
    """
    Slope of log error against log step size for the RK4 family of a
    constant generator, measured at T = 1 against expm(-generator). Four
    means the error drops 16-fold per halving.
    """
    generator = np.asarray(generator, dtype=float)
    exact = scipy.linalg.expm(-generator)
    errors = []
    for count in counts:
        grid = make_uniform_grid(0.0, 1.0, count)
        family = propagate(OperatorPath.constant(generator, grid), method='rk4')
        errors.append(float(np.max(np.abs(family.block(count, 0) - exact))))
    return float(np.polyfit(np.log(1.0 / np.array(counts)), np.log(np.array(errors) + 1e-300), 1)[0])


def check_evolution(seed, steps, size):  # type: (int, int, int) -> List[Check]
    checks = []
    p = random_problem(seed, size, max(1, size // 2), make_uniform_grid(0.0, 1.0, steps))
    fam = open_loop_family(p)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        j, k, i = sorted(rng.integers(0, steps + 1, 3))
        worst = max(worst, float(np.max(np.abs(fam.block(i, k).dot(fam.block(k, j)) - fam.block(i, j)))))
    checks.append(at_most('composition', worst, 1e-10))

    slope = rk4_order(RK4_GENERATOR, RK4_STEPS)
    checks.append(at_least('rk4_order', slope, 3.5))
    checks.append(at_most('rk4_order_upper', slope, 4.5))
    return checks


def check_riccati(seed, steps, size):  # type: (int, int, int) -> List[Check]
    checks = []
    p = scalar_lq(make_uniform_grid(0.0, 1.0, steps))
    P = solve_riccati(p)
    checks.append(at_most('P_t0_vs_tanh', abs(P[0][0, 0] - np.tanh(1.0)), 1e-5))
    checks.append(at_most('riccati_residual', riccati_residual(p, P), 1e-3))

    errors = []
    for count in ORDER_STEPS:
        coarse = solve_riccati(scalar_lq(make_uniform_grid(0.0, 1.0, count)))
        errors.append(abs(coarse[0][0, 0] - np.tanh(1.0)))
    slope = np.polyfit(np.log(1.0 / np.array(ORDER_STEPS)), np.log(np.array(errors) + 1e-300), 1)[0]
    checks.append(at_least('convergence_order', slope, 3.5))

    random = random_problem(seed, size, max(1, size // 2), make_uniform_grid(0.0, 1.0, steps),
                            time_varying=True)
    P = solve_riccati(random)
    floor = min(float(scipy.linalg.eigvalsh(block)[0]) for block in P.P)
    checks.append(at_least('P_psd', floor, -random.tolerances.riccati_psd))
    checks.append(at_most('P_symmetric', P.max_asymmetry, 1e-12))
    return checks


def with_state_weight(p, M):  # type: (ProblemData, Any) -> ProblemData
    """
    The same problem with the constant state weight M.
    """
    return ProblemData(p.A, p.B, OperatorPath.constant(M, p.grid), p.N, p.J0, p.nu, p.tolerances)


def check_monotonicity(seed, steps, samples=10):  # type: (int, int, int) -> List[Check]
    """
    Raising M by a PSD increment raises P(t0) in PSD order, both for the
    Riccati solution and for the boundary value oracle y0ᵀη(t0).
    """
    grid = make_uniform_grid(0.0, 1.0, steps)
    floor, oracle_floor, agreement = np.inf, np.inf, 0.0
    for offset in range(samples):
        rng = np.random.default_rng(seed + offset)
        low = random_problem(seed + offset, 2, 1, grid)
        root = rng.standard_normal((2, 2))
        high = with_state_weight(low, low.M[0] + root.dot(root.T) + 0.5 * np.eye(2))
        P_low, P_high = solve_riccati(low)[0], solve_riccati(high)[0]
        floor = min(floor, float(scipy.linalg.eigvalsh(P_high - P_low)[0]))

        y0 = rng.standard_normal(2)
        scale = float(y0.dot(y0))
        q_low = float(y0.dot(solve_optimality_system(low, y0).eta[0]))
        q_high = float(y0.dot(solve_optimality_system(high, y0).eta[0]))
        oracle_floor = min(oracle_floor, (q_high - q_low) / scale)
        agreement = max(agreement, abs(q_low - y0.dot(P_low).dot(y0)) / scale,
                        abs(q_high - y0.dot(P_high).dot(y0)) / scale)
    return [
        at_least('P_t0_increases', floor, -1e-10),
        at_least('oracle_increases', oracle_floor, -1e-10),
        at_most('oracle_agreement', agreement, 1e-3),
    ]


def check_decoupling(seed, steps, size, problems=10):  # type: (int, int, int, int) -> List[Check]
    checks = []
    grid = make_uniform_grid(0.0, 1.0, steps)
    scalar = scalar_lq(grid)
    P = solve_riccati(scalar)
    for t in (0.0, grid.nodes[steps // 2]):
        checks.append(at_most('scalar', decoupling_residual(scalar, P, t, [1.0]), 1e-4,
                              grid.index_of(t)))
    for offset in range(problems):
        rng = np.random.default_rng(seed + offset)
        p = random_problem(seed + offset, size, max(1, size // 2), grid)
        P = solve_riccati(p)
        t = grid.nodes[int(rng.integers(0, steps))]
        residual = decoupling_residual(p, P, t, rng.standard_normal(size))
        checks.append(at_most('random[seed=%d]' % (seed + offset), residual, 1e-4, grid.index_of(t)))
    return checks


def _reproducing_residuals(setup, seed, samples, coarse, zero_initial=False):
    # type: (_Setup, int, int, TimeGrid, bool) -> List[float]
    p, kt = setup.p, setup.kt
    rng = np.random.default_rng(seed)
    residuals = []
    for _ in range(samples):
        control = smooth_control(rng, coarse, p.m)(p.grid)
        y0 = np.zeros(p.n) if zero_initial else rng.standard_normal(p.n)
        e = element_from_control(p, y0, control)
        t = coarse.nodes[int(rng.integers(0, len(coarse)))]
        z = rng.standard_normal(p.n)
        residuals.append(check_reproducing(p, kt, e, t, z, which='K1' if zero_initial else 'K'))
    return residuals


def check_reproducing_property(seed, steps, size, samples=20):
    # type: (int, int, int, int) -> List[Check]
    checks = []
    grid = make_uniform_grid(0.0, 1.0, steps)
    setups = [('scalar', _Setup(scalar_lq(grid))),
              ('random', _Setup(random_problem(seed, size, max(1, size // 2), grid)))]
    for name, setup in setups:
        residuals = _reproducing_residuals(setup, seed, samples, grid)
        checks.append(at_most('%s.K' % name, max(residuals), REPRODUCING_TOLERANCE))
        residuals = _reproducing_residuals(setup, seed, samples, grid, zero_initial=True)
        checks.append(at_most('%s.K1_zero_initial' % name, max(residuals), REPRODUCING_TOLERANCE))

    half = max(1, steps // 2)
    coarse_grid = make_uniform_grid(0.0, 1.0, half)
    coarse = _Setup(random_problem(seed, size, max(1, size // 2), coarse_grid))
    before = np.mean(_reproducing_residuals(coarse, seed, samples, coarse_grid))
    del coarse
    fine = setups[1][1] if steps == 2 * half else _Setup(
        random_problem(seed, size, max(1, size // 2), make_uniform_grid(0.0, 1.0, 2 * half)))
    after = np.mean(_reproducing_residuals(fine, seed, samples, coarse_grid))
    checks.append(at_most('refinement', after, before))
    return checks


def check_kernel_closed_form(seed, steps, size):  # type: (int, int, int) -> List[Check]
    grid = make_uniform_grid(0.0, 1.0, steps)
    setup = _Setup(scalar_lq(grid, m=0.0), check_invertibility=True)
    expected = 1.0 + np.minimum.outer(grid.nodes, grid.nodes)
    checks = [at_most('one_plus_min', np.max(np.abs(setup.kt.dense('K')[:, :, 0, 0] - expected)), 1e-8)]
    random = _Setup(random_problem(seed, size, max(1, size // 2), grid))
    checks.append(at_most('K_t0_t0', np.max(np.abs(random.kt.block(0, 0) - random.P.initial_factor)), 1e-12))
    checks.append(at_most('K1_t0_row', np.max(np.abs(random.kt.row(0, 'K1'))), 1e-14))
    return checks


def check_gram(name, kt, rng):  # type: (str, KernelTable, np.random.Generator) -> List[Check]
    checks = [at_most('%s.adjoint_asymmetry' % name, adjoint_asymmetry(kt), 1e-8)]
    for _ in range(3):
        count = int(rng.integers(1, 11))
        points = kt.grid.nodes[rng.choice(len(kt.grid), count, replace=False)]
        checks.append(at_least('%s.gram_min_eig' % name, gram_min_eigenvalue(kt, points), -1e-8))
    return checks


def check_lqr(seed, steps, size):  # type: (int, int, int) -> Tuple[List[Check], List[Check]]
    """
    LQR through the kernel against the classical solution. Returns the LQR
    checks and the Gram checks of every table built on the way; each table
    is dropped once its Gram checks are done.
    """
    checks = []
    rng = np.random.default_rng(seed)
    grid = make_uniform_grid(0.0, 1.0, steps)
    scalar = _Setup(scalar_lq(grid))
    solution = solve_lqr_via_kernel(scalar.p, scalar.kt, scalar.famA, [1.0])
    checks.append(at_most('scalar.gap', solution.residual, 1e-3))
    closed_form = np.cosh(1.0 - grid.nodes) / np.cosh(1.0)
    checks.append(at_most('scalar.closed_form', np.max(np.abs(solution.trajectory.values[:, 0] - closed_form)), 1e-4))

    y, u, cost = optimal_lqr_classical(scalar.p, [1.0], scalar.P)
    checks.append(at_most('cost_consistency', abs(cost - eval_objective(scalar.p, RkhsElement(y, u))), 1e-10))
    checks.append(at_most('kernel_cost', abs(solution.objective - cost), 1e-3))

    gram = check_gram('scalar_lqr', scalar.kt, rng)
    del scalar
    n = min(16, 2 * size)
    for offset in range(3):
        setup = _Setup(random_problem(seed + offset, n, max(1, n // 2), grid))
        y0 = np.random.default_rng(seed + offset).standard_normal(n)
        solution = solve_lqr_via_kernel(setup.p, setup.kt, setup.famA, y0)
        checks.append(at_most('random[seed=%d].gap' % (seed + offset), solution.residual,
                              1e-3 * float(np.linalg.norm(y0))))
        gram.extend(check_gram('random_n%d[seed=%d]' % (n, seed + offset), setup.kt, rng))
        del setup, solution
    return checks, gram


def check_mayer(seed, steps, size):  # type: (int, int, int) -> List[Check]
    checks = []
    grid = make_uniform_grid(0.0, 1.0, steps)
    scalar = _Setup(scalar_lq(grid, m=0.0))
    g = quadratic_terminal_cost([[1.0]], [3.0])
    g.hessian = None
    solution = solve_mayer(MayerProblem(scalar.p, g), scalar.kt)
    checks.append(at_most('scalar.terminal', abs(solution.trajectory[-1][0] - 2.0), 1e-8))
    checks.append(at_most('scalar.coefficient', abs(solution.coeffs[0][0] - 1.0), 1e-8))

    rng = np.random.default_rng(seed)
    setup = _Setup(random_problem(seed, size, max(1, size // 2), grid))
    root = rng.standard_normal((size, size))
    mp = MayerProblem(setup.p, quadratic_terminal_cost(root.T.dot(root) + np.eye(size),
                                                      rng.standard_normal(size)))
    checks.append(at_most('gradient_check', mp.check_gradient(seed), 1e-5))
    iterative = solve_mayer(mp, setup.kt)
    direct = solve_mayer_direct(mp, setup.kt)
    checks.append(at_most('stationarity', iterative.residual, 1e-8))
    checks.append(at_most('direct_oracle', np.max(np.abs(
        iterative.trajectory[-1] - direct.trajectory[-1])), 1e-8))
    return checks


def check_interpolation(seed, steps, size, perturbations=50):
    # type: (int, int, int, int) -> List[Check]
    checks = []
    grid = make_uniform_grid(0.0, 1.0, steps)
    setup = _Setup(scalar_lq(grid, m=0.0))
    p, kt = setup.p, setup.kt
    points = [0.5, 1.0]
    solution = solve_interpolation(p, kt, setup.famA, [0.0], points, [[0.5], [0.0]])
    coeffs = np.concatenate(solution.coeffs)
    checks.append(at_most('two_point.coefficients', np.max(np.abs(coeffs - [2.0, -1.0])), 1e-8))
    checks.append(at_most('two_point.feasibility', solution.residual, 1e-8))

    best = rkhs_inner(p, solution.element, solution.element)
    gram = assemble_gram(kt, points, which='K1')
    rng = np.random.default_rng(seed)
    margin = np.inf
    for _ in range(perturbations):
        e = element_from_control(p, [0.0], smooth_control(rng, grid, p.m)(grid))
        values = np.concatenate([e.trajectory[grid.index_of(t)] for t in points])
        c = scipy.linalg.solve(gram, values)
        w = e - kernel_combination(kt, points, list(c.reshape(len(points), p.n)), which='K1')
        candidate = solution.element + w
        margin = min(margin, rkhs_inner(p, candidate, candidate) - best)
    checks.append(at_least('minimal_norm_margin', margin, -1e-8))

    random = _Setup(random_problem(seed, size, max(1, size // 2), grid))
    targets = rng.standard_normal((3, size))
    nodes = [grid.nodes[steps // 4], grid.nodes[steps // 2], grid.T]
    solution = solve_interpolation(random.p, random.kt, random.famA, rng.standard_normal(size),
                                   nodes, list(targets))
    reached = np.array([solution.trajectory[grid.index_of(t)] for t in nodes])
    checks.append(at_most('random.feasibility', np.max(np.abs(reached - targets)), 1e-8))
    return checks


def check_projections(seed, steps, size, samples=5):  # type: (int, int, int, int) -> List[Check]
    checks = []
    grid = make_uniform_grid(0.0, 1.0, steps)
    setup = _Setup(random_problem(seed, size, max(1, size // 2), grid))
    p, kt = setup.p, setup.kt
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        t = grid.nodes[int(rng.integers(0, steps + 1))]
        section = project_onto_K0_section(kt, t, rng.standard_normal(size))
        w = element_from_control(p, np.zeros(size), smooth_control(rng, grid, p.m)(grid))
        scale = max(1.0, rkhs_norm(p, section) * rkhs_norm(p, w))
        worst = max(worst, abs(rkhs_inner(p, section, w)) / scale)
    checks.append(at_most('K1_orthogonality', worst, 1e-4))

    e = element_from_control(p, rng.standard_normal(size), smooth_control(rng, grid, p.m)(grid))
    free, rest = split_element(p, setup.famA, e)
    checks.append(at_most('direct_sum.reconstruction', (free + rest - e).trajectory.sup_norm(), 1e-8))
    checks.append(at_most('direct_sum.zero_initial', float(np.max(np.abs(rest.initial))), 1e-12))

    e2 = element_from_control(p, rng.standard_normal(size), smooth_control(rng, grid, p.m)(grid))
    scale = max(1.0, rkhs_norm(p, e) * rkhs_norm(p, e2))
    checks.append(at_most('inner.symmetry', abs(rkhs_inner(p, e, e2) - rkhs_inner(p, e2, e)) / scale, 1e-12))
    linear = rkhs_inner(p, 2.5 * e + free, e2) - 2.5 * rkhs_inner(p, e, e2) - rkhs_inner(p, free, e2)
    checks.append(at_most('inner.linearity', abs(linear) / scale, 1e-12))

    scalar = scalar_lq(grid)
    pi = solve_lyapunov_pi(scalar)
    projected = project_onto_HK0(scalar, pi, open_loop_family(scalar), 1.0, [1.0])
    checks.append(at_most('HK0.scalar', np.max(np.abs(projected.trajectory.values - 0.5)), 1e-6))

    # Free trajectories pair with K⁰ sections differently from point evaluation.
    witness = _Setup(scalar)
    y = free_element(scalar, witness.famA, [1.0])
    gap = abs(rkhs_inner(scalar, kernel_apply(witness.kt, 1.0, [1.0], which='K0'), y) - y.trajectory[-1][0])
    checks.append(at_least('HK0_differs_from_K0_space', gap, 10 * REPRODUCING_TOLERANCE))
    return checks


def check_heat(steps, modes=5):  # type: (int, int) -> List[Check]
    checks = []
    grid = make_uniform_grid(0.0, 1.0, steps)
    model = SpectralHeatModel(modes, 2 * np.pi, 1.0, grid)
    setup = _Setup(discretize_heat(model))
    kt = setup.kt
    sample = np.arange(0, len(grid), max(1, steps // 20))
    worst0, worst1 = 0.0, 0.0
    for i in sample:
        for j in sample:
            table0, table1 = kt.block(i, j, 'K0'), kt.block(i, j, 'K1')
            for index, k in enumerate(model.frequencies):
                K0, K1 = mode_kernel_analytic(model, k, grid.nodes[i], grid.nodes[j])
                worst0 = max(worst0, abs(table0[index, index] - K0))
                worst1 = max(worst1, abs(table1[index, index] - K1))
    off_diagonal = kt.dense('K') * (1.0 - np.eye(modes))
    checks.append(at_most('K0_per_mode', worst0, 1e-8))
    checks.append(at_most('K1_per_mode', worst1, 1e-6))
    checks.append(at_most('modes_decouple', float(np.max(np.abs(off_diagonal))), 1e-12))

    report = check_K1_identity(model, 0.3 * grid.T, grid.T)
    checks.extend(report.change_of_variables)
    checks.append(Check('printed_identity_fails_for_k0', 0, report.printed[0].value,
                        report.printed[0].bound, not report.printed[0].passed))
    checks.append(at_most('semigroup', check_heat_semigroup(0.3, 0.5), 1e-4))
    return checks


def cost_gap(p, y0, controls, optimal):  # type: (ProblemData, Any, ControlPath, float) -> float
    """
    Cost of an arbitrary admissible control minus the optimal cost.
    """
    return lqr_cost(p, simulate(p, y0, controls), controls) - optimal


def random_control(rng, grid, m):  # type: (np.random.Generator, TimeGrid, int) -> ControlPath
    """
    An admissible control drawn independently of any solution: a smooth
    part of random amplitude plus piecewise-linear noise.
    """
    scale = 10.0 ** rng.uniform(-2.0, 0.5)
    noise = 0.1 * rng.standard_normal((len(grid), m))
    return smooth_control(rng, grid, m)(grid) * scale + ControlPath(grid, noise)


def check_optimality(seed, steps, size, samples=50):  # type: (int, int, int, int) -> List[Check]
    grid = make_uniform_grid(0.0, 1.0, steps)
    p = random_problem(seed, size, max(1, size // 2), grid)
    P = solve_riccati(p)
    rng = np.random.default_rng(seed)
    y0 = rng.standard_normal(size)
    _, _, optimal = optimal_lqr_classical(p, y0, P)
    worst = min(cost_gap(p, y0, random_control(rng, grid, p.m), optimal) for _ in range(samples))
    return [at_least('classical_optimality', worst, -1e-10)]


def run_suite(seed=0, steps=200, size=4):  # type: (int, int, int) -> VerificationReport
    """
    Runs every block; ``size`` is the state dimension of the random problems
    (the LQR block uses twice that, capped at 16).
    """
    blocks = OrderedDict()  # type: OrderedDict[str, List[Check]]

    def run(name, func, *args):
        logger.info('verify: %s', name)
        blocks[name] = func(*args)
        logger.debug('verify: %s %s', name, 'ok' if all(
            c.passed or c.severity != 'error' for c in blocks[name]) else 'FAILED')

    run('evolution', check_evolution, seed, steps, size)
    run('riccati', check_riccati, seed, steps, size)
    run('riccati_monotonicity', check_monotonicity, seed, steps)
    run('decoupling', check_decoupling, seed, steps, size)
    run('reproducing', check_reproducing_property, seed, steps, size)
    run('kernel_closed_form', check_kernel_closed_form, seed, steps, size)
    logger.info('verify: lqr_equivalence, gram')
    blocks['lqr_equivalence'], blocks['gram'] = check_lqr(seed, steps, size)
    run('classical_optimality', check_optimality, seed, steps, size)
    run('mayer', check_mayer, seed, steps, size)
    run('interpolation', check_interpolation, seed, steps, size)
    run('projections', check_projections, seed, steps, size)
    run('heat', check_heat, steps)
    return VerificationReport(blocks)
