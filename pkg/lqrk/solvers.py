# -*- coding: utf-8 -*-
"""
Optimal control through kernel algebra. Every solver here reduces its
problem to finitely many coefficients zₙ in an expansion

    ŷ(s) = offset(s) + Σₙ K(s, tₙ) zₙ

and returns it as a RepresenterSolution.

* ``solve_mayer``: minimize ½‖y‖² + g(y(T)) over the whole space (free
  initial state), so ŷ = K(·, T) z with z = -Dg(ŷ(T)).
* ``solve_lqr_via_kernel``: the LQ problem with fixed y(t0), recovered as
  the free trajectory plus a K¹ correction.
* ``solve_interpolation``: fixed y(t0) plus hard (ridge = 0) or soft
  constraints on the state at finitely many nodes.

For ``solve_interpolation`` and ``solve_mayer`` the objective must be
strictly increasing in the norm term for the expansion to be optimal; with
caller-supplied terminal costs this is the caller's responsibility.
"""
import logging
from typing import Any  # noqa
from typing import Callable  # noqa
from typing import List  # noqa
from typing import Optional  # noqa
from typing import Sequence  # noqa

import numpy as np
import scipy.linalg

from lqrk.core import (
    ControlPath,
    InvalidArgumentError,
    IterationError,
    ProblemData,  # noqa
    RankDeficiencyError,
    SingularSystemError,
    Trajectory,
    check_same_grid,
    trapezoid,
)
from lqrk.evolution import EvolutionFamily  # noqa
from lqrk.kernel import (
    KernelTable,  # noqa
    RkhsElement,
    free_element,
    kernel_apply,
    kernel_combination,
)
from lqrk.riccati import optimal_lqr_classical


logger = logging.getLogger(__name__)

# Dense Gram systems above this many unknowns are refused.
MAX_GRAM_SIZE = 512


class TerminalCost(object):
    """
    A terminal functional g on n-vectors with its gradient and, optionally,
    its Hessian (which switches ``solve_mayer`` to Newton's method).
    """

    def __init__(self, value, gradient, hessian=None):
        # type: (Callable[[np.ndarray], float], Callable[[np.ndarray], np.ndarray], Optional[Callable[[np.ndarray], np.ndarray]]) -> None
        self.value = value
        self.gradient = gradient
        self.hessian = hessian
        # Set for quadratic costs, which admit a direct solve.
        self.weight = None  # type: Optional[np.ndarray]
        self.center = None  # type: Optional[np.ndarray]

    def __call__(self, h):  # type: (Any) -> float
        return float(self.value(np.asarray(h, dtype=float)))


def quadratic_terminal_cost(Q, c):  # type: (Any, Any) -> TerminalCost
    """
    g(h) = ½ <h - c, Q (h - c)>.
    """
    Q = np.atleast_2d(np.array(Q, dtype=float))
    c = np.atleast_1d(np.array(c, dtype=float))
    Q = (Q + Q.T) / 2.0
    cost = TerminalCost(
        value=lambda h: 0.5 * float((h - c).dot(Q).dot(h - c)),
        gradient=lambda h: Q.dot(h - c),
        hessian=lambda h: Q,
    )
    cost.weight, cost.center = Q, c
    return cost


class MayerProblem(object):
    def __init__(self, p, g):  # type: (ProblemData, TerminalCost) -> None
        self.p = p
        self.g = g

    def check_gradient(self, seed=0, samples=5, step=1e-6):
        # type: (int, int, float) -> float
        """
        Largest relative gap between central finite differences of g along
        random directions and the supplied gradient.
        """
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            h = rng.standard_normal(self.p.n)
            direction = rng.standard_normal(self.p.n)
            direction /= np.linalg.norm(direction)
            numeric = (self.g(h + step * direction) - self.g(h - step * direction)) / (2 * step)
            analytic = float(np.asarray(self.g.gradient(h)).dot(direction))
            worst = max(worst, abs(numeric - analytic) / max(1.0, abs(analytic)))
        return worst


class RepresenterSolution(object):
    """
    Coefficients zₙ at ``points``, the reconstructed element, its objective
    value and a residual whose meaning depends on the solver (stationarity,
    constraint violation or distance to the classical LQR trajectory).
    ``convention`` names what the objective measures: 'lqr' (the LQ cost),
    'mayer' (terminal cost plus half the squared norm) or 'interpolation'
    (‖ζ‖² plus the ridge penalty).
    """

    def __init__(self, points, coeffs, element, objective, residual,
                 which='K', offset=None, convention='lqr', iterations=0):
        # type: (Sequence[float], Sequence[np.ndarray], RkhsElement, float, float, str, Optional[RkhsElement], str, int) -> None
        self.points = list(points)
        self.coeffs = [np.asarray(z, dtype=float) for z in coeffs]
        self.element = element
        self.objective = objective
        self.residual = residual
        self.which = which
        self.offset = offset
        self.convention = convention
        self.iterations = iterations

    @property
    def trajectory(self):  # type: () -> Trajectory
        return self.element.trajectory

    @property
    def control(self):  # type: () -> ControlPath
        return self.element.control

    def __repr__(self):
        return 'RepresenterSolution(points=%d, objective=%.6g, residual=%.3g)' % (
            len(self.points), self.objective, self.residual)


def eval_objective(p, e, g=None):
    # type: (ProblemData, RkhsElement, Optional[TerminalCost]) -> float
    """
    Without ``g``: ∫ <M y, y> + <N u, u> dt (the LQ cost, no initial term).
    With ``g``: g(y(T)) + ½ <y(t0), J0 y(t0)> + ½ ∫ <M y, y> + <N u, u> dt.
    """
    check_same_grid(p.grid, e.grid)
    y, u = e.trajectory.values, e.control.values
    running = float(trapezoid(p.grid, np.einsum('ki,kij,kj->k', y, p.M.values, y) +
                              np.einsum('ki,kij,kj->k', u, p.N.values, u)))
    if g is None:
        return running
    return g(y[-1]) + 0.5 * float(y[0].dot(p.J0).dot(y[0])) + 0.5 * running


def assemble_gram(kt, points, which='K'):
    # type: (KernelTable, Sequence[float], str) -> np.ndarray
    indices = [kt.grid.index_of(t) for t in points]
    if len(set(indices)) != len(indices):
        raise InvalidArgumentError('Gram points must be distinct nodes.')
    gram = np.block([[kt.block(a, b, which) for b in indices] for a in indices])
    return (gram + gram.T) / 2.0


def _terminal_block(kt):  # type: (KernelTable) -> np.ndarray
    last = len(kt.grid) - 1
    block = kt.block(last, last)
    return (block + block.T) / 2.0


def _solve_mayer_fixed_point(g, K_TT, tol):
    """
    Solves z = -Dg(K_TT z). Returns (z, iterations).
    """
    n = K_TT.shape[0]
    z = np.zeros(n)
    damping = tol.mayer_damping
    for iteration in range(1, int(tol.mayer_max_iter) + 1):
        terminal = K_TT.dot(z)
        if g.hessian is not None:
            jacobian = np.eye(n) + np.asarray(g.hessian(terminal)).dot(K_TT)
            try:
                step = -np.linalg.solve(jacobian, z + g.gradient(terminal))
            except np.linalg.LinAlgError:
                raise SingularSystemError('Newton system for the terminal equation is singular.')
            update = z + step
        else:
            update = (1.0 - damping) * z - damping * np.asarray(g.gradient(terminal))
        change = float(np.linalg.norm(update - z))
        z = update
        if change <= tol.mayer:
            return z, iteration
    residual = float(np.linalg.norm(z + g.gradient(K_TT.dot(z))))
    raise IterationError('Terminal equation did not converge after %d iterations (residual %.3g)'
                         % (iteration, residual), residual=residual, iterations=iteration)


def solve_mayer(mp, kt):  # type: (MayerProblem, KernelTable) -> RepresenterSolution
    """
    Minimizes ½‖y‖² + g(y(T)). The minimizer is K(·, T) z where z solves
    z = -Dg(K(T, T) z); Newton's method is used when g has a Hessian,
    damped fixed-point iteration otherwise.
    """
    p, g = mp.p, mp.g
    check_same_grid(p.grid, kt.grid)
    z, iterations = _solve_mayer_fixed_point(g, _terminal_block(kt), p.tolerances)
    element = kernel_apply(kt, p.grid.T, z)
    residual = float(np.linalg.norm(z + g.gradient(element.trajectory[-1])))
    logger.debug('Mayer problem solved in %d iterations, residual %.3g', iterations, residual)
    return RepresenterSolution([p.grid.T], [z], element, eval_objective(p, element, g), residual,
                               convention='mayer', iterations=iterations)


def solve_mayer_direct(mp, kt):  # type: (MayerProblem, KernelTable) -> RepresenterSolution
    """
    Closed form for g(h) = ½ <h - c, Q (h - c)> built by
    ``quadratic_terminal_cost``: (I + K(T, T) Q) ŷ(T) = K(T, T) Q c.
    """
    p, g = mp.p, mp.g
    Q, c = g.weight, g.center
    if Q is None or c is None:
        raise InvalidArgumentError('The direct solve needs a quadratic terminal cost.')
    check_same_grid(p.grid, kt.grid)
    K_TT = _terminal_block(kt)
    try:
        terminal = scipy.linalg.solve(np.eye(p.n) + K_TT.dot(Q), K_TT.dot(Q).dot(c))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError('Terminal system is singular: %s' % exc)
    z = -Q.dot(terminal - c)
    element = kernel_apply(kt, p.grid.T, z)
    residual = float(np.linalg.norm(z + g.gradient(element.trajectory[-1])))
    return RepresenterSolution([p.grid.T], [z], element, eval_objective(p, element, g), residual,
                               convention='mayer')


def solve_lqr_via_kernel(p, kt, famA, y0):
    # type: (ProblemData, KernelTable, EvolutionFamily, Any) -> RepresenterSolution
    """
    The LQ optimum from y(t0) = y0 as y₀ + ζ̂, where y₀ is the free
    trajectory and ζ̂(s) = -∫ K¹(s, t) M(t) y₀(t) dt. The residual is the
    sup-norm distance to the classical closed-loop trajectory.
    """
    check_same_grid(p.grid, kt.grid, famA.grid)
    free = free_element(p, famA, y0)
    forcing = np.einsum('kab,kb->ka', p.M.values, free.trajectory.values)
    weighted = forcing * p.grid.weights[:, None]
    correction = -kt.apply(weighted, which='K1')

    # The control of ζ̂ is -N⁻¹Bᵀ [v(s) + P(s) ζ̂(s)], v(s) = ∫_s^T Φ(t, s)ᵀ M y₀ dt.
    family = kt.family
    size = len(p.grid)
    backward = np.zeros((size, p.n))
    for i in range(size - 1):
        weights = p.grid.truncated_weights(i, size - 1)[i:]
        backward[i] = np.einsum('k,kba,kb->a', weights, family.column(i), forcing[i:])
    drive = backward + np.einsum('kab,kb->ka', kt.riccati.P, correction)
    control = ControlPath(p.grid, -np.einsum('kab,kb->ka', p.gain_factor, drive))

    element = free + RkhsElement(Trajectory(p.grid, correction), control)
    classical, _, _ = optimal_lqr_classical(p, y0, kt.riccati)
    residual = float(np.max(np.linalg.norm(element.trajectory.values - classical.values, axis=1)))
    logger.debug('LQR via kernel: sup-norm gap to closed loop %.3g', residual)
    return RepresenterSolution(list(p.grid.nodes), list(-weighted), element,
                               eval_objective(p, element), residual, which='K1', offset=free)


def _solve_gram(gram, rhs, ridge):  # type: (np.ndarray, np.ndarray, float) -> np.ndarray
    system = gram + ridge * np.eye(len(gram))
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(system), rhs)
    except np.linalg.LinAlgError:
        logger.warning('Gram matrix is not positive definite; falling back to least squares.')
    coeffs, _, rank, _ = scipy.linalg.lstsq(system, rhs)
    logger.debug('Least-squares Gram solve: rank %d of %d', rank, len(system))
    return coeffs


def solve_interpolation(p, kt, famA, y0, points, targets, ridge=0.0):
    # type: (ProblemData, KernelTable, EvolutionFamily, Any, Sequence[float], Sequence[Any], float) -> RepresenterSolution
    """
    Minimal-norm steering from y(t0) = y0 through ``targets`` at ``points``:
    y = y₀ + Σₙ K¹(·, tₙ) zₙ with (G + ridge I) z = targets - y₀(points).

    With ridge = 0 the constraints are hard and the objective is ‖ζ‖²; with
    ridge > 0 it is ‖ζ‖² + ‖ζ(points) - r‖² / ridge. The residual is the
    largest constraint violation.
    """
    check_same_grid(p.grid, kt.grid, famA.grid)
    if ridge < 0:
        raise InvalidArgumentError('ridge must be nonnegative, got %r' % ridge)
    if len(points) != len(targets) or len(points) == 0:
        raise InvalidArgumentError('Need one target per point and at least one point.')
    if len(points) * p.n > MAX_GRAM_SIZE:
        raise InvalidArgumentError('At most %d constrained values are supported, got %d'
                                   % (MAX_GRAM_SIZE, len(points) * p.n))
    indices = [p.grid.index_of(t) for t in points]
    free = free_element(p, famA, y0)
    targets = np.array([np.asarray(r, dtype=float).reshape(p.n) for r in targets])
    gap = (targets - free.trajectory.values[indices]).ravel()

    gram = assemble_gram(kt, points, which='K1')
    coeffs = _solve_gram(gram, gap, ridge)
    reached = gram.dot(coeffs)
    residual = float(np.max(np.abs(reached - gap)))
    if ridge == 0 and residual > 1e-8 * max(1.0, float(np.max(np.abs(gap)))):
        raise RankDeficiencyError(
            'Constraints cannot be met (violation %.3g); the Gram matrix is singular, '
            'try ridge > 0.' % residual)

    norm = float(coeffs.dot(reached))
    objective = norm + (float(np.sum((reached - gap) ** 2)) / ridge if ridge > 0 else 0.0)
    blocks = list(coeffs.reshape(len(points), p.n))
    element = free + kernel_combination(kt, points, blocks, which='K1')
    return RepresenterSolution(points, blocks, element, objective, residual,
                               which='K1', offset=free, convention='interpolation')
