# -*- coding: utf-8 -*-
"""
The oracle layer: the backward differential Riccati equation

    -dP/dt + P A + Aᵀ P + P B N⁻¹ Bᵀ P = M,    P(T) = 0,

its linear counterpart for π (the same equation without the quadratic
term), the forward-backward two-point boundary value systems that define
P pointwise, and the classical closed-loop LQR.
"""
import logging
import warnings
from typing import Any  # noqa
from typing import Callable  # noqa
from typing import List  # noqa
from typing import Optional  # noqa
from typing import Tuple  # noqa

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from lqrk.core import (
    ControlPath,
    IntegrationError,
    InvalidArgumentError,
    InvertibilityError,
    ProblemData,  # noqa
    SingularSystemError,
    TimeGrid,
    Trajectory,
    check_same_grid,
    frozen,
    trapezoid,
    validate_problem,
)
from lqrk.evolution import closed_loop_generator, solve_forward


logger = logging.getLogger(__name__)


def _symmetrize(matrix):  # type: (np.ndarray) -> np.ndarray
    return (matrix + matrix.T) / 2.0


def check_invertible(matrix, tolerance, name):
    # type: (np.ndarray, float, str) -> Tuple[np.ndarray, float]
    """
    Returns (inverse, condition number), raising InvertibilityError when the
    reciprocal condition number falls below ``tolerance``.
    """
    condition = float(np.linalg.cond(matrix))
    if not np.isfinite(condition) or 1.0 / condition < tolerance:
        raise InvertibilityError(
            '%s is not invertible (condition number %.3g)' % (name, condition))
    return scipy.linalg.inv(matrix), condition


class _SymmetricSolution(object):
    values_name = 'values'

    def __init__(self, grid, values):  # type: (TimeGrid, Any) -> None
        self.grid = grid
        self.values = frozen(values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):  # type: (int) -> np.ndarray
        return self.values[i]

    def at(self, t):  # type: (float) -> np.ndarray
        i, theta = self.grid.bracket(t)
        return (1.0 - theta) * self.values[i] + theta * self.values[i + 1]

    @property
    def max_asymmetry(self):  # type: () -> float
        return float(np.max(np.abs(self.values - np.swapaxes(self.values, 1, 2))))


class RiccatiSolution(_SymmetricSolution):
    """
    P(tᵢ) at every node. ``initial_factor`` is (J0 + P(t0))⁻¹ when the
    invertibility check was made.
    """

    def __init__(self, grid, values, initial_factor=None, condition=None):
        # type: (TimeGrid, Any, Optional[np.ndarray], Optional[float]) -> None
        super(RiccatiSolution, self).__init__(grid, values)
        self.initial_factor = None if initial_factor is None else frozen(initial_factor)
        self.condition = condition

    @property
    def P(self):  # type: () -> np.ndarray
        return self.values

    def __repr__(self):
        return 'RiccatiSolution(n=%d on %r)' % (self.values.shape[1], self.grid)


class PiSolution(_SymmetricSolution):
    @property
    def pi(self):  # type: () -> np.ndarray
        return self.values

    def __repr__(self):
        return 'PiSolution(n=%d on %r)' % (self.values.shape[1], self.grid)


class FBSolution(object):
    """
    State ξ and adjoint η of a forward-backward system on [t, T].
    """

    def __init__(self, xi, eta):  # type: (Trajectory, Trajectory) -> None
        check_same_grid(xi.grid, eta.grid)
        self.xi = xi
        self.eta = eta

    @property
    def grid(self):  # type: () -> TimeGrid
        return self.xi.grid


def _integrate_backward(p, rhs, name):
    # type: (ProblemData, Callable[..., np.ndarray], str) -> np.ndarray
    """
    RK4 for dX/dt = rhs(A, S, M, X) backwards from X(T) = 0, symmetrizing
    after every step. S = B N⁻¹ Bᵀ.
    """
    grid = p.grid
    size, n = len(grid), p.n
    A, Am = p.A.values, p.A.midpoint_values
    M, Mm = p.M.values, p.M.midpoint_values
    S, Sm = p.control_weight, p.control_weight_mid
    X = np.zeros((size, n, n))
    for k in range(size - 2, -1, -1):
        h = -grid.steps[k]
        Y = X[k + 1]
        k1 = rhs(A[k + 1], S[k + 1], M[k + 1], Y)
        k2 = rhs(Am[k], Sm[k], Mm[k], Y + h / 2.0 * k1)
        k3 = rhs(Am[k], Sm[k], Mm[k], Y + h / 2.0 * k2)
        k4 = rhs(A[k], S[k], M[k], Y + h * k3)
        X[k] = _symmetrize(Y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        if not np.all(np.isfinite(X[k])):
            raise IntegrationError('%s integration diverged at t=%r' % (name, grid.nodes[k]))
    return X


def _riccati_rhs(A, S, M, P):
    return P.dot(A) + A.T.dot(P) + P.dot(S).dot(P) - M


def _lyapunov_rhs(A, S, M, pi):
    return A.T.dot(pi) + pi.dot(A) - M


def solve_riccati(p, check_invertibility=True):
    # type: (ProblemData, bool) -> RiccatiSolution
    """
    Integrates the differential Riccati equation backwards from P(T) = 0.

    With ``check_invertibility`` (the default), J0 + P(t0) must be
    invertible; the inverse and its condition number are kept on the result
    because every kernel built from P needs them.
    """
    validate_problem(p).raise_for_failures()
    P = _integrate_backward(p, _riccati_rhs, 'Riccati')
    factor, condition = None, None
    if check_invertibility:
        factor, condition = check_invertible(
            p.J0 + P[0], p.tolerances.invertibility, 'J0 + P(t0)')
        if condition > 1e8:
            logger.warning('J0 + P(t0) is ill-conditioned (condition number %.3g)', condition)
    logger.debug('Riccati solved on %d nodes; cond(J0 + P(t0)) = %s', len(p.grid), condition)
    return RiccatiSolution(p.grid, P, factor, condition)


def solve_lyapunov_pi(p):  # type: (ProblemData) -> PiSolution
    """
    Integrates -dπ/dt + Aᵀπ + πA = M backwards from π(T) = 0.
    """
    validate_problem(p).raise_for_failures()
    return PiSolution(p.grid, _integrate_backward(p, _lyapunov_rhs, 'Lyapunov'))


def _solve_two_point(p, start, initial):
    # type: (ProblemData, int, np.ndarray) -> FBSolution
    """
    Solves on [t_start, T]

        dξ/ds + A ξ + B N⁻¹ Bᵀ η = 0,   -dη/ds + Aᵀ η - M ξ = 0,
        ξ(t_start) = initial,  η(T) = 0,

    with the implicit midpoint scheme, as one sparse block-banded linear
    system in the unknowns (ξ_k, η_k) stacked node by node. Started at T
    the solution is the single node ξ(T) = initial, η(T) = 0.
    """
    grid = p.grid
    n = p.n
    nodes = len(grid) - start
    if nodes == 1:
        sub_grid = TimeGrid.single(grid.T)
        return FBSolution(Trajectory(sub_grid, initial.reshape(1, n).copy()),
                          Trajectory(sub_grid, np.zeros((1, n))))
    sub_grid = TimeGrid(grid.nodes[start:])
    size = 2 * n * nodes
    rhs = np.zeros(size)
    rhs[0:n] = initial
    eye = np.eye(n)
    local_rows, local_cols = np.divmod(np.arange(n * n), n)
    rows = []  # type: List[np.ndarray]
    cols = []  # type: List[np.ndarray]
    values = []  # type: List[np.ndarray]

    def put(row, col, block):
        rows.append(row + local_rows)
        cols.append(col + local_cols)
        values.append(np.ravel(block))

    def xi(k):
        return 2 * n * k

    def eta(k):
        return 2 * n * k + n

    put(0, xi(0), eye)
    row = n
    for k in range(nodes - 1):
        interval = start + k
        h = grid.steps[interval]
        Am = p.A.midpoint_values[interval]
        Mm = p.M.midpoint_values[interval]
        Sm = p.control_weight_mid[interval]
        state, adjoint = row, row + n
        put(state, xi(k), -eye / h + Am / 2.0)
        put(state, xi(k + 1), eye / h + Am / 2.0)
        put(state, eta(k), Sm / 2.0)
        put(state, eta(k + 1), Sm / 2.0)
        put(adjoint, eta(k), eye / h + Am.T / 2.0)
        put(adjoint, eta(k + 1), -eye / h + Am.T / 2.0)
        put(adjoint, xi(k), -Mm / 2.0)
        put(adjoint, xi(k + 1), -Mm / 2.0)
        row += 2 * n
    put(row, eta(nodes - 1), eye)
    system = scipy.sparse.csc_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size))

    with warnings.catch_warnings():
        warnings.simplefilter('error', scipy.sparse.linalg.MatrixRankWarning)
        try:
            solution = scipy.sparse.linalg.spsolve(system, rhs)
        except (RuntimeError, scipy.sparse.linalg.MatrixRankWarning) as exc:
            raise SingularSystemError('Forward-backward system is singular: %s' % exc)
    if not np.all(np.isfinite(solution)):
        raise SingularSystemError('Forward-backward system has no finite solution.')
    solution = solution.reshape(nodes, 2, n)
    return FBSolution(Trajectory(sub_grid, solution[:, 0]), Trajectory(sub_grid, solution[:, 1]))


def solve_fbs(p, t, h):  # type: (ProblemData, float, Any) -> FBSolution
    """
    The forward-backward system started at node ``t`` from ξ(t) = h. Its
    adjoint at t equals P(t) h.
    """
    h = np.asarray(h, dtype=float).reshape(p.n)
    return _solve_two_point(p, p.grid.index_of(t), h)


def solve_optimality_system(p, y0):  # type: (ProblemData, Any) -> FBSolution
    """
    The full-horizon optimality system for (y, p) with y(t0) = y0 and
    p(T) = 0. The optimal adjoint satisfies p(t) = P(t) y(t).
    """
    y0 = np.asarray(y0, dtype=float).reshape(p.n)
    return _solve_two_point(p, 0, y0)


def decoupling_residual(p, P, t, h):
    # type: (ProblemData, RiccatiSolution, float, Any) -> float
    """
    ‖η(t) - P(t) h‖ / max(1, ‖h‖) with η from the boundary value problem.
    """
    check_same_grid(p.grid, P.grid)
    h = np.asarray(h, dtype=float).reshape(p.n)
    i = p.grid.index_of(t)
    eta = solve_fbs(p, t, h).eta[0]
    return float(np.linalg.norm(eta - P[i].dot(h))) / max(1.0, float(np.linalg.norm(h)))


def riccati_residual(p, P):  # type: (ProblemData, RiccatiSolution) -> float
    """
    Largest Frobenius norm, over interior nodes, of the Riccati equation
    residual with dP/dt replaced by centered differences.
    """
    check_same_grid(p.grid, P.grid)
    nodes = p.grid.nodes
    worst = 0.0
    for i in range(1, len(nodes) - 1):
        dP = (P[i + 1] - P[i - 1]) / (nodes[i + 1] - nodes[i - 1])
        residual = -dP + _riccati_rhs(p.A[i], p.control_weight[i], p.M[i], P[i])
        worst = max(worst, float(np.linalg.norm(residual)))
    return worst


def lqr_cost(p, y, u):  # type: (ProblemData, Trajectory, ControlPath) -> float
    """
    ∫ <M y, y> + <N u, u> dt by trapezoidal quadrature.
    """
    check_same_grid(p.grid, y.grid, u.grid)
    running = (np.einsum('ki,kij,kj->k', y.values, p.M.values, y.values) +
               np.einsum('ki,kij,kj->k', u.values, p.N.values, u.values))
    return float(trapezoid(p.grid, running))


def simulate(p, y0, controls):  # type: (ProblemData, Any, ControlPath) -> Trajectory
    """
    Open-loop state for dy/dt + A y = B u with u piecewise linear.
    """
    check_same_grid(p.grid, controls.grid)
    if controls.dim != p.m:
        raise InvalidArgumentError('Expected %d controls, got %d' % (p.m, controls.dim))
    u = controls.values
    forcing = np.einsum('kij,kj->ki', p.B.values, u)
    forcing_mid = np.einsum('kij,kj->ki', p.B.midpoint_values, (u[1:] + u[:-1]) / 2.0)
    return solve_forward(p.A, y0, forcing, forcing_mid)


def optimal_lqr_classical(p, y0, P=None):
    # type: (ProblemData, Any, Optional[RiccatiSolution]) -> Tuple[Trajectory, ControlPath, float]
    """
    The optimal closed loop dy/dt + (A + B N⁻¹ Bᵀ P) y = 0 from y(t0) = y0,
    its feedback control u = -N⁻¹ Bᵀ P y and its cost.
    """
    if P is None:
        P = solve_riccati(p, check_invertibility=False)
    y = solve_forward(closed_loop_generator(p, P), y0)
    u = ControlPath(p.grid, -np.einsum('kij,kjl,kl->ki', p.gain_factor, P.P, y.values))
    return y, u, lqr_cost(p, y, u)
