# -*- coding: utf-8 -*-
"""
Shared domain types: time grids carrying trapezoidal quadrature weights,
node-sampled operator paths, trajectories, controls, and the container for
a spatially discretized linear-quadratic problem

    dy/dt + A(t) y = B(t) u,    cost ∫ <M y, y> + <N u, u> dt,

together with the checks that make the problem well posed.
"""
import logging
import os
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from typing import Any  # noqa
from typing import Callable  # noqa
from typing import Dict  # noqa
from typing import List  # noqa
from typing import Optional  # noqa
from typing import Sequence  # noqa
from typing import Tuple  # noqa
import typing  # noqa

import numpy as np
import scipy.linalg


logger = logging.getLogger(__name__)


class LqrkError(Exception):
    pass


class InvalidArgumentError(LqrkError, ValueError):
    pass


class OutOfRangeError(InvalidArgumentError):
    pass


class GridMismatchError(InvalidArgumentError):
    pass


class ValidationError(LqrkError):
    def __init__(self, message, report=None):
        super(ValidationError, self).__init__(message)
        self.report = report


class NumericalError(LqrkError):
    pass


class IntegrationError(NumericalError):
    pass


class InvertibilityError(NumericalError):
    pass


class SingularSystemError(NumericalError):
    pass


class RankDeficiencyError(NumericalError):
    pass


class IterationError(NumericalError):
    def __init__(self, message, residual=None, iterations=None):
        super(IterationError, self).__init__(message)
        self.residual = residual
        self.iterations = iterations


class NotInSpaceError(LqrkError):
    def __init__(self, message, residual=None):
        super(NotInSpaceError, self).__init__(message)
        self.residual = residual


class ConfigError(LqrkError):
    def __init__(self, message, path=None):
        if path:
            message = '%s: %s' % (path, message)
        super(ConfigError, self).__init__(message)
        self.path = path


class VerificationError(LqrkError):
    def __init__(self, message, report=None):
        super(VerificationError, self).__init__(message)
        self.report = report


class Tolerances(object):
    """
    Immutable bag of numerical tolerances. Use ``replace`` to derive a copy
    with some values overridden.
    """
    DEFAULTS = OrderedDict([
        ('symmetry', 1e-10),
        ('psd', 1e-10),
        ('riccati_psd', 1e-8),
        ('invertibility', 1e-12),
        ('admissibility', 1e-6),
        ('mayer', 1e-10),
        ('mayer_max_iter', 200),
        ('mayer_damping', 0.5),
    ])  # type: typing.OrderedDict[str, float]

    def __init__(self, **overrides):  # type: (**float) -> None
        unknown = set(overrides) - set(self.DEFAULTS)
        if unknown:
            raise InvalidArgumentError(
                'Unknown tolerance(s): %s' % ', '.join(sorted(unknown)))
        values = OrderedDict(self.DEFAULTS)
        values.update(overrides)
        for name, value in values.items():
            if not value >= 0:
                raise InvalidArgumentError('Tolerance %s must be nonnegative.' % name)
        object.__setattr__(self, '_values', values)

    def __getattr__(self, name):  # type: (str) -> Any
        try:
            return self.__dict__['_values'][name]
        except KeyError:
            raise AttributeError(name)

    def __setattr__(self, name, value):
        raise AttributeError('Tolerances are immutable; use replace().')

    def replace(self, **overrides):  # type: (**float) -> Tolerances
        values = dict(self._values)
        values.update(overrides)
        return Tolerances(**values)

    def as_dict(self):  # type: () -> Dict[str, float]
        return dict(self._values)

    def __repr__(self):
        return 'Tolerances(%s)' % ', '.join(
            '%s=%r' % item for item in self._values.items())


DEFAULT_TOLERANCES = Tolerances()


def worker_count():  # type: () -> int
    """
    Number of worker threads, capped by the ``LQRK_THREADS`` environment
    variable (unset or 0 means one per CPU).
    """
    raw = os.environ.get('LQRK_THREADS', '').strip()
    try:
        requested = int(raw) if raw else 0
    except ValueError:
        raise InvalidArgumentError('LQRK_THREADS must be an integer, got %r' % raw)
    if requested < 0:
        raise InvalidArgumentError('LQRK_THREADS must be nonnegative.')
    return requested or (os.cpu_count() or 1)


T = typing.TypeVar('T')
R = typing.TypeVar('R')


def parallel_map(func, items):
    # type: (Callable[[T], R], Sequence[T]) -> List[R]
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def frozen(values):  # type: (Any) -> np.ndarray
    array = np.array(values, dtype=float)
    array.flags.writeable = False
    return array


def trapezoid_weights(nodes):  # type: (np.ndarray) -> np.ndarray
    gaps = np.diff(nodes)
    weights = np.zeros(len(nodes))
    weights[:-1] += gaps / 2.0
    weights[1:] += gaps / 2.0
    return weights


class TimeGrid(object):
    """
    Strictly increasing time nodes t0 = nodes[0] < ... < nodes[-1] = T with
    trapezoidal quadrature weights.
    """

    def __init__(self, nodes):  # type: (Sequence[float]) -> None
        nodes = np.array(nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2:
            raise InvalidArgumentError('A grid needs at least two nodes.')
        if not np.all(np.isfinite(nodes)):
            raise InvalidArgumentError('Grid nodes must be finite.')
        if np.any(np.diff(nodes) <= 0):
            raise InvalidArgumentError('Grid nodes must be strictly increasing.')
        self.nodes = frozen(nodes)
        self.weights = frozen(trapezoid_weights(nodes))
        self.steps = frozen(np.diff(nodes))

    @classmethod
    def single(cls, t):  # type: (float) -> TimeGrid
        """
        The one-node grid [t, t], with zero weight. Only sub-problems started
        at the horizon live on it.
        """
        grid = cls.__new__(cls)
        grid.nodes = frozen(np.array([float(t)]))
        grid.weights = frozen(np.zeros(1))
        grid.steps = frozen(np.zeros(0))
        return grid

    @property
    def t0(self):  # type: () -> float
        return float(self.nodes[0])

    @property
    def T(self):  # type: () -> float
        return float(self.nodes[-1])

    @property
    def length(self):  # type: () -> float
        return self.T - self.t0

    @property
    def midpoints(self):  # type: () -> np.ndarray
        return (self.nodes[1:] + self.nodes[:-1]) / 2.0

    def __len__(self):
        return len(self.nodes)

    def __eq__(self, other):
        return self is other or (
            isinstance(other, TimeGrid) and np.array_equal(self.nodes, other.nodes))

    def __ne__(self, other):
        return not (self == other)

    def __hash__(self):
        return hash(self.nodes.tobytes())

    def __repr__(self):
        return 'TimeGrid(t0=%r, T=%r, nodes=%d)' % (self.t0, self.T, len(self))

    def index_of(self, t):  # type: (float) -> int
        """
        Index of the node equal to ``t`` (up to rounding). Raises
        OutOfRangeError if ``t`` is not a node.
        """
        i = int(np.searchsorted(self.nodes, t))
        slack = 1e-12 * max(1.0, abs(self.length))
        for candidate in (i - 1, i):
            if 0 <= candidate < len(self) and abs(self.nodes[candidate] - t) <= slack:
                return candidate
        raise OutOfRangeError('%r is not a node of %r' % (t, self))

    def bracket(self, t):  # type: (float) -> Tuple[int, float]
        """
        Returns (i, theta) with t = (1 - theta) * nodes[i] + theta * nodes[i + 1].
        """
        slack = 1e-12 * max(1.0, abs(self.length))
        if not (self.t0 - slack <= t <= self.T + slack):
            raise OutOfRangeError('t=%r outside [%r, %r]' % (t, self.t0, self.T))
        if len(self) == 1:
            return 0, 0.0
        i = int(np.searchsorted(self.nodes, t, side='right')) - 1
        i = min(max(i, 0), len(self) - 2)
        theta = (t - self.nodes[i]) / self.steps[i]
        return i, float(min(max(theta, 0.0), 1.0))

    def truncated_weights(self, lo, hi):  # type: (int, int) -> np.ndarray
        """
        Trapezoidal weights of the sub-grid nodes[lo..hi] (inclusive), as a
        full-length vector that is zero outside that range.
        """
        weights = np.zeros(len(self))
        if hi > lo:
            weights[lo:hi + 1] = trapezoid_weights(self.nodes[lo:hi + 1])
        return weights

    def jump_fraction(self, i):  # type: (int) -> float
        """
        Node value of the indicator 1{s < nodes[i]} at s = nodes[i]: the
        left-interval share of the two adjacent intervals. Storing this value
        keeps trapezoidal quadrature second order across the jump.
        """
        left = self.steps[i - 1] if i > 0 else 0.0
        right = self.steps[i] if i < len(self) - 1 else 0.0
        return float(left / (left + right))

    def indicator_before(self, i):  # type: (int) -> np.ndarray
        """
        Node samples of s -> 1{s < nodes[i]} with the jump convention above.
        """
        values = np.zeros(len(self))
        values[:i] = 1.0
        values[i] = self.jump_fraction(i)
        return values


def make_uniform_grid(t0, T, steps):  # type: (float, float, int) -> TimeGrid
    if not T > t0:
        raise InvalidArgumentError('Need T > t0, got t0=%r, T=%r' % (t0, T))
    if int(steps) != steps or steps < 2:
        raise InvalidArgumentError('Need an integer number of steps >= 2, got %r' % steps)
    nodes = np.linspace(t0, T, int(steps) + 1)
    nodes[0], nodes[-1] = t0, T
    return TimeGrid(nodes)


def make_grid(nodes):  # type: (Sequence[float]) -> TimeGrid
    return TimeGrid(nodes)


def trapezoid(grid, values):  # type: (TimeGrid, Any) -> np.ndarray
    """
    Integrates node samples over [t0, T]; the first axis of ``values`` is time.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[0] != len(grid):
        raise GridMismatchError('Expected %d samples, got %d' % (len(grid), values.shape[0]))
    return np.tensordot(grid.weights, values, axes=(0, 0))


def check_same_grid(*grids):  # type: (*TimeGrid) -> None
    first = grids[0]
    for grid in grids[1:]:
        if grid != first:
            raise GridMismatchError('%r and %r differ' % (first, grid))


class OperatorPath(object):
    """
    A time-dependent matrix sampled at the nodes of a grid and interpolated
    linearly in between.
    """
    interpolation = 'piecewise-linear'

    def __init__(self, grid, values):  # type: (TimeGrid, Any) -> None
        values = np.array(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1, 1)
        if values.ndim != 3 or values.shape[0] != len(grid):
            raise InvalidArgumentError(
                'Expected one matrix per node (%d), got array of shape %r'
                % (len(grid), values.shape))
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError('Operator path contains non-finite values.')
        self.grid = grid
        self.values = frozen(values)

    @classmethod
    def constant(cls, matrix, grid):  # type: (Any, TimeGrid) -> OperatorPath
        matrix = np.atleast_2d(np.array(matrix, dtype=float))
        return cls(grid, np.broadcast_to(matrix, (len(grid),) + matrix.shape))

    @classmethod
    def from_function(cls, func, grid):
        # type: (Callable[[float], Any], TimeGrid) -> OperatorPath
        return cls(grid, [np.atleast_2d(func(t)) for t in grid.nodes])

    @property
    def rows(self):  # type: () -> int
        return self.values.shape[1]

    @property
    def cols(self):  # type: () -> int
        return self.values.shape[2]

    @property
    def shape(self):  # type: () -> Tuple[int, int]
        return self.rows, self.cols

    def __getitem__(self, i):  # type: (int) -> np.ndarray
        return self.values[i]

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return 'OperatorPath(%dx%d on %r)' % (self.rows, self.cols, self.grid)

    def at(self, t):  # type: (float) -> np.ndarray
        i, theta = self.grid.bracket(t)
        if theta == 0.0:
            return self.values[i]
        elif theta == 1.0:
            return self.values[i + 1]
        return (1.0 - theta) * self.values[i] + theta * self.values[i + 1]

    @property
    def midpoint_values(self):  # type: () -> np.ndarray
        return (self.values[1:] + self.values[:-1]) / 2.0

    @property
    def is_constant(self):  # type: () -> bool
        return bool(np.all(self.values == self.values[0]))

    @property
    def is_diagonal(self):  # type: () -> bool
        if self.rows != self.cols:
            return False
        off = self.values * (1.0 - np.eye(self.rows))
        return not np.any(off)

    def transpose(self):  # type: () -> OperatorPath
        return OperatorPath(self.grid, np.swapaxes(self.values, 1, 2))


def eval_path(path, t):  # type: (OperatorPath, float) -> np.ndarray
    return path.at(t)


def constant_path(matrix, grid):  # type: (Any, TimeGrid) -> OperatorPath
    return OperatorPath.constant(matrix, grid)


class _NodeSeries(object):
    """
    One vector per grid node. Supports the vector-space operations needed to
    combine trajectories and controls.
    """

    def __init__(self, grid, values):  # type: (TimeGrid, Any) -> None
        values = np.array(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2 or values.shape[0] != len(grid):
            raise InvalidArgumentError(
                'Expected one vector per node (%d), got array of shape %r'
                % (len(grid), values.shape))
        self.grid = grid
        self.values = frozen(values)

    @property
    def dim(self):  # type: () -> int
        return self.values.shape[1]

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):  # type: (int) -> np.ndarray
        return self.values[i]

    def at(self, t):  # type: (float) -> np.ndarray
        i, theta = self.grid.bracket(t)
        if theta == 0.0:
            return self.values[i]
        return (1.0 - theta) * self.values[i] + theta * self.values[i + 1]

    def sup_norm(self):  # type: () -> float
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def _combine(self, other, sign):
        if not isinstance(other, type(self)):
            return NotImplemented
        check_same_grid(self.grid, other.grid)
        return type(self)(self.grid, self.values + sign * other.values)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, scalar):
        return type(self)(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    @classmethod
    def zeros(cls, grid, dim):  # type: (TimeGrid, int) -> Any
        return cls(grid, np.zeros((len(grid), dim)))


class Trajectory(_NodeSeries):
    @property
    def states(self):  # type: () -> np.ndarray
        return self.values

    def __repr__(self):
        return 'Trajectory(n=%d on %r)' % (self.dim, self.grid)


class ControlPath(_NodeSeries):
    @property
    def controls(self):  # type: () -> np.ndarray
        return self.values

    def __repr__(self):
        return 'ControlPath(m=%d on %r)' % (self.dim, self.grid)


class ProblemData(object):
    """
    The LQ problem after spatial discretization: paths A (n×n), B (n×m),
    M (n×n), N (m×m) on a common grid, the initial weight J0 and the lower
    bound ``nu`` for N.
    """

    def __init__(self, A, B, M, N, J0, nu, tolerances=DEFAULT_TOLERANCES):
        # type: (OperatorPath, OperatorPath, OperatorPath, OperatorPath, Any, float, Tolerances) -> None
        check_same_grid(A.grid, B.grid, M.grid, N.grid)
        n, m = B.shape
        if A.shape != (n, n):
            raise InvalidArgumentError('A must be %dx%d, got %r' % (n, n, A.shape))
        if M.shape != (n, n):
            raise InvalidArgumentError('M must be %dx%d, got %r' % (n, n, M.shape))
        if N.shape != (m, m):
            raise InvalidArgumentError('N must be %dx%d, got %r' % (m, m, N.shape))
        J0 = np.atleast_2d(np.array(J0, dtype=float))
        if J0.shape != (n, n):
            raise InvalidArgumentError('J0 must be %dx%d, got %r' % (n, n, J0.shape))
        if not nu > 0:
            raise InvalidArgumentError('nu must be positive, got %r' % nu)
        self.A = A
        self.B = B
        self.M = M
        self.N = N
        self.J0 = frozen(J0)
        self.nu = float(nu)
        self.tolerances = tolerances
        self._memo = {}  # type: Dict[str, Any]

    @property
    def grid(self):  # type: () -> TimeGrid
        return self.A.grid

    @property
    def n(self):  # type: () -> int
        return self.A.rows

    @property
    def m(self):  # type: () -> int
        return self.B.cols

    def __repr__(self):
        return 'ProblemData(n=%d, m=%d, %r)' % (self.n, self.m, self.grid)

    def _memoized(self, key, compute):
        # Results are pure functions of the frozen inputs, so a racing
        # recomputation stores an identical value.
        if key not in self._memo:
            self._memo[key] = compute()
        return self._memo[key]

    def gain_factor_at(self, B, N):  # type: (np.ndarray, np.ndarray) -> np.ndarray
        """
        N⁻¹Bᵀ for one (B, N) sample, through a Cholesky factorization of N.
        """
        try:
            factor = scipy.linalg.cho_factor(N)
        except np.linalg.LinAlgError:
            raise InvertibilityError('N is not positive definite.')
        return scipy.linalg.cho_solve(factor, B.T)

    @property
    def gain_factor(self):  # type: () -> np.ndarray
        """
        N(tᵢ)⁻¹B(tᵢ)ᵀ at every node, shape (nodes, m, n).
        """
        return self._memoized('gain_factor', lambda: frozen([
            self.gain_factor_at(B, N) for B, N in zip(self.B.values, self.N.values)]))

    @property
    def control_weight(self):  # type: () -> np.ndarray
        """
        B(tᵢ)N(tᵢ)⁻¹B(tᵢ)ᵀ at every node, shape (nodes, n, n).
        """
        def compute():
            weights = np.einsum('kij,kjl->kil', self.B.values, self.gain_factor)
            return frozen((weights + np.swapaxes(weights, 1, 2)) / 2.0)
        return self._memoized('control_weight', compute)

    @property
    def control_weight_mid(self):  # type: () -> np.ndarray
        """
        B N⁻¹ Bᵀ at interval midpoints, from the interpolated B and N.
        """
        def compute():
            weights = []
            for B, N in zip(self.B.midpoint_values, self.N.midpoint_values):
                weight = B.dot(self.gain_factor_at(B, N))
                weights.append((weight + weight.T) / 2.0)
            return frozen(weights)
        return self._memoized('control_weight_mid', compute)


class Check(object):
    def __init__(self, name, node, value, bound, passed, severity='error'):
        # type: (str, Optional[int], float, float, bool, str) -> None
        self.name = name
        self.node = node
        self.value = value
        self.bound = bound
        self.passed = passed
        self.severity = severity

    def as_dict(self):  # type: () -> Dict[str, Any]
        return {
            'name': self.name,
            'node': self.node,
            'value': self.value,
            'bound': self.bound,
            'passed': self.passed,
            'severity': self.severity,
        }

    def __repr__(self):
        return 'Check(%s@%s: %r vs %r, %s)' % (
            self.name, self.node, self.value, self.bound, 'ok' if self.passed else 'FAIL')


class ValidationReport(object):
    def __init__(self, checks, coercivity):  # type: (List[Check], float) -> None
        self.checks = checks
        # min over nodes of the smallest eigenvalue of sym(A(tᵢ)); informational.
        self.coercivity = coercivity

    @property
    def failures(self):  # type: () -> List[Check]
        return [c for c in self.checks if c.severity == 'error' and not c.passed]

    @property
    def passed(self):  # type: () -> bool
        return not self.failures

    def raise_for_failures(self):  # type: () -> None
        if not self.passed:
            raise ValidationError(
                'Problem data violates %s' % ', '.join(
                    sorted({c.name for c in self.failures})), report=self)

    def as_dict(self):  # type: () -> Dict[str, Any]
        return {
            'passed': self.passed,
            'coercivity_min_eig_sym_A': self.coercivity,
            'failures': [c.as_dict() for c in self.failures],
            'checks': len(self.checks),
        }


def _asymmetry(matrix):  # type: (np.ndarray) -> float
    return float(np.max(np.abs(matrix - matrix.T), initial=0.0))


def validate_problem(p):  # type: (ProblemData) -> ValidationReport
    """
    Checks symmetry and positivity of M, N and J0 at every node. N below
    ``nu`` or an indefinite M are failures; the coercivity of A is only
    reported.
    """
    tol = p.tolerances
    checks = []  # type: List[Check]

    def symmetric(name, node, matrix):
        scale = max(1.0, float(np.max(np.abs(matrix), initial=0.0)))
        value = _asymmetry(matrix)
        checks.append(Check(name + '.symmetric', node, value, tol.symmetry * scale,
                            value <= tol.symmetry * scale))

    for i in range(len(p.grid)):
        M, N = p.M[i], p.N[i]
        symmetric('M', i, M)
        symmetric('N', i, N)
        m_min = float(scipy.linalg.eigvalsh((M + M.T) / 2.0)[0])
        checks.append(Check('M.psd', i, m_min, -tol.psd, m_min >= -tol.psd))
        n_min = float(scipy.linalg.eigvalsh((N + N.T) / 2.0)[0])
        checks.append(Check('N.lower_bound', i, n_min, p.nu, n_min >= p.nu - tol.psd))

    symmetric('J0', None, p.J0)
    j_min = float(scipy.linalg.eigvalsh((p.J0 + p.J0.T) / 2.0)[0])
    checks.append(Check('J0.psd', None, j_min, -tol.psd, j_min >= -tol.psd))

    coercivity = min(
        float(scipy.linalg.eigvalsh((A + A.T) / 2.0)[0]) for A in p.A.values)
    report = ValidationReport(checks, coercivity)
    if not report.passed:
        logger.debug('Validation failed: %r', report.failures[:5])
    return report
