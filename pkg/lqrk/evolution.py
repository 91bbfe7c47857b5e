# -*- coding: utf-8 -*-
"""
Evolution families: transition operators Φ(t, s), t >= s, of

    ∂_t Φ(t, s) + G(t) Φ(t, s) = 0,    Φ(s, s) = I,

for a generator path G, tabulated at every pair of grid nodes.

Every interval [tₖ, tₖ₊₁] gets a one-step propagator Sₖ (classical RK4 on the
linear matrix ODE, or the exact exponential when G is constant and
diagonal), and the table is built from products of these, row by row:
Φ(tᵢ, tⱼ) = Sᵢ₋₁ Φ(tᵢ₋₁, tⱼ). The discrete family therefore satisfies the
composition law up to rounding.
"""
import logging
from typing import Any  # noqa
from typing import List  # noqa
from typing import Optional  # noqa
from typing import Tuple  # noqa

import numpy as np

from lqrk.core import (
    GridMismatchError,
    IntegrationError,
    InvalidArgumentError,
    OperatorPath,
    OutOfRangeError,
    ProblemData,  # noqa
    TimeGrid,  # noqa
    Trajectory,
    check_same_grid,
    parallel_map,
    worker_count,
)


logger = logging.getLogger(__name__)

METHODS = ('auto', 'rk4', 'exact')


def packed_index(i, j):  # type: (int, int) -> int
    return i * (i + 1) // 2 + j


class EvolutionFamily(object):
    """
    Lower-triangular table of Φ(tᵢ, tⱼ), i >= j, stored packed by rows so
    that row i (all Φ(tᵢ, ·)) is contiguous.
    """

    def __init__(self, grid, generator, blocks, method):
        # type: (TimeGrid, OperatorPath, np.ndarray, str) -> None
        size = len(grid)
        if blocks.shape[0] != size * (size + 1) // 2:
            raise InvalidArgumentError('Expected %d blocks, got %d' % (
                size * (size + 1) // 2, blocks.shape[0]))
        blocks.flags.writeable = False
        self.grid = grid
        self.generator = generator
        self.blocks = blocks
        self.method = method

    @property
    def n(self):  # type: () -> int
        return self.blocks.shape[1]

    def __len__(self):
        return len(self.blocks)

    def __repr__(self):
        return 'EvolutionFamily(n=%d, %s, %r)' % (self.n, self.method, self.grid)

    def block(self, i, j):  # type: (int, int) -> np.ndarray
        if not (0 <= j <= i < len(self.grid)):
            raise OutOfRangeError(
                'Transition Φ(t_%d, t_%d) is only defined for t_%d >= t_%d' % (i, j, i, j))
        return self.blocks[packed_index(i, j)]

    def transition(self, t, s):  # type: (float, float) -> np.ndarray
        return self.block(self.grid.index_of(t), self.grid.index_of(s))

    def row(self, i):  # type: (int) -> np.ndarray
        """
        Φ(tᵢ, tⱼ) for j = 0..i, shape (i + 1, n, n).
        """
        start = packed_index(i, 0)
        return self.blocks[start:start + i + 1]

    def column(self, j):  # type: (int) -> np.ndarray
        """
        Φ(tᵢ, tⱼ) for i = j..last, shape (nodes - j, n, n).
        """
        rows = np.arange(j, len(self.grid))
        return self.blocks[rows * (rows + 1) // 2 + j]

    def from_start(self, i=None):  # type: (Optional[int]) -> np.ndarray
        """
        Φ(tᵢ, t0) for one node, or for all nodes when ``i`` is None.
        """
        if i is None:
            return self.column(0)
        return self.block(i, 0)

    def apply(self, i, j, vector):  # type: (int, int, Any) -> np.ndarray
        return self.block(i, j).dot(vector)


def closed_loop_generator(p, P):
    # type: (ProblemData, Any) -> OperatorPath
    """
    A(tᵢ) + B(tᵢ)N(tᵢ)⁻¹B(tᵢ)ᵀP(tᵢ) at every node.
    """
    if P.grid != p.grid:
        raise GridMismatchError('Riccati solution lives on %r, problem on %r' % (P.grid, p.grid))
    values = p.A.values + np.einsum('kij,kjl->kil', p.control_weight, P.P)
    return OperatorPath(p.grid, values)


def _rk4_step_matrices(gen):  # type: (OperatorPath) -> np.ndarray
    """
    One-step RK4 propagators for Y' = -G(t) Y, one per interval, with G
    evaluated at the stage times from the piecewise-linear path.
    """
    n = gen.rows
    h = gen.grid.steps[:, None, None]
    eye = np.eye(n)
    G0, Gm, G1 = gen.values[:-1], gen.midpoint_values, gen.values[1:]
    K1 = -G0
    K2 = -np.matmul(Gm, eye + h / 2.0 * K1)
    K3 = -np.matmul(Gm, eye + h / 2.0 * K2)
    K4 = -np.matmul(G1, eye + h * K3)
    return eye + h / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4)


def _fill_columns(steps, blocks, lo, hi):
    # type: (np.ndarray, np.ndarray, int, int) -> None
    """
    Fills Φ(tᵢ, tⱼ) for base columns lo <= j < hi by forward recursion.
    """
    n = steps.shape[1]
    size = steps.shape[0] + 1
    current = np.broadcast_to(np.eye(n), (hi - lo, n, n)).copy()
    for j in range(lo, hi):
        blocks[packed_index(j, j)] = np.eye(n)
    for i in range(lo + 1, size):
        active = min(hi, i) - lo
        current[:active] = np.matmul(steps[i - 1], current[:active])
        start = packed_index(i, lo)
        blocks[start:start + active] = current[:active]


def _column_chunks(size, chunks):  # type: (int, int) -> List[Tuple[int, int]]
    # Column j costs ~(size - j) products, so cut at equal shares of the
    # triangular work instead of equal column counts.
    work = np.cumsum(np.arange(size, 0, -1, dtype=float))
    bounds = np.searchsorted(work, np.linspace(0, work[-1], chunks + 1)[1:-1])
    edges = sorted(set([0] + [int(b) for b in bounds] + [size]))
    return list(zip(edges[:-1], edges[1:]))


def _exact_diagonal_blocks(gen):  # type: (OperatorPath) -> np.ndarray
    grid = gen.grid
    rates = np.diag(gen.values[0])
    n, size = len(rates), len(grid)
    blocks = np.zeros((size * (size + 1) // 2, n, n))
    diagonal = np.arange(n)
    for i in range(size):
        elapsed = grid.nodes[i] - grid.nodes[:i + 1]
        start = packed_index(i, 0)
        blocks[start:start + i + 1, diagonal, diagonal] = np.exp(-np.outer(elapsed, rates))
    return blocks


def propagate(gen, grid=None, method='auto'):
    # type: (OperatorPath, Optional[TimeGrid], str) -> EvolutionFamily
    """
    Tabulates the evolution family of ``gen`` on its grid.

    ``method`` is 'rk4', 'exact' (constant diagonal generators only; uses
    exact exponentials, which avoids the step-size limit of stiff modes) or
    'auto', which takes 'exact' whenever it applies.
    """
    if grid is not None:
        check_same_grid(grid, gen.grid)
    grid = gen.grid
    if gen.rows != gen.cols:
        raise InvalidArgumentError('Generator must be square, got %r' % (gen.shape,))
    if method not in METHODS:
        raise InvalidArgumentError('Unknown method %r; expected one of %s' % (method, METHODS))

    exact_applies = gen.is_constant and gen.is_diagonal
    if method == 'exact' and not exact_applies:
        raise InvalidArgumentError('The exact method needs a constant diagonal generator.')
    if method == 'auto':
        method = 'exact' if exact_applies else 'rk4'

    if method == 'exact':
        blocks = _exact_diagonal_blocks(gen)
    else:
        steps = _rk4_step_matrices(gen)
        size, n = len(grid), gen.rows
        blocks = np.empty((size * (size + 1) // 2, n, n))
        chunks = _column_chunks(size, max(1, 2 * worker_count()))
        parallel_map(lambda bounds: _fill_columns(steps, blocks, bounds[0], bounds[1]), chunks)

    if not np.all(np.isfinite(blocks)):
        raise IntegrationError('Evolution family diverged (non-finite transition blocks).')
    logger.debug('Propagated %dx%d generator over %d nodes with %s', gen.rows, gen.cols,
                 len(grid), method)
    return EvolutionFamily(grid, gen, blocks, method)


def open_loop_family(p, method='auto'):  # type: (ProblemData, str) -> EvolutionFamily
    return propagate(p.A, p.grid, method=method)


def adjoint_block(fam, t, s):  # type: (EvolutionFamily, float, float) -> np.ndarray
    """
    Φ(t, s)ᵀ for nodes s <= t. As a function of s this is the backward
    adjoint flow started from the identity at s = t.
    """
    i, j = fam.grid.index_of(t), fam.grid.index_of(s)
    if j > i:
        raise OutOfRangeError('adjoint_block needs s <= t, got s=%r > t=%r' % (s, t))
    return fam.block(i, j).T


def solve_forward(gen, y0, forcing=None, forcing_mid=None):
    # type: (OperatorPath, Any, Optional[np.ndarray], Optional[np.ndarray]) -> Trajectory
    """
    Integrates dy/dt + G(t) y = f(t) from y(t0) = y0 with RK4. ``forcing``
    holds f at the nodes and ``forcing_mid`` at interval midpoints (it
    defaults to the average of the neighbouring node values).
    """
    grid = gen.grid
    n = gen.rows
    y0 = np.asarray(y0, dtype=float).reshape(n)
    size = len(grid)
    if forcing is None:
        forcing = np.zeros((size, n))
    if forcing_mid is None:
        forcing_mid = (forcing[1:] + forcing[:-1]) / 2.0
    states = np.empty((size, n))
    states[0] = y0
    G, Gm = gen.values, gen.midpoint_values
    for k in range(size - 1):
        h, y = grid.steps[k], states[k]
        k1 = -G[k].dot(y) + forcing[k]
        k2 = -Gm[k].dot(y + h / 2.0 * k1) + forcing_mid[k]
        k3 = -Gm[k].dot(y + h / 2.0 * k2) + forcing_mid[k]
        k4 = -G[k + 1].dot(y + h * k3) + forcing[k + 1]
        states[k + 1] = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(states)):
        raise IntegrationError('Forward integration diverged.')
    return Trajectory(grid, states)
