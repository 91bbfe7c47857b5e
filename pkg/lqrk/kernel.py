# -*- coding: utf-8 -*-
"""
The reproducing kernel of the LQ problem,

    K(s, t) = Φ(s, t0) (J0 + P(t0))⁻¹ Φ(t, t0)ᵀ
              + ∫_{t0}^{min(s,t)} Φ(s, τ) B N⁻¹ Bᵀ(τ) Φ(t, τ)ᵀ dτ
            = K⁰(s, t) + K¹(s, t),

with Φ the closed-loop evolution family, tabulated at all pairs of grid
nodes. The Hilbert space it reproduces is the space of controlled
trajectories with norm

    ‖y‖² = <y(t0), J0 y(t0)> + ∫ <M y, y> + <N u, u> dt,

u being the minimal-norm control that generates y.

Elements are stored as node samples of the trajectory and of its control.
Controls of kernel sections jump at s = t; their node value there is the
interval-weighted average of both one-sided limits (see
``TimeGrid.jump_fraction``), so that trapezoidal inner products stay second
order.
"""
import logging
from typing import Any  # noqa
from typing import Dict  # noqa
from typing import List  # noqa
from typing import Optional  # noqa
from typing import Sequence  # noqa
from typing import Tuple  # noqa

import numpy as np
import scipy.linalg

from lqrk.core import (
    ControlPath,
    InvalidArgumentError,
    NotInSpaceError,
    ProblemData,  # noqa
    TimeGrid,  # noqa
    Trajectory,
    check_same_grid,
    parallel_map,
    trapezoid,
)
from lqrk.evolution import EvolutionFamily  # noqa
from lqrk.riccati import PiSolution, RiccatiSolution, check_invertible, simulate  # noqa


logger = logging.getLogger(__name__)

KERNEL_PARTS = ('K', 'K0', 'K1')
TABLE_METHODS = ('auto', 'quadrature', 'exact')


class RkhsElement(object):
    """
    A controlled trajectory together with its (canonical) control.
    """

    def __init__(self, trajectory, control):  # type: (Trajectory, ControlPath) -> None
        check_same_grid(trajectory.grid, control.grid)
        self.trajectory = trajectory
        self.control = control

    @property
    def grid(self):  # type: () -> TimeGrid
        return self.trajectory.grid

    @property
    def initial(self):  # type: () -> np.ndarray
        return self.trajectory[0]

    def __add__(self, other):
        return RkhsElement(self.trajectory + other.trajectory, self.control + other.control)

    def __sub__(self, other):
        return RkhsElement(self.trajectory - other.trajectory, self.control - other.control)

    def __mul__(self, scalar):
        return RkhsElement(self.trajectory * scalar, self.control * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return 'RkhsElement(n=%d, m=%d on %r)' % (
            self.trajectory.dim, self.control.dim, self.grid)

    @classmethod
    def zeros(cls, grid, n, m):  # type: (TimeGrid, int, int) -> RkhsElement
        return cls(Trajectory.zeros(grid, n), ControlPath.zeros(grid, m))


class KernelTable(object):
    """
    K⁰ and K¹ on every node pair, kept in factored form:

        K⁰(tᵢ, tⱼ) = Φ(tᵢ, t0) F Φ(tⱼ, t0)ᵀ,    F = (J0 + P(t0))⁻¹,
        K¹(tᵢ, tⱼ) = Φ(tᵢ, tⱼ) D(tⱼ)  for i >= j,  D(tⱼ) = K¹(tⱼ, tⱼ),

    with K¹(tᵢ, tⱼ) = K¹(tⱼ, tᵢ)ᵀ above the diagonal. Blocks, columns and
    rows are formed on demand from the packed closed-loop family, so the
    table costs O(nodes n²) beyond the family. ``dense`` materializes a
    whole part for small grids.

    The table keeps the problem and Riccati solution it was built from,
    since kernel sections need them for their controls.
    """

    def __init__(self, problem, riccati, family, diagonal, invJ0P0, method):
        # type: (ProblemData, RiccatiSolution, EvolutionFamily, np.ndarray, np.ndarray, str) -> None
        self.problem = problem
        self.riccati = riccati
        self.family = family
        self.start = family.from_start()
        self.weighted_start = np.matmul(self.start, invJ0P0)
        self.diagonal = diagonal
        self.invJ0P0 = invJ0P0
        self.method = method
        for array in (self.start, self.weighted_start, diagonal, invJ0P0):
            array.flags.writeable = False

    @property
    def grid(self):  # type: () -> TimeGrid
        return self.problem.grid

    @property
    def n(self):  # type: () -> int
        return self.problem.n

    def _check_part(self, which):  # type: (str) -> None
        if which not in KERNEL_PARTS:
            raise InvalidArgumentError('Unknown kernel %r; expected one of %s' % (which, KERNEL_PARTS))

    def block(self, i, j, which='K'):  # type: (int, int, str) -> np.ndarray
        self._check_part(which)
        block = np.zeros((self.n, self.n))
        if which != 'K1':
            block += self.weighted_start[i].dot(self.start[j].T)
        if which != 'K0':
            if i >= j:
                block += self.family.block(i, j).dot(self.diagonal[j])
            else:
                block += self.diagonal[i].dot(self.family.block(j, i).T)
        return block

    def column(self, j, which='K'):  # type: (int, str) -> np.ndarray
        """
        K(tᵢ, tⱼ) for all i, shape (nodes, n, n).
        """
        self._check_part(which)
        column = np.zeros((len(self.grid), self.n, self.n))
        if which != 'K1':
            column += np.matmul(self.weighted_start, self.start[j].T)
        if which != 'K0':
            column[j:] += np.matmul(self.family.column(j), self.diagonal[j])
            column[:j] += np.matmul(self.diagonal[:j], np.swapaxes(self.family.row(j)[:j], 1, 2))
        return column

    def row(self, i, which='K'):  # type: (int, str) -> np.ndarray
        """
        K(tᵢ, tⱼ) for all j, shape (nodes, n, n).
        """
        self._check_part(which)
        row = np.zeros((len(self.grid), self.n, self.n))
        if which != 'K1':
            row += np.matmul(self.weighted_start[i], np.swapaxes(self.start, 1, 2))
        if which != 'K0':
            row[:i + 1] += np.matmul(self.family.row(i), self.diagonal[:i + 1])
            row[i + 1:] += np.matmul(self.diagonal[i], np.swapaxes(self.family.column(i)[1:], 1, 2))
        return row

    def apply(self, vectors, which='K'):  # type: (Any, str) -> np.ndarray
        """
        Σⱼ K(tᵢ, tⱼ) vⱼ for every node i, given one vector per node.
        """
        self._check_part(which)
        vectors = np.asarray(vectors, dtype=float).reshape(len(self.grid), self.n)
        result = np.zeros_like(vectors)
        if which != 'K1':
            pulled = np.einsum('jba,jb->a', self.start, vectors)
            result += np.einsum('iab,b->ia', self.weighted_start, pulled)
        if which != 'K0':
            driven = np.einsum('jab,jb->ja', self.diagonal, vectors)
            for i in range(len(self.grid)):
                result[i] += np.einsum('jab,jb->a', self.family.row(i), driven[:i + 1])
                if i + 1 < len(self.grid):
                    pulled = np.einsum('jba,jb->a', self.family.column(i)[1:], vectors[i + 1:])
                    result[i] += self.diagonal[i].dot(pulled)
        return result

    def dense(self, which='K'):  # type: (str) -> np.ndarray
        """
        The whole part as an array indexed [i, j]; O(nodes² n²) memory.
        """
        return np.stack([self.column(j, which) for j in range(len(self.grid))], axis=1)

    def __repr__(self):
        return 'KernelTable(n=%d, %s, %r)' % (self.n, self.method, self.grid)


def _quadrature_gramian(family, weight, grid, j):
    # type: (EvolutionFamily, np.ndarray, TimeGrid, int) -> np.ndarray
    """
    K¹(tⱼ, tⱼ) = Σₖ wₖ Φ(tⱼ, tₖ) Sₖ Φ(tⱼ, tₖ)ᵀ with the trapezoidal weights
    of [t0, tⱼ].
    """
    if j == 0:
        return np.zeros(weight.shape[1:])
    weights = grid.truncated_weights(0, j)[:j + 1]
    row = family.row(j)
    left = np.matmul(row, weight[:j + 1]) * weights[:, None, None]
    return np.tensordot(left, row, axes=([0, 2], [0, 2]))


def _exact_gramians(family, weight, grid):
    # type: (EvolutionFamily, np.ndarray, TimeGrid) -> np.ndarray
    """
    Closed form of the diagonal blocks when the generator is diag(d) and
    S = B N⁻¹ Bᵀ is constant: S_pq (1 - exp(-(d_p + d_q) τ)) / (d_p + d_q).
    """
    rates = np.diag(family.generator[0])
    total = rates[:, None] + rates[None, :]
    elapsed = grid.nodes - grid.t0
    exponent = np.multiply.outer(elapsed, total)
    with np.errstate(divide='ignore', invalid='ignore'):
        factor = np.where(total == 0, elapsed[:, None, None],
                          -np.expm1(-exponent) / np.where(total == 0, 1.0, total))
    return factor * weight[0]


def build_kernel_table(p, P, famAP, method='auto'):
    # type: (ProblemData, RiccatiSolution, EvolutionFamily, str) -> KernelTable
    """
    Builds the factored table: (J0 + P(t0))⁻¹ and the diagonal blocks
    K¹(tⱼ, tⱼ).

    Off-diagonal K¹ blocks Φ(tᵢ, tⱼ) K¹(tⱼ, tⱼ) equal the truncated-trapezoid
    quadrature term by term because the discrete family composes exactly.
    With method 'exact' (chosen by 'auto' when the family was propagated
    exactly and B N⁻¹ Bᵀ is constant) the diagonal blocks are integrated in
    closed form instead of by quadrature.
    """
    check_same_grid(p.grid, P.grid, famAP.grid)
    if method not in TABLE_METHODS:
        raise InvalidArgumentError('Unknown method %r; expected one of %s' % (method, TABLE_METHODS))
    grid = p.grid
    size = len(grid)
    weight = p.control_weight
    exact_applies = famAP.method == 'exact' and bool(np.all(weight == weight[0]))
    if method == 'exact' and not exact_applies:
        raise InvalidArgumentError(
            'The exact method needs an exactly propagated family and constant B N⁻¹ Bᵀ.')
    if method == 'auto':
        method = 'exact' if exact_applies else 'quadrature'

    if P.initial_factor is not None:
        factor = P.initial_factor
    else:
        factor, _ = check_invertible(p.J0 + P[0], p.tolerances.invertibility, 'J0 + P(t0)')
    factor = (factor + factor.T) / 2.0

    if method == 'exact':
        diagonal = _exact_gramians(famAP, weight, grid)
    else:
        diagonal = np.array(parallel_map(
            lambda j: _quadrature_gramian(famAP, weight, grid, j), list(range(size))))
    diagonal = (diagonal + np.swapaxes(diagonal, 1, 2)) / 2.0
    logger.debug('Kernel table on %d nodes (n=%d) built with %s diagonal', size, p.n, method)
    return KernelTable(p, P, famAP, diagonal, np.array(factor), method)


def kernel_at(kt, s, t, which='K'):  # type: (KernelTable, float, float, str) -> np.ndarray
    """
    Bilinear interpolation of the tabulated blocks; exact at node pairs,
    approximate elsewhere.
    """
    i, a = kt.grid.bracket(s)
    j, b = kt.grid.bracket(t)
    block = kt.block
    return ((1 - a) * (1 - b) * block(i, j, which) + a * (1 - b) * block(i + 1, j, which) +
            (1 - a) * b * block(i, j + 1, which) + a * b * block(i + 1, j + 1, which))


def _section_control(p, P, famAP, j, z, trajectory, indicator):
    # type: (ProblemData, RiccatiSolution, EvolutionFamily, int, np.ndarray, np.ndarray, bool) -> ControlPath
    """
    u(s) = N⁻¹Bᵀ(s) [Φ(tⱼ, s)ᵀ z 1{s < tⱼ} - P(s) y(s)] at every node.
    """
    drive = -np.einsum('kab,kb->ka', P.P, trajectory)
    if indicator and j > 0:
        backward = np.einsum('kba,b->ka', famAP.row(j), z)
        drive[:j + 1] += backward * p.grid.indicator_before(j)[:j + 1, None]
    return ControlPath(p.grid, np.einsum('kab,kb->ka', p.gain_factor, drive))


def control_kernel(p, P, famAP, t, z, kt=None, which='K'):
    # type: (ProblemData, RiccatiSolution, EvolutionFamily, float, Any, Optional[KernelTable], str) -> ControlPath
    """
    The control U(·, t) z of the kernel section K(·, t) z. Without a table,
    one is built from (p, P, famAP).
    """
    if kt is None:
        kt = build_kernel_table(p, P, famAP)
    check_same_grid(p.grid, P.grid, famAP.grid, kt.grid)
    j = p.grid.index_of(t)
    z = np.asarray(z, dtype=float).reshape(p.n)
    trajectory = np.einsum('kab,b->ka', kt.column(j, which), z)
    return _section_control(p, P, famAP, j, z, trajectory, indicator=(which != 'K0'))


def kernel_apply(kt, t, z, which='K'):
    # type: (KernelTable, float, Any, str) -> RkhsElement
    """
    The element s -> K(s, t) z (or its K⁰ / K¹ part) with its control.
    """
    j = kt.grid.index_of(t)
    z = np.asarray(z, dtype=float).reshape(kt.n)
    trajectory = np.einsum('kab,b->ka', kt.column(j, which), z)
    control = _section_control(kt.problem, kt.riccati, kt.family, j, z, trajectory,
                               indicator=(which != 'K0'))
    return RkhsElement(Trajectory(kt.grid, trajectory), control)


def kernel_combination(kt, points, coeffs, which='K'):
    # type: (KernelTable, Sequence[float], Sequence[Any], str) -> RkhsElement
    """
    Σₙ K(·, tₙ) zₙ with control Σₙ U(·, tₙ) zₙ.
    """
    if len(points) != len(coeffs):
        raise InvalidArgumentError('Need one coefficient per point.')
    total = RkhsElement.zeros(kt.grid, kt.n, kt.problem.m)
    for t, z in zip(points, coeffs):
        total = total + kernel_apply(kt, t, z, which)
    return total


def _minimal_norm_controls(p, targets):
    # type: (ProblemData, np.ndarray) -> Tuple[np.ndarray, np.ndarray]
    """
    u = N⁻¹Bᵀ (B N⁻¹ Bᵀ)⁺ r at every node, and the residual B u - r.
    """
    controls = np.empty((len(p.grid), p.m))
    for k in range(len(p.grid)):
        controls[k] = p.gain_factor[k].dot(scipy.linalg.pinvh(p.control_weight[k]).dot(targets[k]))
    residual = np.einsum('kij,kj->ki', p.B.values, controls) - targets
    return controls, residual


def canonical_control(p, y):  # type: (ProblemData, Trajectory) -> ControlPath
    """
    The minimal N-norm control with B u = dy/dt + A y, dy/dt from centered
    differences (second-order one-sided at the ends). Raises NotInSpaceError
    when no control reproduces the trajectory.
    """
    check_same_grid(p.grid, y.grid)
    edge_order = 2 if len(p.grid) > 2 else 1
    derivative = np.gradient(y.values, p.grid.nodes, axis=0, edge_order=edge_order)
    targets = derivative + np.einsum('kij,kj->ki', p.A.values, y.values)
    controls, residual = _minimal_norm_controls(p, targets)
    worst = float(np.max(np.linalg.norm(residual, axis=1)))
    bound = p.tolerances.admissibility * (1.0 + y.sup_norm())
    if worst > bound:
        raise NotInSpaceError(
            'Trajectory is not generated by any control (residual %.3g > %.3g)' % (worst, bound),
            residual=worst)
    return ControlPath(p.grid, controls)


def element_from_control(p, y0, controls):
    # type: (ProblemData, Any, ControlPath) -> RkhsElement
    """
    The trajectory driven by ``controls`` from ``y0``, stored with the
    minimal-norm control that has the same effect B u.
    """
    trajectory = simulate(p, y0, controls)
    effect = np.einsum('kij,kj->ki', p.B.values, controls.values)
    canonical, _ = _minimal_norm_controls(p, effect)
    return RkhsElement(trajectory, ControlPath(p.grid, canonical))


def rkhs_inner(p, e1, e2):  # type: (ProblemData, RkhsElement, RkhsElement) -> float
    """
    <y₁(t0), J0 y₂(t0)> + ∫ <M y₁, y₂> + <N u₁, u₂> dt.
    """
    check_same_grid(p.grid, e1.grid, e2.grid)
    y1, y2 = e1.trajectory.values, e2.trajectory.values
    u1, u2 = e1.control.values, e2.control.values
    running = (np.einsum('ki,kij,kj->k', y1, p.M.values, y2) +
               np.einsum('ki,kij,kj->k', u1, p.N.values, u2))
    return float(y1[0].dot(p.J0).dot(y2[0]) + trapezoid(p.grid, running))


def rkhs_norm(p, e):  # type: (ProblemData, RkhsElement) -> float
    return float(np.sqrt(max(rkhs_inner(p, e, e), 0.0)))


def check_reproducing(p, kt, e, t, z, which='K'):
    # type: (ProblemData, KernelTable, RkhsElement, float, Any, str) -> float
    """
    Relative gap in <y(t), z> = <y, K(·, t) z>. With which='K1' the element
    should start from zero.
    """
    z = np.asarray(z, dtype=float).reshape(p.n)
    i = p.grid.index_of(t)
    pointwise = float(e.trajectory[i].dot(z))
    reproduced = rkhs_inner(p, e, kernel_apply(kt, t, z, which))
    scale = max(1.0, float(np.linalg.norm(z)) * e.trajectory.sup_norm())
    return abs(pointwise - reproduced) / scale


def project_onto_HK1(kt, t, z):  # type: (KernelTable, float, Any) -> RkhsElement
    """
    The projection of K(·, t) z onto the zero-initial-condition subspace,
    which is K¹(·, t) z.
    """
    return kernel_apply(kt, t, z, which='K1')


def project_onto_K0_section(kt, t, z):  # type: (KernelTable, float, Any) -> RkhsElement
    """
    K⁰(·, t) z with its closed-loop control -N⁻¹Bᵀ P y. Unlike the 𝓗_K⁰
    projection this is not a free trajectory unless B N⁻¹ Bᵀ P vanishes.
    """
    return kernel_apply(kt, t, z, which='K0')


def project_onto_HK0(p, pi, famA, t, z):
    # type: (ProblemData, PiSolution, EvolutionFamily, float, Any) -> RkhsElement
    """
    The projection of K(·, t) z onto the uncontrolled trajectories:
    s -> Φ_A(s, t0) (J0 + π(t0))⁻¹ Φ_A(t, t0)ᵀ z, with zero control.
    """
    check_same_grid(p.grid, pi.grid, famA.grid)
    z = np.asarray(z, dtype=float).reshape(p.n)
    factor, _ = check_invertible(p.J0 + pi[0], p.tolerances.invertibility, 'J0 + pi(t0)')
    start = famA.from_start()
    initial = factor.dot(start[p.grid.index_of(t)].T.dot(z))
    trajectory = Trajectory(p.grid, np.einsum('kab,b->ka', start, initial))
    return RkhsElement(trajectory, ControlPath.zeros(p.grid, p.m))


def free_element(p, famA, y0):  # type: (ProblemData, EvolutionFamily, Any) -> RkhsElement
    """
    The uncontrolled trajectory s -> Φ_A(s, t0) y0.
    """
    check_same_grid(p.grid, famA.grid)
    y0 = np.asarray(y0, dtype=float).reshape(p.n)
    trajectory = Trajectory(p.grid, np.einsum('kab,b->ka', famA.from_start(), y0))
    return RkhsElement(trajectory, ControlPath.zeros(p.grid, p.m))


def split_element(p, famA, e):
    # type: (ProblemData, EvolutionFamily, RkhsElement) -> Tuple[RkhsElement, RkhsElement]
    """
    Splits e into its uncontrolled part (started from e's initial state)
    and the zero-initial-condition remainder carrying all of e's control.
    """
    free = free_element(p, famA, e.initial)
    return free, e - free


def gram_min_eigenvalue(kt, points, which='K'):
    # type: (KernelTable, Sequence[float], str) -> float
    indices = [kt.grid.index_of(t) for t in points]
    gram = np.block([[kt.block(a, b, which) for b in indices] for a in indices])
    return float(scipy.linalg.eigvalsh((gram + gram.T) / 2.0)[0])


def adjoint_asymmetry(kt, which='K'):  # type: (KernelTable, str) -> float
    """
    max over node pairs of ‖K(s, t) - K(t, s)ᵀ‖_F, comparing each row of
    the table with the transposed column.
    """
    worst = 0.0
    for i in range(len(kt.grid)):
        gap = kt.row(i, which) - np.swapaxes(kt.column(i, which), 1, 2)
        worst = max(worst, float(np.max(np.sqrt(np.sum(gap ** 2, axis=(1, 2))))))
    return worst


def kernel_summary(kt):  # type: (KernelTable) -> Dict[str, Any]
    return {
        'nodes': len(kt.grid),
        'n': kt.n,
        'method': kt.method,
        'adjoint_asymmetry': adjoint_asymmetry(kt),
        'K_t0_t0': kt.block(0, 0).tolist(),
        'invJ0P0': kt.invJ0P0.tolist(),
    }
