# -*- coding: utf-8 -*-
"""
Builtin problem families: the scalar problem with closed-form Riccati
solution and seeded random problems.

Random problems use ``numpy.random.default_rng(seed)`` with

* A = Qᵀ diag(λ) Q, Q orthogonal (QR of a Gaussian matrix), λ uniform in
  [-0.5, 1.5];
* B with entries uniform in [-1, 1];
* M = CᵀC, C Gaussian scaled by 1/√n;
* N = I + DᵀD, D Gaussian scaled by 1/√m;
* J0 = I.

Time-varying problems add 0.3 sin(2πt/T) times a random skew-symmetric
matrix to A and scale B by 1 + 0.3 sin(2πt/T).
"""
import logging
from typing import Any  # noqa

import numpy as np

from lqrk.core import (
    InvalidArgumentError,
    OperatorPath,
    ProblemData,
    TimeGrid,  # noqa
)


logger = logging.getLogger(__name__)


def scalar_lq(grid, a=0.0, b=1.0, m=1.0, n=1.0, j0=1.0):
    # type: (TimeGrid, float, float, float, float, float) -> ProblemData
    """
    dy/dt + a y = b u with cost ∫ m y² + n u² dt and J0 = j0. With a = 0,
    b = m = n = 1 on [0, T] the Riccati solution is tanh(T - t).
    """
    return ProblemData(
        A=OperatorPath.constant([[a]], grid),
        B=OperatorPath.constant([[b]], grid),
        M=OperatorPath.constant([[m]], grid),
        N=OperatorPath.constant([[n]], grid),
        J0=[[j0]],
        nu=n,
    )


def random_problem(seed, n, m, grid, time_varying=False):
    # type: (int, int, int, TimeGrid, bool) -> ProblemData
    if n < 1 or m < 1:
        raise InvalidArgumentError('Need n, m >= 1, got n=%r, m=%r' % (n, m))
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = Q.T.dot(np.diag(rng.uniform(-0.5, 1.5, n))).dot(Q)
    B = rng.uniform(-1.0, 1.0, (n, m))
    C = rng.standard_normal((n, n)) / np.sqrt(n)
    D = rng.standard_normal((m, m)) / np.sqrt(m)
    M = C.T.dot(C)
    N = np.eye(m) + D.T.dot(D)
    nu = float(np.linalg.eigvalsh(N)[0])
    logger.debug('Random problem seed=%d n=%d m=%d, time_varying=%s', seed, n, m, time_varying)

    if not time_varying:
        return ProblemData(
            A=OperatorPath.constant(A, grid),
            B=OperatorPath.constant(B, grid),
            M=OperatorPath.constant(M, grid),
            N=OperatorPath.constant(N, grid),
            J0=np.eye(n),
            nu=nu,
        )

    skew = rng.standard_normal((n, n))
    skew = (skew - skew.T) / 2.0
    phase = 2 * np.pi * (grid.nodes - grid.t0) / grid.length
    A_values = [A + 0.3 * np.sin(w) * skew for w in phase]
    B_values = [(1.0 + 0.3 * np.sin(w)) * B for w in phase]
    return ProblemData(
        A=OperatorPath(grid, A_values),
        B=OperatorPath(grid, B_values),
        M=OperatorPath.constant(M, grid),
        N=OperatorPath.constant(N, grid),
        J0=np.eye(n),
        nu=nu,
    )
