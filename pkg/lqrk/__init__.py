from typing import Optional  # noqa

from .core import DEFAULT_TOLERANCES, LqrkError, ProblemData, TimeGrid, Tolerances  # noqa
from .core import make_grid, make_uniform_grid  # noqa
from .evolution import closed_loop_generator, open_loop_family, propagate  # noqa
from .kernel import KernelTable, RkhsElement, build_kernel_table  # noqa
from .problems import random_problem, scalar_lq  # noqa
from .riccati import RiccatiSolution, solve_riccati  # noqa


def build_kernel(problem, method='auto'):  # type: (ProblemData, str) -> KernelTable
    """
    Riccati solution, closed-loop family and kernel table in one call.
    """
    P = solve_riccati(problem)
    family = propagate(closed_loop_generator(problem, P))
    return build_kernel_table(problem, P, family, method=method)
