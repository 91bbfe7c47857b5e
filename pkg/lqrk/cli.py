# -*- coding: utf-8 -*-
"""
Batch front end.

    lqrk run SCENARIO.json [--out-dir DIR] [--steps N] [--seed S] [-v]
    lqrk verify [--seed S] [--steps N] [--size N] [--out-dir DIR] [-v]

A scenario is a JSON document:

    {
      "name": "scalar-riccati",                 optional, default: file stem
      "problem": {"builtin": "scalar-lq", "a": 0, "b": 1, "m": 1, "n": 1, "j0": 1},
      "grid": {"t0": 0, "T": 1, "steps": 200},  or {"nodes": [...]}
      "task": "riccati",
      "params": {...},                          task parameters
      "seed": 0,
      "tolerances": {"mayer": 1e-10, ...},
      "output": {"dir": "out"}
    }

Builtin problems are ``scalar-lq`` (keys a, b, m, n, j0), ``random``
(keys n, m, time_varying; the scenario seed is used) and ``heat-spectral``
(keys modes, domain_length, lambda). Instead of ``builtin`` a problem may
give ``matrices`` with A, B, M, N (one matrix, or one per node), J0 and nu.

Task parameters:

    riccati       check_invertibility (default true)
    kernel-gram   points (required), which ("K" or "K1", default "K")
    lqr-compare   y0 (required)
    mayer         c (required), Q (n×n list of rows, default identity),
                  newton (default true)
    interp        y0, points, targets (required), ridge (default 0)
    heat-check    s (default 0.3 T); needs the heat-spectral problem
    verify        size (default 4)

Flags such as newton and check_invertibility must be JSON booleans.

Each run writes NAME.json (diagnostics, sorted keys, floats with 17
significant digits) and, for tasks that produce a trajectory, NAME.csv
with columns t, y_1..y_n, u_1..u_m.

Exit status: 0 success, 1 invalid configuration, 2 numerical failure,
3 an invariant exceeded its tolerance.
"""
import argparse
import csv
import json
import logging
import math
import os
import sys
from collections import OrderedDict
from typing import Any  # noqa
from typing import Dict  # noqa
from typing import List  # noqa
from typing import Optional  # noqa
from typing import Sequence  # noqa
from typing import Tuple  # noqa

import numpy as np

from lqrk.core import (
    Check,
    ConfigError,
    DEFAULT_TOLERANCES,
    InvalidArgumentError,
    LqrkError,
    OperatorPath,
    ProblemData,
    TimeGrid,
    Tolerances,
    VerificationError,
    make_uniform_grid,
)
from lqrk.evolution import closed_loop_generator, open_loop_family, propagate
from lqrk.heat import SpectralHeatModel, check_K1_identity, discretize_heat, mode_kernel_analytic
from lqrk.kernel import (
    RkhsElement,  # noqa
    adjoint_asymmetry,
    build_kernel_table,
    kernel_summary,
)
from lqrk.problems import random_problem, scalar_lq
from lqrk.riccati import optimal_lqr_classical, riccati_residual, solve_riccati
from lqrk.solvers import (
    MayerProblem,
    assemble_gram,
    quadratic_terminal_cost,
    solve_interpolation,
    solve_lqr_via_kernel,
    solve_mayer,
)
from lqrk.verify import at_least, at_most, run_suite


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VERIFICATION = 3

TASKS = ('riccati', 'kernel-gram', 'lqr-compare', 'mayer', 'interp', 'heat-check', 'verify')
BUILTINS = {
    'scalar-lq': {'a': 0.0, 'b': 1.0, 'm': 1.0, 'n': 1.0, 'j0': 1.0},
    'random': {'n': 4, 'm': 2, 'time_varying': False},
    'heat-spectral': {'modes': 5, 'domain_length': 2 * math.pi, 'lambda': 1.0},
}
TASK_PARAMS = {
    'riccati': (set(), {'check_invertibility': True}),
    'kernel-gram': ({'points'}, {'which': 'K'}),
    'lqr-compare': ({'y0'}, {}),
    'mayer': ({'c'}, {'Q': None, 'newton': True}),
    'interp': ({'y0', 'points', 'targets'}, {'ridge': 0.0}),
    'heat-check': (set(), {'s': None}),
    'verify': (set(), {'size': 4}),
}  # type: Dict[str, Tuple[set, Dict[str, Any]]]
TOP_LEVEL = {'name', 'problem', 'grid', 'task', 'params', 'seed', 'tolerances', 'output'}
DEFAULT_STEPS = 200


class Scenario(object):
    def __init__(self, name, problem, grid, task, params, seed=0,
                 tolerances=DEFAULT_TOLERANCES, output_dir='.'):
        # type: (str, Dict[str, Any], Dict[str, Any], str, Dict[str, Any], int, Tolerances, str) -> None
        self.name = name
        self.problem = problem
        self.grid = grid
        self.task = task
        self.params = params
        self.seed = seed
        self.tolerances = tolerances
        self.output_dir = output_dir

    def __repr__(self):
        return 'Scenario(%r, task=%r)' % (self.name, self.task)

    def build_grid(self):  # type: () -> TimeGrid
        if 'nodes' in self.grid:
            try:
                return TimeGrid(self.grid['nodes'])
            except InvalidArgumentError as exc:
                raise ConfigError(str(exc), 'grid.nodes')
        try:
            return make_uniform_grid(self.grid['t0'], self.grid['T'], self.grid['steps'])
        except InvalidArgumentError as exc:
            raise ConfigError(str(exc), 'grid')

    def build_problem(self, grid):  # type: (TimeGrid) -> ProblemData
        spec = self.problem
        builtin = spec.get('builtin')
        if builtin == 'scalar-lq':
            p = scalar_lq(grid, spec['a'], spec['b'], spec['m'], spec['n'], spec['j0'])
        elif builtin == 'random':
            p = random_problem(self.seed, spec['n'], spec['m'], grid, spec['time_varying'])
        elif builtin == 'heat-spectral':
            p = discretize_heat(self.heat_model(grid))
        else:
            p = _explicit_problem(spec['matrices'], grid)
        return ProblemData(p.A, p.B, p.M, p.N, p.J0, p.nu, self.tolerances)

    def heat_model(self, grid):  # type: (TimeGrid) -> SpectralHeatModel
        spec = self.problem
        return SpectralHeatModel(spec['modes'], spec['domain_length'], spec['lambda'], grid)


def _explicit_problem(matrices, grid):  # type: (Dict[str, Any], TimeGrid) -> ProblemData
    def path(key):
        try:
            value = np.array(matrices[key], dtype=float)
            if value.ndim == 3:
                return OperatorPath(grid, value)
            return OperatorPath.constant(value, grid)
        except (InvalidArgumentError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc), 'problem.matrices.%s' % key)
    for key in ('A', 'B', 'M', 'N', 'J0', 'nu'):
        if key not in matrices:
            raise ConfigError('missing required key', 'problem.matrices.%s' % key)
    unknown = set(matrices) - {'A', 'B', 'M', 'N', 'J0', 'nu'}
    if unknown:
        raise ConfigError('unknown key(s) %s' % ', '.join(sorted(unknown)), 'problem.matrices')
    try:
        return ProblemData(path('A'), path('B'), path('M'), path('N'), matrices['J0'],
                           _number(matrices['nu'], 'problem.matrices.nu'))
    except (InvalidArgumentError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), 'problem.matrices')


def _expect(mapping, path):  # type: (Any, str) -> Dict[str, Any]
    if not isinstance(mapping, dict):
        raise ConfigError('expected an object', path)
    return mapping


def _reject_unknown(mapping, allowed, path):  # type: (Dict[str, Any], Any, str) -> None
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigError('unknown key(s) %s' % ', '.join('"%s"' % k for k in unknown), path)


def _number(value, path, integer=False):  # type: (Any, str, bool) -> Any
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError('expected a number, got %r' % (value,), path)
    if integer:
        if int(value) != value:
            raise ConfigError('expected an integer, got %r' % (value,), path)
        return int(value)
    return float(value)


def _square_matrix(value, path):  # type: (Any, str) -> List[List[float]]
    if not (isinstance(value, list) and value and all(
            isinstance(row, list) and len(row) == len(value) for row in value)):
        raise ConfigError('expected a square matrix as a list of rows', path)
    return [[_number(v, '%s[%d][%d]' % (path, i, j)) for j, v in enumerate(row)]
            for i, row in enumerate(value)]


def _parse_problem(raw):  # type: (Any) -> Dict[str, Any]
    raw = _expect(raw, 'problem')
    if ('builtin' in raw) == ('matrices' in raw):
        raise ConfigError('give exactly one of "builtin" or "matrices"', 'problem')
    if 'matrices' in raw:
        _reject_unknown(raw, {'matrices'}, 'problem')
        return {'matrices': _expect(raw['matrices'], 'problem.matrices')}
    builtin = raw['builtin']
    if builtin not in BUILTINS:
        raise ConfigError('unknown builtin %r; expected one of %s' % (builtin, ', '.join(sorted(BUILTINS))),
                          'problem.builtin')
    defaults = BUILTINS[builtin]
    _reject_unknown(raw, set(defaults) | {'builtin'}, 'problem')
    problem = dict(defaults)
    for key, value in raw.items():
        if key == 'builtin':
            continue
        path = 'problem.%s' % key
        if isinstance(defaults[key], bool):
            if not isinstance(value, bool):
                raise ConfigError('expected true or false', path)
            problem[key] = value
        else:
            problem[key] = _number(value, path, integer=isinstance(defaults[key], int))
    problem['builtin'] = builtin
    return problem


def _parse_grid(raw):  # type: (Any) -> Dict[str, Any]
    raw = _expect(raw, 'grid')
    if 'nodes' in raw:
        _reject_unknown(raw, {'nodes'}, 'grid')
        if not isinstance(raw['nodes'], list):
            raise ConfigError('expected a list of numbers', 'grid.nodes')
        return {'nodes': [_number(v, 'grid.nodes[%d]' % i) for i, v in enumerate(raw['nodes'])]}
    _reject_unknown(raw, {'t0', 'T', 'steps'}, 'grid')
    return {
        't0': _number(raw.get('t0', 0.0), 'grid.t0'),
        'T': _number(raw.get('T', 1.0), 'grid.T'),
        'steps': _number(raw.get('steps', DEFAULT_STEPS), 'grid.steps', integer=True),
    }


def _parse_params(task, raw):  # type: (str, Any) -> Dict[str, Any]
    raw = _expect(raw, 'params')
    required, defaults = TASK_PARAMS[task]
    _reject_unknown(raw, set(required) | set(defaults), 'params')
    missing = sorted(set(required) - set(raw))
    if missing:
        raise ConfigError('task %s needs %s' % (task, ', '.join(missing)), 'params.%s' % missing[0])
    params = dict(defaults)
    params.update(raw)
    for key in ('newton', 'check_invertibility'):
        if key in raw and not isinstance(raw[key], bool):
            raise ConfigError('expected true or false', 'params.%s' % key)
    if raw.get('Q') is not None:
        params['Q'] = _square_matrix(raw['Q'], 'params.Q')
    if task == 'kernel-gram' and params['which'] not in ('K', 'K1'):
        raise ConfigError('expected "K" or "K1"', 'params.which')
    if 'ridge' in raw:
        params['ridge'] = _number(raw['ridge'], 'params.ridge')
        if params['ridge'] < 0:
            raise ConfigError('must be nonnegative', 'params.ridge')
    for key in ('points', 'targets'):
        if key in required and not (isinstance(params[key], list) and params[key]):
            raise ConfigError('expected a non-empty list', 'params.%s' % key)
    if task == 'interp' and len(params['points']) != len(params['targets']):
        raise ConfigError('need one target per point', 'params.targets')
    if 'size' in raw:
        params['size'] = _number(raw['size'], 'params.size', integer=True)
    return params


def parse_config(text, name='scenario'):  # type: (str, str) -> Scenario
    """
    Parses a scenario document strictly: unknown keys are errors, and every
    error names the offending key path.
    """
    try:
        raw = json.loads(text)
    except ValueError as exc:
        raise ConfigError('invalid JSON: %s' % exc)
    raw = _expect(raw, '<root>')
    _reject_unknown(raw, TOP_LEVEL, '<root>')
    for key in ('problem', 'task'):
        if key not in raw:
            raise ConfigError('missing required key', key)
    task = raw['task']
    if task not in TASKS:
        raise ConfigError('unknown task %r; expected one of %s' % (task, ', '.join(TASKS)), 'task')

    tolerances = _expect(raw.get('tolerances', {}), 'tolerances')
    _reject_unknown(tolerances, Tolerances.DEFAULTS, 'tolerances')
    try:
        tolerances = DEFAULT_TOLERANCES.replace(**{
            k: _number(v, 'tolerances.%s' % k) for k, v in tolerances.items()})
    except InvalidArgumentError as exc:
        raise ConfigError(str(exc), 'tolerances')

    output = _expect(raw.get('output', {}), 'output')
    _reject_unknown(output, {'dir'}, 'output')
    problem = _parse_problem(raw['problem'])
    if task == 'heat-check' and problem.get('builtin') != 'heat-spectral':
        raise ConfigError('heat-check needs the heat-spectral problem', 'problem.builtin')
    scenario = Scenario(
        name=str(raw.get('name', name)),
        problem=problem,
        grid=_parse_grid(raw.get('grid', {})),
        task=task,
        params=_parse_params(task, raw.get('params', {})),
        seed=_number(raw.get('seed', 0), 'seed', integer=True),
        tolerances=tolerances,
        output_dir=str(output.get('dir', '.')),
    )
    logger.debug('Parsed %r', scenario)
    return scenario


def load_scenario(path):  # type: (str) -> Scenario
    try:
        with open(path) as f:
            text = f.read()
    except (IOError, OSError) as exc:
        raise ConfigError('cannot read scenario: %s' % exc, path)
    return parse_config(text, name=os.path.splitext(os.path.basename(path))[0])


def _vector(value, n, path):  # type: (Any, int, str) -> np.ndarray
    try:
        vector = np.array(value, dtype=float).reshape(n)
    except (TypeError, ValueError):
        raise ConfigError('expected %d numbers' % n, path)
    return vector


def _nodes(grid, points, path):  # type: (TimeGrid, Sequence[Any], str) -> List[float]
    nodes = []
    for i, t in enumerate(points):
        t = _number(t, '%s[%d]' % (path, i))
        try:
            nodes.append(float(grid.nodes[grid.index_of(t)]))
        except InvalidArgumentError:
            raise ConfigError('%r is not a grid node' % t, '%s[%d]' % (path, i))
    return nodes


class Outcome(object):
    """
    Diagnostics of one task, the checks it made and an optional trajectory.
    """

    def __init__(self, diagnostics, checks, element=None):
        # type: (Dict[str, Any], List[Check], Optional[RkhsElement]) -> None
        self.diagnostics = diagnostics
        self.checks = checks
        self.element = element

    @property
    def passed(self):  # type: () -> bool
        return all(c.passed for c in self.checks if c.severity == 'error')


def _setup(p, check_invertibility=True):
    P = solve_riccati(p, check_invertibility=check_invertibility)
    famAP = propagate(closed_loop_generator(p, P))
    return P, famAP, build_kernel_table(p, P, famAP)


def task_riccati(s, p):  # type: (Scenario, ProblemData) -> Outcome
    P = solve_riccati(p, check_invertibility=s.params['check_invertibility'])
    floor = min(float(np.linalg.eigvalsh(block)[0]) for block in P.P)
    diagnostics = {
        'P_t0': P[0].tolist(),
        'P_T': P[-1].tolist(),
        'condition_J0_P_t0': P.condition,
        'riccati_residual': riccati_residual(p, P),
        'P_min_eigenvalue': floor,
    }
    checks = [at_least('P_psd', floor, -p.tolerances.riccati_psd),
              at_most('P_symmetric', P.max_asymmetry, p.tolerances.symmetry)]
    return Outcome(diagnostics, checks)


def task_kernel_gram(s, p):  # type: (Scenario, ProblemData) -> Outcome
    _, _, kt = _setup(p)
    points = _nodes(p.grid, s.params['points'], 'params.points')
    gram = assemble_gram(kt, points, s.params['which'])
    eigenvalues = np.linalg.eigvalsh(gram)
    diagnostics = kernel_summary(kt)
    diagnostics.update({
        'points': points,
        'which': s.params['which'],
        'gram': gram.tolist(),
        'gram_eigenvalues': eigenvalues.tolist(),
    })
    checks = [at_least('gram_psd', eigenvalues[0], -1e-8),
              at_most('adjoint_asymmetry', adjoint_asymmetry(kt), 1e-8)]
    return Outcome(diagnostics, checks)


def task_lqr_compare(s, p):  # type: (Scenario, ProblemData) -> Outcome
    P, _, kt = _setup(p)
    y0 = _vector(s.params['y0'], p.n, 'params.y0')
    solution = solve_lqr_via_kernel(p, kt, open_loop_family(p), y0)
    _, _, classical_cost = optimal_lqr_classical(p, y0, P)
    diagnostics = {
        'gap': solution.residual,
        'kernel_cost': solution.objective,
        'classical_cost': classical_cost,
        'objective_convention': solution.convention,
        'condition_J0_P_t0': P.condition,
    }
    bound = 1e-3 * max(1.0, float(np.linalg.norm(y0)))
    return Outcome(diagnostics, [at_most('lqr_equivalence', solution.residual, bound)],
                   solution.element)


def task_mayer(s, p):  # type: (Scenario, ProblemData) -> Outcome
    _, _, kt = _setup(p)
    c = _vector(s.params['c'], p.n, 'params.c')
    Q = np.eye(p.n) if s.params['Q'] is None else np.array(s.params['Q'], dtype=float)
    if Q.shape != (p.n, p.n):
        raise ConfigError('expected a %dx%d matrix' % (p.n, p.n), 'params.Q')
    g = quadratic_terminal_cost(Q, c)
    if not s.params['newton']:
        g.hessian = None
    solution = solve_mayer(MayerProblem(p, g), kt)
    diagnostics = {
        'z': solution.coeffs[0].tolist(),
        'terminal_state': solution.trajectory[-1].tolist(),
        'objective': solution.objective,
        'objective_convention': solution.convention,
        'residual': solution.residual,
        'iterations': solution.iterations,
    }
    return Outcome(diagnostics, [at_most('stationarity', solution.residual, 1e-8)],
                   solution.element)


def task_interp(s, p):  # type: (Scenario, ProblemData) -> Outcome
    _, _, kt = _setup(p)
    y0 = _vector(s.params['y0'], p.n, 'params.y0')
    points = _nodes(p.grid, s.params['points'], 'params.points')
    targets = [_vector(r, p.n, 'params.targets[%d]' % i) for i, r in enumerate(s.params['targets'])]
    ridge = s.params['ridge']
    solution = solve_interpolation(p, kt, open_loop_family(p), y0, points, targets, ridge)
    diagnostics = {
        'points': points,
        'coeffs': [z.tolist() for z in solution.coeffs],
        'objective': solution.objective,
        'constraint_violation': solution.residual,
        'ridge': ridge,
    }
    checks = []
    if ridge == 0:
        checks.append(at_most('feasibility', solution.residual, 1e-8))
    return Outcome(diagnostics, checks, solution.element)


def task_heat_check(s, p):  # type: (Scenario, ProblemData) -> Outcome
    model = s.heat_model(p.grid)
    _, _, kt = _setup(p)
    grid = p.grid
    worst0, worst1 = 0.0, 0.0
    sample = range(0, len(grid), max(1, (len(grid) - 1) // 20))
    for i in sample:
        for j in sample:
            table0, table1 = kt.block(i, j, 'K0'), kt.block(i, j, 'K1')
            for index, k in enumerate(model.frequencies):
                K0, K1 = mode_kernel_analytic(model, k, grid.nodes[i], grid.nodes[j])
                worst0 = max(worst0, abs(table0[index, index] - K0))
                worst1 = max(worst1, abs(table1[index, index] - K1))
    s_value = s.params['s']
    if s_value is None:
        s_value = grid.t0 + 0.3 * grid.length
    report = check_K1_identity(model, _number(s_value, 'params.s'))
    diagnostics = {
        'rates': model.rates.tolist(),
        'kernel_method': kt.method,
        'K0_max_error': worst0,
        'K1_max_error': worst1,
        'identity': report.as_dict(),
    }
    checks = [at_most('K0_per_mode', worst0, 1e-8), at_most('K1_per_mode', worst1, 1e-6)]
    checks.extend(report.change_of_variables)
    return Outcome(diagnostics, checks)


def verify_outcome(seed, steps, size):  # type: (int, int, int) -> Outcome
    report = run_suite(seed=seed, steps=steps, size=size)
    checks = [c for block in report.blocks.values() for c in block]
    return Outcome(report.as_dict(), checks)


def task_verify(s, p):  # type: (Scenario, ProblemData) -> Outcome
    return verify_outcome(s.seed, len(p.grid) - 1, s.params['size'])


TASK_RUNNERS = {
    'riccati': task_riccati,
    'kernel-gram': task_kernel_gram,
    'lqr-compare': task_lqr_compare,
    'mayer': task_mayer,
    'interp': task_interp,
    'heat-check': task_heat_check,
    'verify': task_verify,
}


def format_float(value):  # type: (float) -> str
    if not math.isfinite(value):
        return 'null'
    return '%.17g' % value


def dumps_json(value, indent=0):  # type: (Any, int) -> str
    """
    JSON with sorted keys and every float at 17 significant digits, so that
    equal inputs give byte-identical documents.
    """
    pad, inner = '  ' * indent, '  ' * (indent + 1)
    if isinstance(value, dict):
        if not value:
            return '{}'
        items = ['%s%s: %s' % (inner, json.dumps(str(k)), dumps_json(value[k], indent + 1))
                 for k in sorted(value, key=str)]
        return '{\n%s\n%s}' % (',\n'.join(items), pad)
    if isinstance(value, (list, tuple)):
        if not value:
            return '[]'
        return '[%s]' % ', '.join(dumps_json(v, indent + 1) for v in value)
    if isinstance(value, np.ndarray):
        return dumps_json(value.tolist(), indent)
    if value is None or isinstance(value, (bool, np.bool_)):
        return json.dumps(None if value is None else bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    return json.dumps(str(value))


def write_trajectory_csv(path, element):  # type: (str, RkhsElement) -> None
    grid = element.grid
    y, u = element.trajectory.values, element.control.values
    header = (['t'] + ['y_%d' % (i + 1) for i in range(y.shape[1])] +
              ['u_%d' % (j + 1) for j in range(u.shape[1])])
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for k, t in enumerate(grid.nodes):
            writer.writerow([format_float(v) for v in np.concatenate([[t], y[k], u[k]])])


def write_outputs(s, outcome):  # type: (Scenario, Outcome) -> List[str]
    if not os.path.isdir(s.output_dir):
        os.makedirs(s.output_dir)
    document = OrderedDict([
        ('scenario', s.name),
        ('task', s.task),
        ('seed', s.seed),
        ('passed', outcome.passed),
        ('checks', [c.as_dict() for c in outcome.checks]),
        ('diagnostics', outcome.diagnostics),
    ])
    written = [os.path.join(s.output_dir, '%s.json' % s.name)]
    with open(written[0], 'w', newline='') as f:
        f.write(dumps_json(document) + '\n')
    if outcome.element is not None:
        written.append(os.path.join(s.output_dir, '%s.csv' % s.name))
        write_trajectory_csv(written[1], outcome.element)
    return written


def exit_code_for(exc):  # type: (BaseException) -> int
    if isinstance(exc, VerificationError):
        return EXIT_VERIFICATION
    if isinstance(exc, (ConfigError, InvalidArgumentError)):
        return EXIT_CONFIG
    # NumericalError, ValidationError, NotInSpaceError
    return EXIT_NUMERICAL


def run_scenario(s):  # type: (Scenario) -> int
    """
    Runs the scenario's task, writes its artifacts and returns the exit
    status.
    """
    try:
        grid = s.build_grid()
        p = s.build_problem(grid)
        outcome = TASK_RUNNERS[s.task](s, p)
    except LqrkError as exc:
        logger.error('%s: %s', s.name, exc)
        return exit_code_for(exc)
    written = write_outputs(s, outcome)
    logger.info('%s: wrote %s', s.name, ', '.join(written))
    if not outcome.passed:
        for check in outcome.checks:
            if check.severity == 'error' and not check.passed:
                logger.error('%s: %r', s.name, check)
        return EXIT_VERIFICATION
    return EXIT_OK


def _configure_logging(verbosity):  # type: (int) -> None
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')


def build_parser():  # type: () -> argparse.ArgumentParser
    parser = argparse.ArgumentParser(
        prog='lqrk', description='Reproducing-kernel solvers for linear-quadratic optimal control.')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='more logging (repeat for debug output)')
    commands = parser.add_subparsers(dest='command')

    run = commands.add_parser('run', help='run one scenario file')
    run.add_argument('config', help='scenario JSON file')
    run.add_argument('--out-dir', help='directory for the CSV and JSON outputs')
    run.add_argument('--steps', type=int, help='override the number of grid steps')
    run.add_argument('--seed', type=int, help='override the scenario seed')

    verify = commands.add_parser('verify', help='run the invariant suite')
    verify.add_argument('--seed', type=int, default=0)
    verify.add_argument('--steps', type=int, default=DEFAULT_STEPS)
    verify.add_argument('--size', type=int, default=4, help='state dimension of random problems')
    verify.add_argument('--out-dir', help='write verify.json here')
    return parser


def _run_command(args):  # type: (argparse.Namespace) -> int
    try:
        s = load_scenario(args.config)
    except ConfigError as exc:
        logger.error('%s', exc)
        return EXIT_CONFIG
    if args.out_dir is not None:
        s.output_dir = args.out_dir
    if args.seed is not None:
        s.seed = args.seed
    if args.steps is not None:
        if 'nodes' in s.grid:
            logger.error('--steps cannot override an explicit node list')
            return EXIT_CONFIG
        s.grid['steps'] = args.steps
    code = run_scenario(s)
    sys.stdout.write('%s: %s\n' % (s.name, 'ok' if code == EXIT_OK else 'exit %d' % code))
    return code


def _verify_command(args):  # type: (argparse.Namespace) -> int
    s = Scenario('verify', {}, {'steps': args.steps}, 'verify', {'size': args.size},
                 seed=args.seed, output_dir=args.out_dir or '.')
    try:
        outcome = verify_outcome(args.seed, args.steps, args.size)
    except LqrkError as exc:
        logger.error('verify: %s', exc)
        return exit_code_for(exc)
    report = outcome.diagnostics
    for name, block in report.items():
        sys.stdout.write('%-24s %s\n' % (name, block['status']))
    if args.out_dir is not None:
        write_outputs(s, outcome)
    return EXIT_OK if outcome.passed else EXIT_VERIFICATION


def main(argv=None):  # type: (Optional[Sequence[str]]) -> int
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    if args.command == 'run':
        return _run_command(args)
    if args.command == 'verify':
        return _verify_command(args)
    parser.print_help()
    return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
