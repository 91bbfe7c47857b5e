import json
import os

import numpy as np
import pytest

from lqrk.cli import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_VERIFICATION,
    dumps_json,
    exit_code_for,
    format_float,
    load_scenario,
    main,
    parse_config,
)
from lqrk.core import (
    ConfigError,
    InvalidArgumentError,
    InvertibilityError,
    NotInSpaceError,
    ValidationError,
    VerificationError,
)


SCENARIOS = os.path.join(os.path.dirname(__file__), '..', '..', 'scenarios')


def scenario(task, params=None, problem=None, **extra):
    document = {
        'problem': problem or {'builtin': 'scalar-lq'},
        'grid': {'t0': 0, 'T': 1, 'steps': 200},
        'task': task,
        'params': params or {},
    }
    document.update(extra)
    return document


def run(tmp_path, document, *args, name='case'):
    path = tmp_path / ('%s.json' % name)
    path.write_text(json.dumps(document))
    out = tmp_path / 'out'
    code = main(['run', str(path), '--out-dir', str(out)] + list(args))
    return code, out


def read_result(out, name='case'):
    return json.loads((out / ('%s.json' % name)).read_text())


def test_parse_defaults():
    s = parse_config(json.dumps({'problem': {'builtin': 'random'}, 'task': 'riccati'}), name='r')
    assert s.name == 'r'
    assert s.problem == {'builtin': 'random', 'n': 4, 'm': 2, 'time_varying': False}
    assert s.grid == {'t0': 0.0, 'T': 1.0, 'steps': 200}
    assert s.params == {'check_invertibility': True}
    assert s.seed == 0
    assert s.output_dir == '.'
    p = s.build_problem(s.build_grid())
    assert (p.n, p.m) == (4, 2)


def test_parse_tolerances_and_explicit_problem():
    s = parse_config(json.dumps({
        'problem': {'matrices': {'A': [[0.0]], 'B': [[1.0]], 'M': [[1.0]], 'N': [[1.0]],
                                 'J0': [[1.0]], 'nu': 1.0}},
        'grid': {'nodes': [0.0, 0.25, 0.5, 1.0]},
        'task': 'riccati',
        'tolerances': {'mayer': 1e-6},
    }))
    assert s.tolerances.mayer == 1e-6
    assert s.tolerances.symmetry == 1e-10
    p = s.build_problem(s.build_grid())
    assert len(p.grid) == 4
    assert p.tolerances.mayer == 1e-6


@pytest.mark.parametrize('document, path', [
    (scenario('riccati', foo=1), '<root>'),
    (scenario('riccati', problem={'builtin': 'scalar-lq', 'foo': 1}), 'problem'),
    (scenario('riccati', params={'foo': 1}), 'params'),
    (scenario('interp', {'y0': [0.0], 'points': [0.5]}), 'params.targets'),
    (scenario('interp', {'y0': [0.0], 'points': [0.5], 'targets': [[1.0], [2.0]]}), 'params.targets'),
    (scenario('kernel-gram', {'points': [0.5], 'which': 'K0'}), 'params.which'),
    (scenario('heat-check'), 'problem.builtin'),
    (scenario('simulate'), 'task'),
    (scenario('riccati', problem={'builtin': 'scalar-lq', 'a': 'fast'}), 'problem.a'),
    (scenario('riccati', grid={'steps': 2.5}), 'grid.steps'),
    (scenario('mayer', {'c': [1.0], 'Q': 'abc'}), 'params.Q'),
    (scenario('mayer', {'c': [1.0], 'Q': [[1.0, 0.0]]}), 'params.Q'),
    (scenario('mayer', {'c': [1.0], 'Q': [1.0]}), 'params.Q'),
    (scenario('mayer', {'c': [1.0], 'Q': [['abc']]}), 'params.Q[0][0]'),
    (scenario('mayer', {'c': [1.0], 'newton': 'no'}), 'params.newton'),
    (scenario('riccati', {'check_invertibility': 'no'}), 'params.check_invertibility'),
    (scenario('riccati', {'check_invertibility': 0}), 'params.check_invertibility'),
    ({'task': 'riccati'}, 'problem'),
])
def test_config_errors_name_the_key(document, path):
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(document))
    assert info.value.path == path
    assert str(info.value).startswith(path + ':')


def test_unknown_key_is_quoted():
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(scenario('riccati', foo=1)))
    assert '"foo"' in str(info.value)


def test_invalid_json():
    with pytest.raises(ConfigError):
        parse_config('{"task": ')
    with pytest.raises(ConfigError):
        parse_config('[]')


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(str(tmp_path / 'absent.json'))


def test_format_float():
    assert format_float(0.1) == '0.10000000000000001'
    assert format_float(2.0) == '2'
    assert format_float(float('nan')) == 'null'
    assert format_float(float('inf')) == 'null'


def test_dumps_json():
    text = dumps_json({'b': [np.float64(0.5), np.int64(3)], 'a': np.bool_(True), 'c': None})
    assert text == '{\n  "a": true,\n  "b": [0.5, 3],\n  "c": null\n}'
    assert json.loads(dumps_json({'x': np.array([[1.0, float('nan')]])})) == {'x': [[1.0, None]]}
    assert dumps_json({}) == '{}'
    assert dumps_json([]) == '[]'


@pytest.mark.parametrize('exc, code', [
    (ConfigError('bad', 'task'), EXIT_CONFIG),
    (InvalidArgumentError('bad'), EXIT_CONFIG),
    (InvertibilityError('singular'), EXIT_NUMERICAL),
    (ValidationError('asymmetric', None), EXIT_NUMERICAL),
    (NotInSpaceError('outside', 1.0), EXIT_NUMERICAL),
    (VerificationError('failed'), EXIT_VERIFICATION),
])
def test_exit_codes(exc, code):
    assert exit_code_for(exc) == code


def test_riccati_run(tmp_path, capsys):
    code, out = run(tmp_path, scenario('riccati'))
    assert code == EXIT_OK
    assert capsys.readouterr().out == 'case: ok\n'
    result = read_result(out)
    assert result['scenario'] == 'case'
    assert result['task'] == 'riccati'
    assert result['passed'] is True
    assert result['diagnostics']['P_t0'][0][0] == pytest.approx(np.tanh(1.0), abs=1e-5)
    assert result['diagnostics']['P_T'] == [[0.0]]
    assert not (out / 'case.csv').exists()


def test_lqr_compare_run(tmp_path):
    code, out = run(tmp_path, scenario('lqr-compare', {'y0': [1.0]}))
    assert code == EXIT_OK
    diagnostics = read_result(out)['diagnostics']
    assert diagnostics['gap'] <= 1e-3
    assert diagnostics['kernel_cost'] == pytest.approx(diagnostics['classical_cost'], abs=1e-3)

    with open(str(out / 'case.csv'), newline='') as f:
        lines = f.read().split('\n')
    assert lines[0] == 't,y_1,u_1'
    assert lines[-1] == ''
    assert len(lines) == 203
    assert all('\r' not in line for line in lines)
    first = [float(v) for v in lines[1].split(',')]
    last = [float(v) for v in lines[-2].split(',')]
    assert first[0] == 0.0
    assert first[1] == pytest.approx(1.0, abs=1e-3)
    assert last[0] == 1.0
    assert last[1] == pytest.approx(1.0 / np.cosh(1.0), abs=1e-3)


def test_steps_override(tmp_path):
    code, out = run(tmp_path, scenario('lqr-compare', {'y0': [1.0]}), '--steps', '50')
    assert code == EXIT_OK
    assert len((out / 'case.csv').read_text().splitlines()) == 52


def test_reruns_are_byte_identical(tmp_path):
    document = scenario('lqr-compare', {'y0': [1.0]})
    first = tmp_path / 'first'
    second = tmp_path / 'second'
    first.mkdir()
    second.mkdir()
    assert run(first, document)[0] == EXIT_OK
    assert run(second, document)[0] == EXIT_OK
    for name in ('case.json', 'case.csv'):
        assert (first / 'out' / name).read_bytes() == (second / 'out' / name).read_bytes()


def test_kernel_gram_run(tmp_path):
    problem = {'builtin': 'scalar-lq', 'm': 0}
    code, out = run(tmp_path, scenario('kernel-gram', {'points': [0.5, 1.0]}, problem))
    assert code == EXIT_OK
    diagnostics = read_result(out)['diagnostics']
    assert diagnostics['gram'] == pytest.approx(np.array([[1.5, 1.5], [1.5, 2.0]]))
    assert diagnostics['gram_eigenvalues'][0] == pytest.approx((3.5 - np.sqrt(9.25)) / 2)
    assert diagnostics['method'] == 'exact'


def test_kernel_gram_rejects_off_grid_points(tmp_path):
    code, _ = run(tmp_path, scenario('kernel-gram', {'points': [0.5, 0.5001]}))
    assert code == EXIT_CONFIG


def test_mayer_run(tmp_path):
    problem = {'builtin': 'scalar-lq', 'm': 0}
    code, out = run(tmp_path, scenario('mayer', {'c': [3.0], 'Q': [[1.0]]}, problem))
    assert code == EXIT_OK
    diagnostics = read_result(out)['diagnostics']
    assert diagnostics['z'][0] == pytest.approx(1.0, abs=1e-9)
    assert diagnostics['terminal_state'][0] == pytest.approx(2.0, abs=1e-9)
    assert diagnostics['objective'] == pytest.approx(1.5, abs=1e-8)
    assert (out / 'case.csv').exists()


def test_mayer_params_are_checked(tmp_path, caplog):
    problem = {'builtin': 'scalar-lq', 'm': 0}
    code, out = run(tmp_path, scenario('mayer', {'c': [3.0], 'Q': 'abc'}, problem))
    assert code == EXIT_CONFIG
    assert 'params.Q' in caplog.text
    assert not out.exists()
    code, _ = run(tmp_path, scenario('mayer', {'c': [3.0], 'Q': [[1.0, 0.0], [0.0, 1.0]]}, problem))
    assert code == EXIT_CONFIG
    code, out = run(tmp_path, scenario('mayer', {'c': [3.0], 'newton': False}, problem))
    assert code == EXIT_OK
    assert read_result(out)['diagnostics']['z'][0] == pytest.approx(1.0, abs=1e-8)


def test_boolean_params_are_kept():
    s = parse_config(json.dumps(scenario('riccati', {'check_invertibility': False})))
    assert s.params['check_invertibility'] is False
    s = parse_config(json.dumps(scenario('mayer', {'c': [1.0], 'Q': [[2]]})))
    assert s.params == {'c': [1.0], 'Q': [[2.0]], 'newton': True}


def test_interp_run(tmp_path):
    problem = {'builtin': 'scalar-lq', 'm': 0}
    params = {'y0': [0.0], 'points': [0.5, 1.0], 'targets': [[0.5], [0.0]]}
    code, out = run(tmp_path, scenario('interp', params, problem))
    assert code == EXIT_OK
    diagnostics = read_result(out)['diagnostics']
    assert np.concatenate(diagnostics['coeffs']) == pytest.approx([2.0, -1.0], abs=1e-9)
    assert diagnostics['objective'] == pytest.approx(1.0)


def test_heat_check_run(tmp_path):
    document = scenario('heat-check', problem={'builtin': 'heat-spectral'}, grid={'steps': 20})
    code, out = run(tmp_path, document)
    assert code == EXIT_OK
    result = read_result(out)
    assert result['diagnostics']['rates'] == pytest.approx([0.0, 1.0, 1.0, 4.0, 4.0])
    assert result['diagnostics']['identity']['printed_identity_holds'] is False
    assert result['passed'] is True


def test_missing_params_exit_with_config_status(tmp_path):
    code, out = run(tmp_path, scenario('interp', {'y0': [0.0], 'points': [0.5]}))
    assert code == EXIT_CONFIG
    assert not out.exists()


def test_unknown_key_exits_with_config_status(tmp_path, caplog):
    code, _ = run(tmp_path, scenario('riccati', foo=1))
    assert code == EXIT_CONFIG
    assert '"foo"' in caplog.text


def test_singular_initial_factor_exits_with_numerical_status(tmp_path, capsys):
    problem = {'builtin': 'scalar-lq', 'm': 0, 'j0': 0}
    code, _ = run(tmp_path, scenario('riccati', problem=problem))
    assert code == EXIT_NUMERICAL
    assert capsys.readouterr().out == 'case: exit 2\n'


def test_no_command():
    assert main([]) == EXIT_CONFIG


@pytest.mark.parametrize('name', sorted(
    os.path.splitext(f)[0] for f in os.listdir(SCENARIOS) if f.endswith('.json')))
def test_shipped_scenarios(tmp_path, name):
    code = main(['run', os.path.join(SCENARIOS, name + '.json'), '--out-dir', str(tmp_path)])
    assert code == EXIT_OK
    assert read_result(tmp_path, name)['passed'] is True
