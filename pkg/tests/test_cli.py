import json

import pytest

from nonnoether import create_app, run
from nonnoether.extensions import sampler

FAST = ['--time', '1', '--steps', '0.01']


def invoke(runner, *args):
    return runner.invoke(args=list(args))


@pytest.mark.parametrize('name', ['free_dilation', 'two_dof_momenta', 'poisson_canonical',
                                  'relativistic_particle', 'harmonic_oscillator', 'anharmonic_oscillator'])
def test_check_passes(app, runner, name):
    result = invoke(runner, 'check', name)
    assert result.exit_code == 0, result.output
    assert result.output.startswith(f'check {name} (seed 0): ok')


@pytest.mark.parametrize('name, reason', [
    ('non_symmetry', 'generator is not a symmetry'),
    ('non_jacobi', 'bivector violates the Jacobi identity'),
])
def test_failed_checks_exit_with_two(app, runner, name, reason):
    result = invoke(runner, 'check', name)
    assert result.exit_code == 2
    assert reason in result.output


def test_usage_and_config_errors_exit_with_one(app, runner, tmp_path):
    assert invoke(runner, 'check', 'no_such_system').exit_code == 1
    assert invoke(runner, 'check', 'free_dilation', '--seed', 'abc').exit_code == 1
    assert invoke(runner, 'frobnicate').exit_code == 1
    broken = tmp_path / 'broken.json'
    broken.write_text('{"coordinates": ["q", "p"], "hamiltonian": "p +* q"}', encoding='utf-8')
    result = invoke(runner, 'check', str(broken))
    assert result.exit_code == 1
    assert 'error:' in result.output


def test_invariants_command(app, runner, tmp_path):
    out = tmp_path / 'inv.json'
    result = invoke(runner, 'invariants', 'two_dof_momenta', '--json', str(out))
    assert result.exit_code == 0, result.output
    body = json.loads(out.read_text(encoding='utf-8'))
    assert body['success'] is True
    assert body['command'] == 'invariants'
    entries = body['data']['invariants']['entries']
    assert [e['k'] for e in entries] == [1, 2]
    assert body['data']['invariants']['values'][0] == pytest.approx([3.0, 8.0])
    assert body['data']['invariants']['oracle_constants'] == pytest.approx([1.0, 4.0])


def test_poisson_invariants_command(app, runner, tmp_path):
    out = tmp_path / 'inv.json'
    result = invoke(runner, 'invariants', 'poisson_canonical', '--json', str(out))
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text(encoding='utf-8'))['data']['invariants']
    assert data['path'] == 'poisson'
    assert [e['trivial'] for e in data['entries']] == [False, False, True]


def test_verify_flags_candidates_without_failing(app, runner, tmp_path):
    out = tmp_path / 'verify.json'
    result = invoke(runner, 'verify', 'two_dof_momenta', *FAST, '--json', str(out))
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text(encoding='utf-8'))['data']['verify']
    assert data['conserved'] == {'I(1)': True, 'I(2)': True, 'q1': False}
    assert data['candidates'] == ['q1']


def test_verify_relativistic_gauges(app, runner, tmp_path):
    out = tmp_path / 'verify.json'
    result = invoke(runner, 'verify', 'relativistic_particle', *FAST, '--points', '1', '--gauges', '2',
                 '--json', str(out))
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text(encoding='utf-8'))['data']['verify']
    assert len(data['runs']) == 3
    assert all(data['conserved'].values())


def test_involution_command(app, runner, tmp_path):
    out = tmp_path / 'involution.json'
    result = invoke(runner, 'involution', 'two_dof_momenta', '--json', str(out))
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text(encoding='utf-8'))['data']['involution']
    assert data['yang_baxter']['applicable'] is True
    assert data['involution']['ok'] is True


def test_involution_without_yang_baxter(app, runner, tmp_path):
    out = tmp_path / 'involution.json'
    result = invoke(runner, 'involution', 'relativistic_particle', '--tol', '1e-6', '--json', str(out))
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text(encoding='utf-8'))['data']['involution']
    assert data['yang_baxter'] == {'applicable': False, 'ok': False, 'residual': None}


def test_report_is_deterministic(app, runner, tmp_path):
    first, second = tmp_path / 'a.json', tmp_path / 'b.json'
    assert invoke(runner, 'report', 'free_dilation', *FAST, '--json', str(first)).exit_code == 0
    assert invoke(runner, 'report', 'free_dilation', *FAST, '--json', str(second)).exit_code == 0
    assert first.read_bytes() == second.read_bytes()
    body = json.loads(first.read_text(encoding='utf-8'))
    assert set(body['data']) == {'symmetry', 'invariants', 'verify', 'involution', 'descent'}


def test_report_stops_after_a_failed_check(app, runner, tmp_path):
    out = tmp_path / 'report.json'
    result = invoke(runner, 'report', 'non_symmetry', *FAST, '--json', str(out))
    assert result.exit_code == 2
    body = json.loads(out.read_text(encoding='utf-8'))
    assert body['success'] is False
    assert set(body['data']) == {'symmetry'}


def test_seed_precedence(monkeypatch, tmp_path):
    config = {
        'coordinates': ['q', 'p'],
        'structure': {'kind': 'symplectic-form', 'terms': [{'indices': ['p', 'q'], 'expr': '1'}]},
        'hamiltonian': 'p^2/2',
        'generator': [{'index': 'q', 'expr': 'q'}, {'index': 'p', 'expr': 'p'}],
    }
    path = tmp_path / 'unseeded.json'
    path.write_text(json.dumps(config), encoding='utf-8')
    monkeypatch.setenv('NONNOETHER_SEED', '5')
    runner = create_app().test_cli_runner()
    assert invoke(runner, 'check', str(path)).output.startswith('check unseeded (seed 5)')
    assert invoke(runner, 'check', str(path), '--seed', '9').output.startswith('check unseeded (seed 9)')
    assert invoke(runner, 'check', 'free_dilation').output.startswith('check free_dilation (seed 0)')


def test_run_exits_with_the_report_code(app):
    assert run(app, ['check', 'free_dilation']) == 0
    assert run(app, ['check', 'non_symmetry']) == 2
    assert run(app, ['check', 'no_such_system']) == 1
    assert run(app, ['frobnicate']) == 1


def test_invariants_refuse_a_non_symmetry(app, runner):
    result = invoke(runner, 'invariants', 'non_symmetry')
    assert result.exit_code == 2
    assert 'not a symmetry' in result.output


def test_sampler_is_registered_on_the_app(app):
    assert app.extensions['sampler'] is sampler
    assert sorted(app.cli.commands) == ['check', 'invariants', 'involution', 'report', 'verify']


def test_verify_fails_when_an_invariant_drifts(app, runner, tmp_path):
    config = {
        'name': 'scaled_dilation',
        'coordinates': ['q', 'p'],
        'structure': {'kind': 'symplectic-form', 'terms': [{'indices': ['p', 'q'], 'expr': '1'}]},
        'hamiltonian': '(p^2 + q^2)/2',
        'generator': [{'index': 'q', 'expr': 'q*(p^2 + q^2)/2'}, {'index': 'p', 'expr': 'p*(p^2 + q^2)/2'}],
        'initial_points': [{'q': 1, 'p': 0}],
    }
    path, out = tmp_path / 'scaled.json', tmp_path / 'verify.json'
    path.write_text(json.dumps(config), encoding='utf-8')
    result = invoke(runner, 'verify', str(path), '--steps', '0.5', '--time', '10', '--json', str(out))
    assert result.exit_code == 2
    assert 'I(1) drifts by' in result.output
    body = json.loads(out.read_text(encoding='utf-8'))
    assert body['success'] is False
    assert body['data']['verify']['conserved'] == {'I(1)': False}
    assert body['data']['verify']['runs'][0]['states'] == 21


def test_invariants_report_representative_dependence(app, runner, tmp_path):
    out = tmp_path / 'inv.json'
    result = invoke(runner, 'invariants', 'relativistic_particle', '--json', str(out))
    assert result.exit_code == 0, result.output
    assert 'limitation: kernel does not annihilate omega_E' in result.output
    data = json.loads(out.read_text(encoding='utf-8'))['data']['invariants']
    assert data['representative_dependence'] > 1e-8
    assert len(data['limitations']) == 1

    invoke(runner, 'invariants', 'two_dof_momenta', '--json', str(out))
    data = json.loads(out.read_text(encoding='utf-8'))['data']['invariants']
    assert data['representative_dependence'] == 0.0
    assert data['limitations'] == []
