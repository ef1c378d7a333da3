import json
import os

import numpy as np
import pytest

from conftest import CONFIG_DIR
from nonnoether.config import load_system, parse_config, resolve_config_path
from nonnoether.errors import ConfigError
from nonnoether.mechanics import POISSON, PRESYMPLECTIC

SHIPPED = sorted(os.path.splitext(name)[0] for name in os.listdir(CONFIG_DIR) if name.endswith('.json'))


def free_particle_data(**overrides):
    data = {
        'name': 'free',
        'coordinates': ['q', 'p'],
        'structure': {'kind': 'symplectic-form', 'terms': [{'indices': ['p', 'q'], 'expr': '1'}]},
        'hamiltonian': 'p^2/2',
        'generator': [{'index': 'q', 'expr': 'q'}, {'index': 'p', 'expr': 'p'}],
    }
    data.update(overrides)
    return data


def write(tmp_path, text, name='system.json'):
    path = tmp_path / name
    path.write_text(text, encoding='utf-8')
    return str(path)


@pytest.mark.parametrize('name', SHIPPED)
def test_shipped_configs_load(name):
    loaded = load_system(resolve_config_path(name, CONFIG_DIR))
    assert loaded.system.name == name
    system, generator, integrator = loaded
    assert generator.field.chart == system.coordinates
    assert integrator.step > 0


def test_relativistic_config(relativistic):
    sys = relativistic.system
    assert sys.structure_kind == PRESYMPLECTIC
    assert sys.parameters == {'m': 1.0}
    assert len(sys.kernel) == 1
    assert relativistic.integrator.admixture == (1.0,)
    assert relativistic.initial_points == ()


def test_poisson_config(load):
    loaded = load('poisson_canonical')
    assert loaded.system.structure_kind == POISSON
    np.testing.assert_array_equal(loaded.initial_points[0], [0.5, 1.0, -0.25, 2.0])


def test_defaults():
    loaded = parse_config(free_particle_data())
    assert loaded.seed is None
    assert loaded.candidates == ()
    assert loaded.integrator_options == {}


def test_empty_file_is_a_parse_error(tmp_path):
    path = write(tmp_path, '')
    with pytest.raises(ConfigError) as info:
        load_system(path)
    assert info.value.location == f'{path}:1:1'


def test_syntax_error_location(tmp_path):
    path = write(tmp_path, '{\n  "coordinates": [q, p]\n}\n')
    with pytest.raises(ConfigError) as info:
        load_system(path)
    assert info.value.location == f'{path}:2:19'


def test_missing_config():
    with pytest.raises(ConfigError, match='no such config'):
        resolve_config_path('does_not_exist', CONFIG_DIR)


def test_explicit_path_wins(tmp_path):
    path = write(tmp_path, json.dumps(free_particle_data()), name='free.json')
    assert resolve_config_path(path, CONFIG_DIR) == path
    assert resolve_config_path('free', str(tmp_path)) == path
    assert resolve_config_path('free.json', str(tmp_path)) == path


def test_kernel_must_annihilate_the_form():
    data = free_particle_data(
        coordinates=['q', 'p', 's'],
        structure={'kind': 'presymplectic-form', 'terms': [{'indices': ['p', 'q'], 'expr': '1'}]},
        generator=[{'index': 'q', 'expr': 'q'}],
        kernel=[[{'index': 'q', 'expr': '1'}]],
    )
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    assert info.value.location == 'kernel'
    data['kernel'] = [[{'index': 's', 'expr': '1'}]]
    assert len(parse_config(data).system.kernel) == 1


@pytest.mark.parametrize('overrides, location', [
    ({'hamiltonian': 'p +* q'}, 'hamiltonian'),
    ({'hamiltonian': 'p^2/2 + k'}, 'hamiltonian'),
    ({'generator': [{'index': 'x', 'expr': 'q'}]}, 'generator[0].index'),
    ({'generator': [{'index': 'q', 'expr': 'q'}, {'index': 'q', 'expr': 'p'}]}, 'generator[1]'),
    ({'structure': {'kind': 'contact-form', 'terms': []}}, 'structure.kind'),
    ({'structure': {'kind': 'symplectic-form', 'terms': [{'indices': ['p'], 'expr': '1'}]}},
     'structure.terms[0].indices'),
    ({'coordinates': ['q', 'q']}, 'coordinates'),
    ({'parameters': {'q': 1}}, 'parameters'),
    ({'integrator': {'step': 0.1, 'order': 4}}, 'integrator'),
    ({'integrator': {'step': 'small'}}, 'integrator'),
    ({'initial_points': [{'q': 1}]}, 'initial_points[0]'),
    ({'candidates': ['cos(q)']}, 'candidates[0]'),
    ({'seed': -1}, 'seed'),
])
def test_invalid_configs_point_at_the_offending_key(overrides, location):
    with pytest.raises(ConfigError) as info:
        parse_config(free_particle_data(**overrides))
    assert info.value.location == location


def test_missing_hamiltonian():
    data = free_particle_data()
    del data['hamiltonian']
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    assert info.value.location == 'hamiltonian'


def test_syntax_error_message_carries_the_offset():
    with pytest.raises(ConfigError, match='offset 3'):
        parse_config(free_particle_data(hamiltonian='p +* q'))


def test_invalid_integrator_values():
    with pytest.raises(ConfigError):
        parse_config(free_particle_data(integrator={'step': -1}))
