import os

import numpy as np
import pytest
from hypothesis import settings

from nonnoether import create_app
from nonnoether.config import load_system
from nonnoether.expr import ONE, parse_expression
from nonnoether.exterior import DifferentialForm, MultiVectorField, vector_field
from nonnoether.mechanics import POISSON, SYMPLECTIC, PhaseSpaceSystem, SymmetryGenerator

CONFIG_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'configs'))

settings.register_profile('nonnoether', max_examples=25, deadline=None)
settings.load_profile('nonnoether')


def canonical_pairs(coordinates):
    """``(p_i, q_i)`` pairs from a chart ordered ``q1, p1, q2, p2, ...``."""
    return [(coordinates[i + 1], coordinates[i]) for i in range(0, len(coordinates), 2)]


def canonical_system(coordinates=('q', 'p'), hamiltonian='p^2/2', kind=SYMPLECTIC, name='canonical'):
    cls = MultiVectorField if kind == POISSON else DifferentialForm
    structure = cls.from_terms(coordinates, 2, [((p, q), ONE) for p, q in canonical_pairs(coordinates)])
    return PhaseSpaceSystem(coordinates=tuple(coordinates), structure=structure,
                            hamiltonian=parse_expression(hamiltonian), structure_kind=kind, name=name)


def generator(coordinates, **components):
    return SymmetryGenerator(vector_field(coordinates, {n: parse_expression(e) for n, e in components.items()}))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def load():
    def _load(name):
        return load_system(os.path.join(CONFIG_DIR, f'{name}.json'))
    return _load


@pytest.fixture
def free_particle():
    return canonical_system()


@pytest.fixture
def two_dof(load):
    return load('two_dof_momenta')


@pytest.fixture
def relativistic(load):
    return load('relativistic_particle')


@pytest.fixture
def app(monkeypatch):
    monkeypatch.setenv('NONNOETHER_CONFIG_DIR', CONFIG_DIR)
    return create_app()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()
