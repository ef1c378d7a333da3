"""Config ingestion.

A system is declared as JSON::

    {
      "name": "free_dilation",
      "coordinates": ["q", "p"],
      "parameters": {"m": 1},
      "structure": {"kind": "symplectic-form",
                    "terms": [{"indices": ["p", "q"], "expr": "1"}]},
      "hamiltonian": "p^2/2",
      "generator": [{"index": "q", "expr": "q"}, {"index": "p", "expr": "p"}],
      "kernel": [[{"index": "q", "expr": "1"}]],
      "candidates": ["q"],
      "integrator": {"step": 1e-3, "time": 10, "admixture": [1]},
      "initial_points": [{"q": 0, "p": 1}],
      "seed": 0
    }

``kernel``, ``candidates``, ``integrator``, ``initial_points``, ``parameters``
and ``seed`` are optional.
"""
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigError, NonNoetherError, UsageError
from .expr import ScalarExpr, free_names, parse_expression
from .exterior import DifferentialForm, MultiVectorField
from .flow import IntegratorConfig
from .mechanics import POISSON, STRUCTURE_KINDS, PhaseSpaceSystem, SymmetryGenerator

logger = logging.getLogger(__name__)

CONFIG_SUFFIX = '.json'


@dataclass(frozen=True, eq=False)
class SystemConfig:
    system: PhaseSpaceSystem
    generator: SymmetryGenerator
    integrator: IntegratorConfig
    initial_points: Tuple[np.ndarray, ...] = ()
    candidates: Tuple[ScalarExpr, ...] = ()
    seed: Optional[int] = None
    path: str = ''
    integrator_options: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.system, self.generator, self.integrator))


def resolve_config_path(name, config_dir=None):
    """An existing path, or ``<config_dir>/<name>.json``."""
    if os.path.isfile(name):
        return name
    if config_dir:
        candidate = os.path.join(config_dir, name if name.endswith(CONFIG_SUFFIX) else name + CONFIG_SUFFIX)
        if os.path.isfile(candidate):
            return candidate
    raise ConfigError(f'no such config: {name}')


class _Reader:
    def __init__(self, data):
        self.data = data
        self.parameters = {}
        self.coordinates = []

    def require(self, key, kind):
        if key not in self.data:
            raise ConfigError('missing key', location=key)
        value = self.data[key]
        if not isinstance(value, kind):
            raise ConfigError(f'expected {getattr(kind, "__name__", kind)}', location=key)
        return value

    def expression(self, text, location):
        if not isinstance(text, (str, int, float)):
            raise ConfigError('expression must be a string', location=location)
        try:
            e = parse_expression(str(text), self.parameters)
        except UsageError as exc:
            raise ConfigError(str(exc), location=location) from exc
        coords, _ = free_names(e)
        unknown = coords - set(self.coordinates)
        if unknown:
            raise ConfigError(f'unknown name(s) {", ".join(sorted(unknown))}', location=location)
        return e

    def index(self, name, location):
        if name not in self.coordinates:
            raise ConfigError(f'unknown coordinate {name!r}', location=location)
        return self.coordinates.index(name)

    def vector_terms(self, terms, location):
        if not isinstance(terms, list):
            raise ConfigError('expected a list of {index, expr} terms', location=location)
        coefficients = {}
        for n, term in enumerate(terms):
            where = f'{location}[{n}]'
            if not isinstance(term, dict) or 'index' not in term or 'expr' not in term:
                raise ConfigError('expected {index, expr}', location=where)
            i = self.index(term['index'], f'{where}.index')
            if (i,) in coefficients:
                raise ConfigError(f'duplicate component {term["index"]!r}', location=where)
            coefficients[(i,)] = self.expression(term['expr'], f'{where}.expr')
        return MultiVectorField(self.coordinates, 1, coefficients)


def _structure(reader, section):
    if not isinstance(section, dict):
        raise ConfigError('expected an object', location='structure')
    kind = section.get('kind')
    if kind not in STRUCTURE_KINDS:
        raise ConfigError(f'kind must be one of {", ".join(STRUCTURE_KINDS)}', location='structure.kind')
    terms = section.get('terms')
    if not isinstance(terms, list) or not terms:
        raise ConfigError('expected a non-empty list', location='structure.terms')
    parsed = []
    for n, term in enumerate(terms):
        where = f'structure.terms[{n}]'
        if not isinstance(term, dict) or 'indices' not in term or 'expr' not in term:
            raise ConfigError('expected {indices, expr}', location=where)
        indices = term['indices']
        if not isinstance(indices, list) or len(indices) != 2:
            raise ConfigError('a 2-form or bivector term needs two indices', location=f'{where}.indices')
        names = [reader.coordinates[reader.index(name, f'{where}.indices')] for name in indices]
        parsed.append((names, reader.expression(term['expr'], f'{where}.expr')))
    cls = MultiVectorField if kind == POISSON else DifferentialForm
    try:
        return kind, cls.from_terms(reader.coordinates, 2, parsed)
    except UsageError as exc:
        raise ConfigError(str(exc), location='structure.terms') from exc


def parse_config(data, path=''):
    if not isinstance(data, dict):
        raise ConfigError('top level must be an object')
    reader = _Reader(data)
    coordinates = reader.require('coordinates', list)
    if len(coordinates) < 2 or not all(isinstance(c, str) and c.isidentifier() for c in coordinates):
        raise ConfigError('expected at least two identifier names', location='coordinates')
    if len(set(coordinates)) != len(coordinates):
        raise ConfigError('duplicate coordinate name', location='coordinates')
    reader.coordinates = list(coordinates)
    parameters = data.get('parameters', {})
    if not isinstance(parameters, dict):
        raise ConfigError('expected an object', location='parameters')
    for name, value in parameters.items():
        if name in coordinates or not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f'bad parameter {name!r}', location='parameters')
    reader.parameters = {name: float(value) for name, value in parameters.items()}

    kind, structure = _structure(reader, data.get('structure'))
    hamiltonian = reader.expression(reader.require('hamiltonian', (str, int, float)), 'hamiltonian')
    generator = reader.vector_terms(reader.require('generator', list), 'generator')
    kernel = []
    for n, terms in enumerate(data.get('kernel', [])):
        kernel.append(reader.vector_terms(terms, f'kernel[{n}]'))
    candidates = tuple(reader.expression(text, f'candidates[{n}]')
                       for n, text in enumerate(data.get('candidates', [])))

    name = data.get('name') or os.path.splitext(os.path.basename(path))[0] or 'system'
    try:
        system = PhaseSpaceSystem(coordinates=tuple(coordinates), structure=structure, hamiltonian=hamiltonian,
                                  structure_kind=kind, parameters=reader.parameters,
                                  kernel=tuple(kernel), name=name)
        integrator_options = _integrator_options(data.get('integrator', {}))
        integrator = IntegratorConfig(**integrator_options)
    except ConfigError:
        raise
    except UsageError as exc:
        raise ConfigError(str(exc)) from exc

    seed = data.get('seed')
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
        raise ConfigError('expected a non-negative integer', location='seed')
    try:
        system.validate_kernel(np.random.default_rng(seed or 0))
    except NonNoetherError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), location='kernel') from exc

    points = []
    for n, point in enumerate(data.get('initial_points', [])):
        if not isinstance(point, dict) or set(point) != set(coordinates):
            raise ConfigError('expected a value for every coordinate', location=f'initial_points[{n}]')
        try:
            points.append(np.array([float(point[c]) for c in coordinates]))
        except (TypeError, ValueError) as exc:
            raise ConfigError('expected numbers', location=f'initial_points[{n}]') from exc

    logger.info('loaded %s: d=%d, %s', name, len(coordinates), kind)
    return SystemConfig(system, SymmetryGenerator(generator), integrator, tuple(points),
                        candidates, seed, path, integrator_options)


def _integrator_options(section):
    if not isinstance(section, dict):
        raise ConfigError('expected an object', location='integrator')
    unknown = set(section) - {'step', 'time', 'method', 'admixture'}
    if unknown:
        raise ConfigError(f'unknown key(s) {", ".join(sorted(unknown))}', location='integrator')
    options = {}
    try:
        for key in ('step', 'time'):
            if key in section:
                options[key] = float(section[key])
        if 'admixture' in section:
            options['admixture'] = tuple(float(c) for c in section['admixture'])
    except (TypeError, ValueError) as exc:
        raise ConfigError('expected numbers', location='integrator') from exc
    if 'method' in section:
        options['method'] = section['method']
    return options


def load_system(path):
    """Read, parse and validate a system config file."""
    with open(path, encoding='utf-8') as handle:
        text = handle.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f'parse error: {exc.msg}', location=f'{path}:{exc.lineno}:{exc.colno}') from exc
    return parse_config(data, path)
