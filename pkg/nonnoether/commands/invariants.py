import logging

import click
import numpy as np
from flask.cli import with_appcontext

from ..decorators import common_options, reports_result, system_required
from ..extensions import sampler
from ..invariants import lutzky_invariants, oracle_ratios, poisson_invariants
from ..reporting import describe_invariants, invariant_lines, table_lines

logger = logging.getLogger(__name__)


def build_invariants(loaded, settings, rng):
    sys, gen = loaded.system, loaded.generator
    if sys.is_poisson:
        return poisson_invariants(sys, gen, settings.tol, rng)
    return lutzky_invariants(sys, gen, rng, tol=settings.tol)


def pick_points(loaded, settings, rng):
    """Config points unless ``--points`` asks for seeded random ones."""
    if settings.points is None and loaded.initial_points:
        return list(loaded.initial_points)
    count = settings.points if settings.points is not None else settings.default_points
    return sampler.initial_points(loaded.system, count, rng)


def _normalization(inv, loaded, points, rng):
    ratios = oracle_ratios(inv, loaded.system, loaded.generator, points, rng)
    constants, spreads = [], []
    for column in ratios.T if ratios.size else []:
        usable = column[np.isfinite(column)]
        if usable.size == 0:
            constants.append(None)
            spreads.append(None)
            continue
        mean = float(np.mean(usable))
        constants.append(mean)
        spreads.append(float((np.max(usable) - np.min(usable)) / max(abs(mean), 1e-12)))
    return constants, spreads


def run_invariants(loaded, settings, rng, report):
    sys = loaded.system
    inv = build_invariants(loaded, settings, rng)
    points = pick_points(loaded, settings, rng)
    values = [inv.evaluate(x) for x in points]
    data = describe_invariants(inv)
    data['points'] = [dict(zip(sys.coordinates, x)) for x in points]
    data['values'] = values
    lines = invariant_lines(inv)
    data['limitations'] = []
    if inv.representative_dependence > settings.tol:
        note = (f'kernel does not annihilate omega_E (max |i_u omega_E| = {inv.representative_dependence:.3e}); '
                'values depend on the bivector representative')
        data['limitations'].append(note)
        lines.append(f'limitation: {note}')
    if not sys.is_poisson and len(inv):
        constants, spreads = _normalization(inv, loaded, points, rng)
        data['oracle_constants'] = constants
        data['oracle_spread'] = spreads
        for entry, c, s in zip(inv, constants, spreads):
            if c is not None:
                lines.append(f'{entry.name} / half-spectrum coefficient = {c:.10g} (spread {s:.1e})')
    names = list(sys.coordinates) + [e.name for e in inv]
    lines.extend(table_lines(names, [list(x) + list(v) for x, v in zip(points, values)]))
    report.add('invariants', data, *lines)
    return inv


@click.command('invariants')
@with_appcontext
@common_options
@system_required
@reports_result
def invariants_cmd(loaded, integrator, settings, rng, report):
    """Construct the conservation laws generated by the symmetry."""
    run_invariants(loaded, settings, rng, report)
