import logging
from dataclasses import replace

import click
import numpy as np
from flask.cli import with_appcontext

from ..decorators import common_options, reports_result, system_required
from ..expr import format_expression
from ..errors import DriftExceeded
from ..extensions import sampler
from ..flow import integrate_flow, record_conservation
from ..invariants import InvariantSet
from ..reporting import table_lines
from .invariants import build_invariants, pick_points

logger = logging.getLogger(__name__)


def gauge_choices(loaded, integrator, settings, rng):
    """Configured admixture first, then ``--gauges`` random ones."""
    sys = loaded.system
    gauges = [integrator.admixture]
    if sys.is_presymplectic and sys.kernel and settings.gauges > 0:
        gauges.extend(sampler.gauges(sys, settings.gauges, rng))
    elif settings.gauges > 0:
        logger.warning('%s: --gauges ignored, no kernel to mix in', sys.name)
    return gauges


def run_verify(loaded, integrator, settings, rng, report, inv=None):
    sys = loaded.system
    inv = inv if inv is not None else build_invariants(loaded, settings, rng)
    candidates = InvariantSet.from_expressions(sys, loaded.candidates,
                                               labels=[format_expression(c) for c in loaded.candidates])
    tracked = list(inv) + list(candidates)
    points = pick_points(loaded, settings, rng)
    gauges = gauge_choices(loaded, integrator, settings, rng)

    rows, worst = [], np.zeros(len(tracked))
    for x0 in points:
        for gauge in gauges:
            trajectory = integrate_flow(sys, x0, replace(integrator, admixture=tuple(gauge)), rng=rng)
            trajectory = record_conservation(trajectory, tracked)
            drifts = np.array([trajectory.drift[e.name] for e in tracked])
            worst = np.maximum(worst, drifts)
            rows.append({'point': dict(zip(sys.coordinates, x0)), 'gauge': list(gauge),
                         'drift': dict(zip((e.name for e in tracked), drifts)),
                         'states': len(trajectory.states)})

    names = [e.name for e in tracked]
    conserved = {name: bool(d <= settings.tol) for name, d in zip(names, worst)}
    data = {
        'step': integrator.step,
        'time': integrator.time,
        'tol': settings.tol,
        'max_drift': dict(zip(names, worst)),
        'conserved': conserved,
        'candidates': [e.name for e in candidates],
        'runs': rows,
    }
    lines = [f'{len(points)} point(s) x {len(gauges)} gauge(s), step {integrator.step:g}, '
             f'time {integrator.time:g}, drift over every step']
    lines.extend(table_lines(['invariant', 'max drift'], []))
    for entry, d in zip(tracked, worst):
        tag = 'conserved' if conserved[entry.name] else 'NOT conserved'
        lines.append(f'{entry.name:>14}  {d:>14.6e}  {tag}')
    report.add('verify', data, *lines)
    for entry, d in zip(inv, worst):
        if d > settings.tol:
            report.fail(DriftExceeded(entry.name, d, settings.tol))
    return data


@click.command('verify')
@with_appcontext
@common_options
@system_required
@reports_result
def verify_cmd(loaded, integrator, settings, rng, report):
    """Integrate the flow and measure the drift of every invariant."""
    run_verify(loaded, integrator, settings, rng, report)
