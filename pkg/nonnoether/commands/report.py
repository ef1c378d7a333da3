import logging

import click
from flask.cli import with_appcontext

from ..decorators import common_options, reports_result, system_required
from ..errors import DriftExceeded, FNotConserved
from ..flow import integrate_flow, record_conservation
from ..invariants import bracket_descent
from .check import run_check
from .invariants import pick_points, run_invariants
from .involution import run_involution
from .verify import run_verify

logger = logging.getLogger(__name__)


def run_descent(loaded, integrator, settings, rng, report, inv):
    """Brackets of the invariants with the Hamiltonian, checked for conservation."""
    sys = loaded.system
    points = pick_points(loaded, settings, rng)[:1]
    try:
        brackets = bracket_descent(inv, sys.hamiltonian, sys, points, integrator, rng=rng)
    except FNotConserved as e:
        report.add('descent', {'skipped': str(e)}, f'skipped: {e}')
        return
    drifts = {}
    for x0 in points:
        trajectory = record_conservation(integrate_flow(sys, x0, integrator, rng=rng), brackets)
        for name, d in trajectory.drift.items():
            drifts[name] = max(drifts.get(name, 0.0), d)
    report.add('descent', {'max_drift': drifts},
               *(f'{name}: drift {d:.3e}' for name, d in sorted(drifts.items())))
    for name, d in drifts.items():
        if d > settings.tol:
            report.fail(DriftExceeded(name, d, settings.tol))


@click.command('report')
@with_appcontext
@common_options
@system_required
@reports_result
def report_cmd(loaded, integrator, settings, rng, report):
    """Run every check and collect one report."""
    if run_check(loaded, settings, rng, report) is None:
        return
    inv = run_invariants(loaded, settings, rng, report)
    run_verify(loaded, integrator, settings, rng, report, inv=inv)
    run_involution(loaded, settings, rng, report, inv=inv)
    run_descent(loaded, integrator, settings, rng, report, inv)
