import logging

import click
from flask.cli import with_appcontext

from ..decorators import common_options, reports_result, system_required
from ..invariants import involution_check, yang_baxter_check
from .invariants import build_invariants

logger = logging.getLogger(__name__)


def run_involution(loaded, settings, rng, report, inv=None):
    """Yang-Baxter condition plus pairwise brackets of the invariants.

    Fails when the brackets do not vanish although the Yang-Baxter condition
    holds or cannot be evaluated.
    """
    sys = loaded.system
    yang_baxter = yang_baxter_check(sys, loaded.generator, rng)
    inv = inv if inv is not None else build_invariants(loaded, settings, rng)
    involution = involution_check(inv, sys, settings.tol, rng)
    data = {
        'yang_baxter': {'applicable': yang_baxter.applicable, 'ok': yang_baxter.ok,
                        'residual': yang_baxter.residual},
        'involution': {'ok': involution.ok, 'labels': list(involution.labels),
                       'residuals': involution.residuals},
    }
    if yang_baxter.applicable:
        yb_line = f'[[E, [E, W]], W] residual {yang_baxter.residual:.3e}: {"holds" if yang_baxter else "fails"}'
    else:
        yb_line = 'Yang-Baxter condition not applicable (no symbolic bivector)'
    worst = float(involution.residuals.max()) if involution.residuals.size else 0.0
    report.add('involution', data, yb_line,
               f'max |{{I(l), I(k)}}| = {worst:.3e}: {"in involution" if involution else "not in involution"}')
    if not involution and (yang_baxter.ok or not yang_baxter.applicable):
        report.fail('invariants are not in involution')
    return involution


@click.command('involution')
@with_appcontext
@common_options
@system_required
@reports_result
def involution_cmd(loaded, integrator, settings, rng, report):
    """Check the Yang-Baxter condition and pairwise involution."""
    run_involution(loaded, settings, rng, report)
