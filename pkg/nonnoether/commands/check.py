import logging

import click
from flask.cli import with_appcontext

from ..decorators import common_options, reports_result, system_required
from ..expr import format_expression
from ..mechanics import check_symmetry, validate_poisson

logger = logging.getLogger(__name__)


def run_check(loaded, settings, rng, report):
    """Symmetry verdict (and Jacobi identity for bivectors); None when the check fails."""
    sys = loaded.system
    if sys.is_poisson:
        jacobi = validate_poisson(sys.structure, sys.parameters, rng)
        report.add('poisson', {'jacobi': jacobi.ok, 'residual': jacobi.residual},
                   f'[W, W] residual {jacobi.residual:.3e}: {"ok" if jacobi else "not a Poisson structure"}')
        if not jacobi:
            report.fail('bivector violates the Jacobi identity')
            return None

    verdict = check_symmetry(sys, loaded.generator, settings.tol, rng)
    field_class = verdict.field_class
    potential = field_class.potential if field_class else None
    data = {
        'classification': verdict.classification.value,
        'residual': verdict.residual,
        'kernel_residual': verdict.kernel_residual,
        'commutator_class': field_class.kind.value if field_class else None,
        'potential': format_expression(potential) if potential is not None else None,
    }
    lines = [f'{verdict.classification.value} (max |[E, X_h]| = {verdict.residual:.3e})']
    if field_class:
        lines.append(f'commutator is {field_class.kind.value}')
    if potential is not None:
        lines.append(f'potential f = {format_expression(potential)}')
    report.add('symmetry', data, *lines)
    if not verdict.is_symmetry:
        report.fail('generator is not a symmetry')
        return None
    return verdict


@click.command('check')
@with_appcontext
@common_options
@system_required
@reports_result
def check_cmd(loaded, integrator, settings, rng, report):
    """Classify the generator as a (generalized) symmetry."""
    run_check(loaded, settings, rng, report)
