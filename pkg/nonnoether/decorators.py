from dataclasses import dataclass
from functools import wraps
from typing import Optional

import click
from flask import current_app

from .config import load_system, resolve_config_path
from .extensions import sampler
from .flow import IntegratorConfig
from .reporting import Report


@dataclass(frozen=True)
class RunSettings:
    seed: int
    tol: float
    step: float
    time: float
    points: Optional[int]
    default_points: int
    gauges: int
    json_path: Optional[str]


def common_options(f):
    options = [
        click.argument('config'),
        click.option('--seed', type=int, default=None, help='Random seed (default: config, then environment).'),
        click.option('--tol', type=float, default=None, help='Check tolerance.'),
        click.option('--steps', 'step', type=float, default=None, help='Integrator step size.'),
        click.option('--time', type=float, default=None, help='Integration time.'),
        click.option('--points', type=int, default=None, help='Number of seeded random initial points.'),
        click.option('--gauges', type=int, default=0, help='Extra random kernel admixtures (presymplectic).'),
        click.option('--json', 'json_path', type=click.Path(dir_okay=False), default=None,
                     help='Write the machine-readable report to this path.'),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def system_required(f):
    """Load the config argument and merge flags over config over environment."""
    @wraps(f)
    def decorated_function(config, seed, tol, step, time, points, gauges, json_path, **kwargs):
        loaded = load_system(resolve_config_path(config, current_app.config['CONFIG_DIR']))
        options = loaded.integrator_options
        settings = RunSettings(
            seed=seed if seed is not None else loaded.seed if loaded.seed is not None else current_app.config['SEED'],
            tol=tol if tol is not None else current_app.config['TOL'],
            step=step if step is not None else options.get('step', current_app.config['STEP']),
            time=time if time is not None else options.get('time', current_app.config['TIME']),
            points=points,
            default_points=current_app.config['POINTS'],
            gauges=gauges,
            json_path=json_path,
        )
        integrator = IntegratorConfig(step=settings.step, time=settings.time,
                                      admixture=options.get('admixture', ()))
        return f(loaded, integrator, settings, sampler.rng(settings.seed), **kwargs)
    return decorated_function


def reports_result(f):
    """Print the report, optionally write its JSON body, exit with its code."""
    @wraps(f)
    def decorated_function(loaded, integrator, settings, rng, **kwargs):
        report = Report(command=click.get_current_context().info_name, system=loaded.system.name,
                        seed=settings.seed)
        f(loaded, integrator, settings, rng, report, **kwargs)
        click.echo(report.to_text())
        if settings.json_path:
            with open(settings.json_path, 'w', encoding='utf-8') as handle:
                handle.write(report.to_json() + '\n')
        click.get_current_context().exit(report.exit_code)
    return decorated_function
