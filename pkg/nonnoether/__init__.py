import logging
import os

import click
from dotenv import load_dotenv
from flask import Flask
from flask.cli import AppGroup, ScriptInfo

from .errors import EXIT_USAGE, handle_error, register_error_handlers
from .extensions import sampler
from .commands import register_commands

logger = logging.getLogger(__name__)


class CommandGroup(AppGroup):
    """``app.cli`` whose failures end in the exit code of a registered handler."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.show()
            ctx.exit(EXIT_USAGE)
        except (click.exceptions.Exit, click.Abort):
            raise
        except Exception as e:
            code = handle_error(ctx.ensure_object(ScriptInfo).load_app(), e)
            if code is None:
                raise
            ctx.exit(code)


def create_app():
    project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
    load_dotenv(os.path.join(project_root, '.env'))

    app = Flask(__name__)
    app.config['SEED'] = int(os.getenv('NONNOETHER_SEED', 0))
    app.config['TOL'] = float(os.getenv('NONNOETHER_TOL', 1e-8))
    app.config['STEP'] = float(os.getenv('NONNOETHER_STEP', 1e-3))
    app.config['TIME'] = float(os.getenv('NONNOETHER_TIME', 10))
    app.config['POINTS'] = int(os.getenv('NONNOETHER_POINTS', 3))
    app.config['CONFIG_DIR'] = os.getenv('NONNOETHER_CONFIG_DIR', os.path.join(project_root, 'configs'))
    app.config['LOG_LEVEL'] = os.getenv('NONNOETHER_LOG_LEVEL', 'WARNING').upper()

    logging.basicConfig(level=app.config['LOG_LEVEL'],
                        format='%(levelname)s %(name)s: %(message)s')

    app.cli = CommandGroup('nonnoether', help='Conservation laws from non-Noether symmetries.')

    sampler.init_app(app)

    register_commands(app)

    register_error_handlers(app)

    return app


def run(app, args=None):
    """Run one command line against ``app`` and return its exit code."""
    try:
        code = app.cli.main(args=args, prog_name=app.name, obj=ScriptInfo(create_app=lambda: app),
                            standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    return code or 0
