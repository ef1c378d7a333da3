import logging

import click

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK_FAILED = 2


class NonNoetherError(Exception):
    """Base class for every error raised by the package."""


class UsageError(NonNoetherError):
    """Bad input: syntax, unknown names, unreadable or invalid configs."""


class CheckFailed(NonNoetherError):
    """A mathematical check ran to completion and failed."""


class ComputationError(NonNoetherError):
    """A construction could not be carried out on the given data."""


# expr

class ExpressionSyntaxError(UsageError):
    def __init__(self, message, offset):
        super().__init__(f'{message} at offset {offset}')
        self.offset = offset


class UnknownFunctionError(ExpressionSyntaxError):
    def __init__(self, name, offset):
        super().__init__(f'unknown function {name!r}', offset)
        self.name = name


class UnboundNameError(UsageError):
    def __init__(self, names):
        names = sorted(names)
        super().__init__(f'unbound name(s): {", ".join(names)}')
        self.names = names


class DomainPointError(ComputationError):
    """Evaluation produced a non-finite value (pole, negative radicand...)."""


class ResamplingExhausted(ComputationError):
    pass


# exterior

class ChartMismatch(UsageError):
    pass


class DegreeError(UsageError):
    pass


# mechanics

class DegenerateForm(ComputationError):
    pass


class DimensionTooLarge(ComputationError):
    pass


class OddRank(ComputationError):
    pass


class SingularPoint(ComputationError):
    pass


class NoDynamics(CheckFailed):
    pass


class NoCorrespondingForm(ComputationError):
    pass


class RankMismatch(ComputationError):
    pass


class RankDrift(ComputationError):
    pass


class NotASymmetry(CheckFailed):
    pass


class NotPoisson(CheckFailed):
    pass


class NotProportional(CheckFailed):
    pass


class FNotConserved(CheckFailed):
    pass


# flow

class BlowUp(ComputationError):
    pass


class DriftExceeded(CheckFailed):
    def __init__(self, name, drift, tol):
        super().__init__(f'{name} drifts by {drift:.3e} (tol {tol:.1e})')
        self.name = name
        self.drift = drift
        self.tol = tol


class DriftAtFloor(NonNoetherError):
    """Drift sits at round-off level; no order can be measured. Not a failure."""

    def __init__(self, drifts):
        super().__init__(f'drift at floor: max {max(drifts):.3e}')
        self.drifts = list(drifts)


# cli

class ConfigError(UsageError):
    def __init__(self, message, location=None):
        if location:
            message = f'{location}: {message}'
        super().__init__(message)
        self.location = location


def register_error_handlers(app):
    @app.errorhandler(UsageError)
    def usage_error(e):
        click.echo(f'error: {e}', err=True)
        return EXIT_USAGE

    @app.errorhandler(OSError)
    def io_error(e):
        click.echo(f'error: {e}', err=True)
        return EXIT_USAGE

    @app.errorhandler(CheckFailed)
    def check_failed(e):
        click.echo(f'check failed: {e}', err=True)
        return EXIT_CHECK_FAILED

    @app.errorhandler(NonNoetherError)
    def computation_error(e):
        logger.debug('unhandled computation error', exc_info=e)
        click.echo(f'error: {type(e).__name__}: {e}', err=True)
        return EXIT_CHECK_FAILED


def handle_error(app, e):
    """Exit code from the most specific handler registered for ``e``, or None."""
    handlers = app.error_handler_spec[None][None]
    for cls in type(e).__mro__:
        if cls in handlers:
            return handlers[cls](e)
    return None
