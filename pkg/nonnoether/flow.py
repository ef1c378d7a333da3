import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import BlowUp, DomainPointError, DriftAtFloor, UsageError
from .mechanics import PhaseSpaceSystem, hamiltonian_field_at

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-3
DEFAULT_TIME = 10.0
MAX_STEPS = 10 ** 7
DRIFT_FLOOR = 1e-13

# classical fourth-order Runge-Kutta
RK4_A = np.array([
    [0.0, 0.0, 0.0, 0.0],
    [0.5, 0.0, 0.0, 0.0],
    [0.0, 0.5, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
])
RK4_B = np.array([1 / 6, 1 / 3, 1 / 3, 1 / 6])
RK4_C = np.array([0.0, 0.5, 0.5, 1.0])


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = DEFAULT_STEP
    time: float = DEFAULT_TIME
    method: str = 'rk4'
    admixture: Tuple[float, ...] = ()

    def __post_init__(self):
        if not (self.step > 0 and self.time > 0):
            raise UsageError('step and time must be positive')
        if self.time / self.step > MAX_STEPS:
            raise UsageError(f'time/step exceeds {MAX_STEPS:.0e}')
        if self.method != 'rk4':
            raise UsageError(f'unknown integration method {self.method!r}')
        object.__setattr__(self, 'admixture', tuple(float(c) for c in self.admixture))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    series: Dict[str, np.ndarray] = field(default_factory=dict)
    drift: Dict[str, float] = field(default_factory=dict)

    @property
    def final(self):
        return self.states[-1]


def rk4_step(f, x, h):
    k = np.zeros((len(RK4_B), x.size))
    for s in range(len(RK4_B)):
        k[s] = f(x + h * (RK4_A[s, :s] @ k[:s]))
    return x + h * (RK4_B @ k)


def integrate_flow(sys: PhaseSpaceSystem, x0, cfg: Optional[IntegratorConfig] = None,
                   reverse: bool = False, rng: Optional[np.random.Generator] = None) -> Trajectory:
    """Fixed-step RK4 along ``X_h`` (plus the configured kernel admixture).

    With ``reverse`` the field is negated, which runs the flow backwards.
    """
    cfg = cfg or IntegratorConfig()
    vector_field = hamiltonian_field_at(sys, cfg.admixture, rng)
    f = (lambda x: -vector_field(x)) if reverse else vector_field
    x = sys.point(x0).copy()
    if not np.all(np.isfinite(x)):
        raise BlowUp(f'{sys.name}: non-finite initial state')
    n = int(np.ceil(cfg.time / cfg.step - 1e-9))
    times = np.empty(n + 1)
    states = np.empty((n + 1, sys.dim))
    times[0], states[0] = 0.0, x
    t = 0.0
    for i in range(1, n + 1):
        h = min(cfg.step, cfg.time - t)
        try:
            x = rk4_step(f, x, h)
        except DomainPointError as exc:
            raise BlowUp(f'{sys.name}: field undefined at t={t:.6g}') from exc
        if not np.all(np.isfinite(x)):
            raise BlowUp(f'{sys.name}: non-finite state at t={t + h:.6g}')
        t = cfg.time if i == n else t + h
        times[i], states[i] = t, x
    logger.debug('%s: integrated %d steps to t=%g', sys.name, n, t)
    return Trajectory(times, states)


def conservation_drift(traj, inv, stride=1):
    """``max |I(t) - I(0)| / (1 + |I(0)|)`` per entry of ``inv``."""
    return np.array([_relative_drift(_series(traj, entry, stride)) for entry in inv])


def record_conservation(traj, inv, stride=1):
    series = {entry.name: _series(traj, entry, stride) for entry in inv}
    drift = {name: _relative_drift(values) for name, values in series.items()}
    return replace(traj, series={**traj.series, **series}, drift={**traj.drift, **drift})


def _series(traj, entry, stride):
    states = traj.states[::max(1, stride)]
    if (len(traj.states) - 1) % max(1, stride):
        states = np.vstack([states, traj.states[-1:]])
    return np.array([entry(x) for x in states])


def _relative_drift(values):
    return float(np.max(np.abs(values - values[0])) / (1.0 + abs(values[0])))


def convergence_order(sys: PhaseSpaceSystem, x0, inv, steps: Sequence[float], time: float = DEFAULT_TIME,
                      reference: Optional[Callable[[float], np.ndarray]] = None,
                      admixture: Sequence[float] = ()) -> float:
    """Least-squares slope of log(error) against log(step).

    The error is the largest invariant drift, or the end-point distance to
    ``reference(time)`` when an exact solution is supplied.
    """
    steps = sorted(float(h) for h in steps)
    if len(steps) < 3:
        raise UsageError('convergence_order needs at least three step sizes')
    ratios = np.array(steps[1:]) / np.array(steps[:-1])
    if np.max(np.abs(ratios - ratios[0])) > 1e-6 * ratios[0]:
        raise UsageError('step sizes must form a geometric progression')
    errors = []
    for h in steps:
        traj = integrate_flow(sys, x0, IntegratorConfig(step=h, time=time, admixture=tuple(admixture)))
        if reference is not None:
            errors.append(float(np.max(np.abs(traj.final - np.asarray(reference(time), dtype=float)))))
        else:
            errors.append(float(np.max(conservation_drift(traj, inv))))
    if max(errors) < DRIFT_FLOOR:
        raise DriftAtFloor(errors)
    slope = np.polyfit(np.log(steps), np.log(np.maximum(errors, DRIFT_FLOOR)), 1)[0]
    logger.info('%s: errors %s -> order %.3f', sys.name, ['%.3e' % e for e in errors], slope)
    return float(slope)
