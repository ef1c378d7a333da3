"""Conservation laws generated by a (possibly non-Noether) symmetry.

Three constructions share one container, :class:`InvariantSet`:

* ``regular``: ``I(k) = <W^k, omega_E^k>`` with ``omega_E = L_E omega``,
  symbolic, k = 1..n;
* ``presymplectic``: the same contraction with the pseudo-inverse bivector,
  evaluated pointwise, k = 1..r where 2r is the rank of omega;
* ``poisson``: ``I(k) = [E, W]^(r-k) ^ W^k / W^r``, k = 0..r.

Pairings carry no factorial normalization, so ``I(k)`` equals ``(k!)^2``
times the k-th half-spectrum coefficient of ``W . omega_E``.
"""
import logging
from dataclasses import dataclass, field
from math import factorial
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from .errors import (
    ComputationError,
    DegenerateForm,
    DimensionTooLarge,
    FNotConserved,
    NotASymmetry,
    NotPoisson,
    NotProportional,
    RankDrift,
    RankMismatch,
    UsageError,
)
from .expr import ScalarExpr, differentiate, div, from_sympy, is_polynomial, to_sympy
from .exterior import (
    DifferentialForm,
    form_power,
    full_pairing,
    lie_derivative_form,
    multivector_power,
    schouten_bracket,
    wedge,
)
from .mechanics import (
    FD_STEP,
    IDENTITY_TOL,
    SAMPLE_POINTS,
    SYMMETRY_TOL,
    PhaseSpaceSystem,
    SymmetryGenerator,
    bivector_at,
    check_symmetry,
    kernel_and_pseudoinverse_at,
    max_residual,
    numeric_rank,
    poisson_bracket,
    representative_dependence,
    sample_points,
    symbolic_bivector,
    symplectic_form,
    validate_poisson,
)

logger = logging.getLogger(__name__)

REGULAR = 'regular'
PRESYMPLECTIC = 'presymplectic'
POISSON = 'poisson'
CANDIDATE = 'candidate'

ORACLE_FLOOR = 1e-12


@dataclass(frozen=True)
class InvariantEntry:
    k: int
    function: Callable[[np.ndarray], float] = field(repr=False)
    expression: Optional[ScalarExpr] = None
    label: str = ''
    trivial: bool = False

    @property
    def symbolic(self) -> bool:
        return self.expression is not None

    @property
    def name(self) -> str:
        return self.label or f'I({self.k})'

    def __call__(self, x):
        return float(self.function(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class InvariantSet:
    path: str
    entries: Tuple[InvariantEntry, ...]
    half_rank: int
    normalization: str = ''
    representative_dependence: float = 0.0

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, k):
        for entry in self.entries:
            if entry.k == k:
                return entry
        raise KeyError(k)

    @property
    def nontrivial(self) -> Tuple[InvariantEntry, ...]:
        return tuple(e for e in self.entries if not e.trivial)

    def evaluate(self, x) -> np.ndarray:
        return np.array([entry(x) for entry in self.entries])

    @classmethod
    def from_expressions(cls, sys: PhaseSpaceSystem, expressions: Sequence[ScalarExpr],
                         labels: Optional[Sequence[str]] = None) -> 'InvariantSet':
        """Wrap user-supplied candidate functions for drift and bracket checks."""
        labels = list(labels or [''] * len(expressions))
        entries = []
        for k, (e, label) in enumerate(zip(expressions, labels), start=1):
            sys.check_names(e)
            entries.append(_symbolic_entry(sys, k, e, label=label))
        return cls(CANDIDATE, tuple(entries), half_rank=0, normalization='user candidates')


def _tidy(e, sys):
    try:
        s = to_sympy(e)
        if is_polynomial(e, sys.coordinates):
            s = sympy.expand(s)
        else:
            s = sympy.cancel(s)
        return from_sympy(s, sys.parameters)
    except ComputationError:
        return e


def _symbolic_entry(sys, k, e, label='', trivial=False):
    return InvariantEntry(k, sys.compile(e), expression=e, label=label, trivial=trivial)


def symmetry_form(sys: PhaseSpaceSystem, gen: SymmetryGenerator,
                  rng: Optional[np.random.Generator] = None) -> DifferentialForm:
    """``omega_E = L_E omega``."""
    return lie_derivative_form(gen.field, symplectic_form(sys, rng))


# lutzky invariants on 2-forms

def require_symmetry(sys, gen, tol=SYMMETRY_TOL, rng=None):
    verdict = check_symmetry(sys, gen, tol, rng)
    if not verdict.is_symmetry:
        raise NotASymmetry(f'{sys.name}: generator is not a symmetry (max |[E, X_h]| = {verdict.residual:.3e})')
    return verdict


def _check_constant_rank(sys, points, rank_at, error):
    ranks = {rank_at(x) for x in points}
    if len(ranks) > 1:
        raise error(f'{sys.name}: rank varies over sampled points {sorted(ranks)}')
    return ranks.pop()


def lutzky_invariants(sys: PhaseSpaceSystem, gen: SymmetryGenerator,
                      rng: Optional[np.random.Generator] = None, points: int = 20,
                      tol: float = SYMMETRY_TOL) -> InvariantSet:
    if sys.is_poisson:
        raise UsageError('lutzky_invariants needs a 2-form; use poisson_invariants')
    rng = rng if rng is not None else np.random.default_rng(0)
    require_symmetry(sys, gen, tol, rng)
    omega_E = symmetry_form(sys, gen, rng)
    if not sys.is_presymplectic:
        try:
            W = symbolic_bivector(sys, rng)
        except DimensionTooLarge:
            logger.info('%s: falling back to pointwise invariants for d=%d', sys.name, sys.dim)
        else:
            n = sys.dim // 2
            entries = []
            for k in range(1, n + 1):
                e = _tidy(full_pairing(multivector_power(W, k), form_power(omega_E, k)), sys)
                entries.append(_symbolic_entry(sys, k, e))
            return InvariantSet(REGULAR, tuple(entries), half_rank=n,
                                normalization='I(k) = <W^k, omega_E^k>, no factorial normalization')

    sampled = sample_points(sys, rng, points)
    rank = _check_constant_rank(sys, sampled, lambda x: kernel_and_pseudoinverse_at(sys, x).rank, RankMismatch)
    r = rank // 2
    dependence = representative_dependence(sys, omega_E, rng, points) if rank < sys.dim else 0.0
    if dependence > tol:
        logger.warning('%s: kernel does not annihilate omega_E (%.3e); invariants depend on the '
                       'bivector representative', sys.name, dependence)
    cache = {}

    def values_at(x):
        key = x.tobytes()
        if key not in cache:
            split = kernel_and_pseudoinverse_at(sys, x)
            if split.rank != rank:
                raise RankMismatch(f'{sys.name}: rank {split.rank} != {rank} at {x}')
            theta = omega_E.at(x, sys.parameters)
            W_power, theta_power, values = None, None, []
            for _ in range(r):
                W_power = split.bivector if W_power is None else W_power.wedge(split.bivector)
                theta_power = theta if theta_power is None else theta_power.wedge(theta)
                values.append(W_power.pair(theta_power))
            cache.clear()
            cache[key] = values
        return cache[key]

    entries = tuple(InvariantEntry(k, (lambda x, k=k: values_at(x)[k - 1])) for k in range(1, r + 1))
    path = PRESYMPLECTIC if sys.is_presymplectic else REGULAR
    return InvariantSet(path, entries, half_rank=r,
                        normalization='I(k) = <W^k, omega_E^k> with the Moore-Penrose bivector, pointwise',
                        representative_dependence=dependence)


# poisson invariants

def poisson_invariants(sys: PhaseSpaceSystem, gen: SymmetryGenerator, tol: float = SYMMETRY_TOL,
                       rng: Optional[np.random.Generator] = None, points: int = SAMPLE_POINTS) -> InvariantSet:
    if not sys.is_poisson:
        raise UsageError('poisson_invariants needs a bivector structure')
    rng = rng if rng is not None else np.random.default_rng(0)
    jacobi = validate_poisson(sys.structure, sys.parameters, rng)
    if not jacobi:
        raise NotPoisson(f'{sys.name}: [W, W] residual {jacobi.residual:.3e}')
    require_symmetry(sys, gen, tol, rng)
    W = sys.structure
    sampled = sample_points(sys, rng, points)
    rank = _check_constant_rank(sys, sampled, lambda x: numeric_rank(sys.structure_matrix_at(x)), RankDrift)
    r = rank // 2
    B = schouten_bracket(gen.field, W)
    top = multivector_power(W, r)
    numerators = [wedge(multivector_power(B, r - k), multivector_power(W, k)) for k in range(r + 1)]

    def ratio_at(k, x):
        denominator = top.at(x, sys.parameters)
        numerator = numerators[k].at(x, sys.parameters)
        pivot = int(np.argmax(np.abs(denominator.values)))
        if denominator.values[pivot] == 0.0:
            raise RankDrift(f'{sys.name}: W^{r} vanishes at {x}')
        ratio = numerator.values[pivot] / denominator.values[pivot]
        residual = np.max(np.abs(numerator.values - ratio * denominator.values))
        if residual > tol * (1.0 + np.max(np.abs(numerator.values))):
            raise NotProportional(f'{sys.name}: I({k}) not proportional to W^{r} at {x} '
                                  f'(residual {residual:.3e})')
        return float(ratio)

    for x in sampled:
        for k in range(r + 1):
            ratio_at(k, x)

    entries = []
    pivots = list(top.items())
    for k in range(r + 1):
        trivial = k == r
        if len(pivots) == 1:
            key, denominator = pivots[0]
            e = _tidy(div(numerators[k].component(key), denominator), sys)
            entries.append(_symbolic_entry(sys, k, e, trivial=trivial))
        else:
            entries.append(InvariantEntry(k, (lambda x, k=k: ratio_at(k, x)), trivial=trivial))
    return InvariantSet(POISSON, tuple(entries), half_rank=r,
                        normalization='I(k) = [E, W]^(r-k) ^ W^k / W^r; I(r) = 1')


# integrability

@dataclass(frozen=True)
class YangBaxterResult:
    ok: bool
    residual: float
    applicable: bool = True

    def __bool__(self):
        return self.ok


def yang_baxter_check(sys: PhaseSpaceSystem, gen: SymmetryGenerator, rng: Optional[np.random.Generator] = None,
                      trials: int = 20, tol: float = IDENTITY_TOL) -> YangBaxterResult:
    """``[[E, [E, W]], W] = 0``; not applicable without a symbolic bivector."""
    rng = rng if rng is not None else np.random.default_rng(0)
    try:
        W = symbolic_bivector(sys, rng)
    except (DegenerateForm, DimensionTooLarge) as exc:
        logger.info('%s: Yang-Baxter check skipped (%s)', sys.name, exc)
        return YangBaxterResult(False, float('nan'), applicable=False)
    E = gen.field
    nested = schouten_bracket(schouten_bracket(E, schouten_bracket(E, W)), W)
    residual = max_residual(sys, nested, rng, trials)
    return YangBaxterResult(residual <= tol, residual)


def _gradient_function(sys, entry, step=FD_STEP):
    if entry.symbolic:
        parts = [sys.compile(differentiate(entry.expression, name)) for name in sys.coordinates]
        return lambda x: np.array([f(x) for f in parts])

    def gradient(x):
        g = np.zeros(sys.dim)
        for m in range(sys.dim):
            e = np.zeros(sys.dim)
            e[m] = step
            g[m] = (entry(x + e) - entry(x - e)) / (2.0 * step)
        return g
    return gradient


@dataclass(frozen=True)
class InvolutionReport:
    labels: Tuple[str, ...]
    residuals: np.ndarray
    tol: float

    @property
    def ok(self) -> bool:
        return bool(np.all(self.residuals <= self.tol))

    def __bool__(self):
        return self.ok


def involution_check(inv: InvariantSet, sys: PhaseSpaceSystem, tol: float = SYMMETRY_TOL,
                     rng: Optional[np.random.Generator] = None, points: int = SAMPLE_POINTS) -> InvolutionReport:
    """Max ``|{I(l), I(k)}|`` over random points for every pair."""
    rng = rng if rng is not None else np.random.default_rng(0)
    entries = list(inv)
    n = len(entries)
    residuals = np.zeros((n, n))
    if n > 1:
        gradients = [_gradient_function(sys, e) for e in entries]
        for x in sample_points(sys, rng, points):
            W = bivector_at(sys, x).to_matrix()
            G = np.array([g(x) for g in gradients])
            brackets = np.abs(G @ W @ G.T)
            residuals = np.maximum(residuals, brackets)
    return InvolutionReport(tuple(e.name for e in entries), residuals, tol)


def bracket_descent(inv: InvariantSet, f: ScalarExpr, sys: PhaseSpaceSystem,
                    initial_points: Sequence[np.ndarray], cfg, tol: float = 1e-6,
                    rng: Optional[np.random.Generator] = None) -> InvariantSet:
    """New integrals ``{I(k), f}`` from a conserved ``f``."""
    from .flow import conservation_drift, integrate_flow

    sys.check_names(f)
    candidate = InvariantSet.from_expressions(sys, [f], labels=['f'])
    for x0 in initial_points:
        trajectory = integrate_flow(sys, x0, cfg)
        drift = conservation_drift(trajectory, candidate)[0]
        if drift > tol:
            raise FNotConserved(f'{sys.name}: f drifts by {drift:.3e} from {np.asarray(x0)}')
    entries = []
    for entry in inv.nontrivial:
        label = f'{{{entry.name}, f}}'
        if entry.symbolic and not sys.is_presymplectic:
            e = _tidy(poisson_bracket(entry.expression, f, sys, rng), sys)
            entries.append(_symbolic_entry(sys, entry.k, e, label=label))
            continue
        grad_I = _gradient_function(sys, entry)
        grad_f = _gradient_function(sys, _symbolic_entry(sys, 0, f))

        def bracket(x, grad_I=grad_I):
            return float(grad_I(x) @ bivector_at(sys, x).to_matrix() @ grad_f(x))
        entries.append(InvariantEntry(entry.k, bracket, label=label))
    return InvariantSet(inv.path, tuple(entries), inv.half_rank,
                        normalization='{I(k), f} for a conserved f')


# characteristic polynomial cross-check

def charpoly_oracle(sys: PhaseSpaceSystem, gen: SymmetryGenerator, point,
                    rng: Optional[np.random.Generator] = None,
                    omega_E: Optional[DifferentialForm] = None) -> np.ndarray:
    """Coefficients ``[1, c1, ..., cd]`` of ``det(lambda - W . omega_E)``."""
    omega_E = omega_E if omega_E is not None else symmetry_form(sys, gen, rng)
    x = sys.point(point)
    W = bivector_at(sys, x).to_matrix()
    theta = omega_E.at(x, sys.parameters).to_matrix()
    return np.real(np.poly(W @ theta))


def half_spectrum_coefficients(coefficients: Sequence[float]) -> List[float]:
    """Coefficients ``q_k`` of the series square root of ``1 + c1 s + c2 s^2 + ...``.

    ``det(1 - s W omega_E)`` is a perfect square; ``I(k) = (k!)^2 q_k``.
    """
    c = list(coefficients)
    n = (len(c) - 1) // 2
    q = [1.0]
    for k in range(1, n + 1):
        q.append((c[k] - sum(q[j] * q[k - j] for j in range(1, k))) / 2.0)
    return q[1:]


def oracle_ratios(inv: InvariantSet, sys: PhaseSpaceSystem, gen: SymmetryGenerator, points,
                  rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """``I(k) / q_k`` at each point (rows) for k = 1..r (columns); NaN where ``q_k`` vanishes."""
    omega_E = symmetry_form(sys, gen, rng)
    entries = [e for e in inv if e.k >= 1]
    rows = []
    for x in points:
        q = half_spectrum_coefficients(charpoly_oracle(sys, gen, x, omega_E=omega_E))
        rows.append([e(x) / q[e.k - 1] if abs(q[e.k - 1]) > ORACLE_FLOOR else np.nan for e in entries])
    return np.array(rows)


def factorial_normalization(k: int) -> int:
    return factorial(k) ** 2
