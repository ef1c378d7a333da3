"""System-level constructions on symplectic, presymplectic and Poisson structures.

Orientation convention: the bivector ``W`` is pinned by ``{f, g} = X_f g``.
With ``Omega`` the full antisymmetric matrix of the 2-form
(``Omega[i, j] = omega(d_i, d_j)``) this gives ``W = -Omega^{-1}`` (or minus
the Moore-Penrose pseudo-inverse when ``omega`` is degenerate) and, for every
structure, ``X_f^i = sum_j W^{ji} d_j f``.
"""
import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from .errors import (
    ConfigError,
    DegenerateForm,
    DimensionTooLarge,
    DomainPointError,
    NoCorrespondingForm,
    NoDynamics,
    OddRank,
    ResamplingExhausted,
    SingularPoint,
    UnboundNameError,
    UsageError,
)
from .expr import (
    ZERO,
    EvalContext,
    ScalarExpr,
    add,
    compile_expression,
    const,
    differentiate,
    div,
    free_names,
    from_sympy,
    is_polynomial,
    mul,
    neg,
    to_sympy,
)
from .exterior import (
    DifferentialForm,
    MultiVectorField,
    PointTensor,
    differential,
    exterior_derivative,
    full_pairing,
    interior_product,
    schouten_bracket,
    wedge,
)

logger = logging.getLogger(__name__)

SYMPLECTIC = 'symplectic-form'
PRESYMPLECTIC = 'presymplectic-form'
POISSON = 'poisson-bivector'
STRUCTURE_KINDS = (SYMPLECTIC, PRESYMPLECTIC, POISSON)

RANK_TOL = 1e-10
SYMMETRY_TOL = 1e-8
IDENTITY_TOL = 1e-9
SAMPLE_POINTS = 50
FD_STEP = 1e-5
MAX_SYMBOLIC_DIM = 6
SAMPLE_LOW, SAMPLE_HIGH = -2.0, 2.0


@dataclass(frozen=True, eq=False)
class PhaseSpaceSystem:
    coordinates: Tuple[str, ...]
    structure: Union[DifferentialForm, MultiVectorField]
    hamiltonian: ScalarExpr
    structure_kind: str
    parameters: Mapping[str, float] = field(default_factory=dict)
    kernel: Tuple[MultiVectorField, ...] = ()
    name: str = 'system'

    def __post_init__(self):
        if len(self.coordinates) < 2:
            raise UsageError('a phase space needs at least two coordinates')
        if len(set(self.coordinates)) != len(self.coordinates):
            raise UsageError('coordinate names must be unique')
        if self.structure_kind not in STRUCTURE_KINDS:
            raise UsageError(f'unknown structure kind {self.structure_kind!r}')
        expected = MultiVectorField if self.structure_kind == POISSON else DifferentialForm
        if not isinstance(self.structure, expected) or self.structure.degree != 2:
            raise UsageError(f'{self.structure_kind} needs a degree-2 {expected.__name__}')
        if self.structure.chart != tuple(self.coordinates):
            raise UsageError('structure chart differs from the declared coordinates')
        self.check_names(self.hamiltonian)
        for value in self.structure.coefficients.values():
            self.check_names(value)
        for u in self.kernel:
            if u.degree != 1 or u.chart != tuple(self.coordinates):
                raise UsageError('kernel elements must be vector fields on the system chart')
            for value in u.coefficients.values():
                self.check_names(value)

    @property
    def dim(self) -> int:
        return len(self.coordinates)

    @property
    def is_poisson(self) -> bool:
        return self.structure_kind == POISSON

    @property
    def is_presymplectic(self) -> bool:
        return self.structure_kind == PRESYMPLECTIC

    def check_names(self, e: ScalarExpr):
        coords, params = free_names(e)
        unknown = (coords - set(self.coordinates)) | (params - set(self.parameters))
        if unknown:
            raise UnboundNameError(unknown)

    def compile(self, e: ScalarExpr) -> Callable:
        return compile_expression(e, self.coordinates, self.parameters)

    def point(self, x) -> np.ndarray:
        if isinstance(x, EvalContext):
            return x.vector(self.coordinates)
        return np.asarray(x, dtype=float)

    def context(self, x) -> EvalContext:
        x = self.point(x)
        return EvalContext(dict(zip(self.coordinates, map(float, x))), dict(self.parameters))

    def structure_matrix_at(self, x) -> np.ndarray:
        try:
            return self.structure.at(self.point(x), self.parameters).to_matrix()
        except DomainPointError as exc:
            raise SingularPoint(f'structure undefined at {self.point(x)}') from exc

    def validate_kernel(self, rng: Optional[np.random.Generator] = None, trials: int = 20,
                        tol: float = IDENTITY_TOL):
        """Every declared kernel vector must satisfy ``i_u omega = 0``."""
        if not self.kernel:
            return
        if self.is_poisson:
            raise ConfigError('kernel vectors are only meaningful for 2-form structures')
        rng = rng if rng is not None else np.random.default_rng(0)
        for n, u in enumerate(self.kernel):
            contraction = interior_product(u, self.structure)
            residual = max_residual(self, contraction, rng, trials)
            if residual > tol:
                raise ConfigError(f'kernel vector {n} violates i_u omega = 0 (residual {residual:.3e})',
                                  location='kernel')


@dataclass(frozen=True)
class SymmetryGenerator:
    field: MultiVectorField

    def __post_init__(self):
        if self.field.degree != 1:
            raise UsageError('a symmetry generator is a vector field')


class SymmetryClass(str, enum.Enum):
    STRICT = 'strict-symmetry'
    UP_TO_HAMILTONIAN = 'symmetry-up-to-hamiltonian'
    UP_TO_KERNEL = 'symmetry-up-to-kernel'
    NOT_A_SYMMETRY = 'not-a-symmetry'


class FieldClass(str, enum.Enum):
    HAMILTONIAN = 'hamiltonian'
    LOCALLY_HAMILTONIAN = 'locally-hamiltonian'
    NEITHER = 'neither'


@dataclass(frozen=True)
class FieldClassification:
    kind: FieldClass
    residual: float
    potential: Optional[ScalarExpr] = None


@dataclass(frozen=True)
class SymmetryVerdict:
    classification: SymmetryClass
    residual: float
    witness: Optional[MultiVectorField] = None
    field_class: Optional[FieldClassification] = None
    kernel_residual: Optional[float] = None

    @property
    def is_symmetry(self) -> bool:
        return self.classification != SymmetryClass.NOT_A_SYMMETRY


@dataclass(frozen=True)
class KernelSplit:
    kernel: List[PointTensor]
    bivector: PointTensor
    rank: int

    @property
    def half_rank(self) -> int:
        return self.rank // 2


# sampling

def sample_points(sys: PhaseSpaceSystem, rng: np.random.Generator, count: int,
                  defined_at: Optional[Callable] = None) -> List[np.ndarray]:
    """Uniform points in [-2, 2]^d, resampled where ``defined_at`` (default: the
    structure) cannot be evaluated."""
    defined_at = defined_at or sys.structure_matrix_at
    points, rejected = [], 0
    while len(points) < count:
        x = rng.uniform(SAMPLE_LOW, SAMPLE_HIGH, size=sys.dim)
        try:
            defined_at(x)
        except (DomainPointError, SingularPoint):
            rejected += 1
            if rejected > 10 * count:
                raise ResamplingExhausted(f'{sys.name}: structure undefined almost everywhere')
            continue
        points.append(x)
    if rejected:
        logger.debug('%s: resampled %d point(s)', sys.name, rejected)
    return points


def max_residual(sys: PhaseSpaceSystem, obj, rng: np.random.Generator, trials: int = 20) -> float:
    if isinstance(obj, ScalarExpr):
        f = sys.compile(obj)
        evaluate = lambda x: abs(f(x))
    else:
        evaluate = lambda x: obj.at(x, sys.parameters).max_abs()
    worst = 0.0
    for x in sample_points(sys, rng, trials, defined_at=evaluate):
        worst = max(worst, evaluate(x))
    return worst


# symbolic matrices

def symbolic_matrix(F) -> List[List[ScalarExpr]]:
    n = F.dim
    M = [[ZERO] * n for _ in range(n)]
    for (i, j), value in F.items():
        M[i][j] = value
        M[j][i] = neg(value)
    return M


def _symbolic_inverse(M):
    n = len(M)
    memo = {}

    def det(rows, cols):
        if not rows:
            return const(1)
        key = (rows, cols)
        if key in memo:
            return memo[key]
        r, rest = rows[0], rows[1:]
        terms = []
        for pos, c in enumerate(cols):
            entry = M[r][c]
            if entry.is_zero:
                continue
            minor = det(rest, cols[:pos] + cols[pos + 1:])
            if minor.is_zero:
                continue
            term = mul(entry, minor)
            terms.append(term if pos % 2 == 0 else neg(term))
        memo[key] = add(*terms)
        return memo[key]

    full = tuple(range(n))
    determinant = det(full, full)
    inverse = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = det(full[:j] + full[j + 1:], full[:i] + full[i + 1:])
            if minor.is_zero:
                continue
            cofactor = minor if (i + j) % 2 == 0 else neg(minor)
            inverse[i][j] = div(cofactor, determinant)
    return inverse


def numeric_rank(M: np.ndarray, tol: float = RANK_TOL) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def _require_full_rank(sys, matrix_at, rng, what):
    for x in sample_points(sys, rng, 5):
        rank = numeric_rank(matrix_at(x))
        if rank < sys.dim:
            raise DegenerateForm(f'{sys.name}: {what} has rank {rank} < {sys.dim} at {x}')


def invert_symplectic_form(sys: PhaseSpaceSystem, rng: Optional[np.random.Generator] = None) -> MultiVectorField:
    if sys.is_poisson:
        raise UsageError('invert_symplectic_form needs a 2-form structure')
    if sys.dim > MAX_SYMBOLIC_DIM:
        raise DimensionTooLarge(f'symbolic inversion is limited to d <= {MAX_SYMBOLIC_DIM}')
    rng = rng if rng is not None else np.random.default_rng(0)
    _require_full_rank(sys, sys.structure_matrix_at, rng, 'the 2-form')
    inverse = _symbolic_inverse(symbolic_matrix(sys.structure))
    n = sys.dim
    return MultiVectorField(sys.coordinates, 2, {(i, j): neg(inverse[i][j])
                                                 for i in range(n) for j in range(i + 1, n)})


def _form_from_bivector(sys, rng):
    if sys.dim > MAX_SYMBOLIC_DIM:
        raise DimensionTooLarge(f'symbolic inversion is limited to d <= {MAX_SYMBOLIC_DIM}')
    _require_full_rank(sys, sys.structure_matrix_at, rng, 'the bivector')
    inverse = _symbolic_inverse(symbolic_matrix(sys.structure))
    n = sys.dim
    return DifferentialForm(sys.coordinates, 2, {(i, j): neg(inverse[i][j])
                                                 for i in range(n) for j in range(i + 1, n)})


def kernel_and_pseudoinverse_at(sys: PhaseSpaceSystem, point, tol: float = RANK_TOL) -> KernelSplit:
    """Kernel basis, pseudo-inverse bivector and rank of the 2-form at a point."""
    if sys.is_poisson:
        raise UsageError('kernel_and_pseudoinverse_at needs a 2-form structure')
    Omega = sys.structure_matrix_at(point)
    U, s, Vt = np.linalg.svd(Omega)
    rank = 0 if s[0] == 0.0 else int(np.sum(s > tol * s[0]))
    if rank % 2:
        raise OddRank(f'numerical rank {rank} is odd at {sys.point(point)}; adjust the tolerance')
    pinv = (Vt[:rank].T / s[:rank]) @ U[:, :rank].T
    W = -pinv
    W = 0.5 * (W - W.T)
    kernel = [PointTensor.from_vector(v) for v in Vt[rank:]]
    return KernelSplit(kernel=kernel, bivector=PointTensor.from_matrix(W), rank=rank)


def bivector_at(sys: PhaseSpaceSystem, x, tol: float = RANK_TOL) -> PointTensor:
    """W at a point for every structure kind (the pseudo-inverse for 2-forms)."""
    if sys.is_poisson:
        return PointTensor.from_matrix(sys.structure_matrix_at(x))
    return kernel_and_pseudoinverse_at(sys, x, tol).bivector


def symbolic_bivector(sys: PhaseSpaceSystem, rng: Optional[np.random.Generator] = None) -> MultiVectorField:
    if sys.is_poisson:
        return sys.structure
    if sys.is_presymplectic:
        raise DegenerateForm(f'{sys.name}: a presymplectic form has no symbolic bivector')
    return invert_symplectic_form(sys, rng)


def symplectic_form(sys: PhaseSpaceSystem, rng: Optional[np.random.Generator] = None) -> DifferentialForm:
    if not sys.is_poisson:
        return sys.structure
    return _form_from_bivector(sys, rng if rng is not None else np.random.default_rng(0))


def poisson_counterpart(sys: PhaseSpaceSystem, rng: Optional[np.random.Generator] = None) -> PhaseSpaceSystem:
    W = invert_symplectic_form(sys, rng)
    return PhaseSpaceSystem(coordinates=sys.coordinates, structure=W, hamiltonian=sys.hamiltonian,
                            structure_kind=POISSON, parameters=dict(sys.parameters),
                            name=f'{sys.name}-poisson')


# Hamiltonian vector fields

def sharp(W: MultiVectorField, alpha: DifferentialForm) -> MultiVectorField:
    """Vector field ``X^i = sum_j W^{ji} alpha_j``."""
    n = W.dim
    out = {}
    for i in range(n):
        terms = [mul(W.component((j, i)), alpha.component((j,))) for j in range(n)]
        out[(i,)] = add(*terms)
    return MultiVectorField(W.chart, 1, out)


class PointwiseField:
    """Minimum-norm Hamiltonian field of a degenerate 2-form, plus an optional
    admixture ``sum_k c_k u_k`` of the declared kernel vectors."""

    def __init__(self, sys, function=None, admixture=(), tol=RANK_TOL):
        self.sys = sys
        self.tol = tol
        f = sys.hamiltonian if function is None else function
        self._gradient = [sys.compile(differentiate(f, name)) for name in sys.coordinates]
        self._trivial = all(differentiate(f, name).is_zero for name in sys.coordinates)
        admixture = list(admixture or ())
        if len(admixture) > len(sys.kernel):
            raise UsageError(f'{len(admixture)} admixture coefficients for {len(sys.kernel)} kernel vectors')
        self.admixture = admixture
        self._kernel = [(c, [sys.compile(u.component((i,))) for i in range(sys.dim)])
                        for c, u in zip(admixture, sys.kernel) if c != 0.0]

    def gradient(self, x) -> np.ndarray:
        return np.array([g(x) for g in self._gradient])

    def representative(self, x) -> np.ndarray:
        if self._trivial:
            return np.zeros(self.sys.dim)
        W = kernel_and_pseudoinverse_at(self.sys, x, self.tol).bivector.to_matrix()
        return W.T @ self.gradient(x)

    def consistency_residual(self, x) -> float:
        if self._trivial:
            return 0.0
        Omega = self.sys.structure_matrix_at(x)
        grad = self.gradient(x)
        X = self.representative(x)
        return float(np.max(np.abs(Omega @ X - grad)) / (1.0 + np.max(np.abs(grad))))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        X = self.representative(x)
        for c, components in self._kernel:
            X = X + c * np.array([u(x) for u in components])
        return X


def hamiltonian_vector_field(sys: PhaseSpaceSystem, rng: Optional[np.random.Generator] = None,
                             function: Optional[ScalarExpr] = None,
                             points: int = 20) -> Union[MultiVectorField, PointwiseField]:
    """``X_f`` for ``f`` (default: the Hamiltonian); symbolic for regular and
    Poisson structures, a :class:`PointwiseField` for degenerate 2-forms."""
    rng = rng if rng is not None else np.random.default_rng(0)
    f = sys.hamiltonian if function is None else function
    if sys.is_poisson:
        return sharp(sys.structure, differential(f, sys.coordinates))
    if not sys.is_presymplectic:
        try:
            return sharp(invert_symplectic_form(sys, rng), differential(f, sys.coordinates))
        except DimensionTooLarge:
            logger.info('%s: d=%d, using the pointwise Hamiltonian field', sys.name, sys.dim)
    field_ = PointwiseField(sys, function=f)
    for x in sample_points(sys, rng, points):
        residual = field_.consistency_residual(x)
        if residual > SYMMETRY_TOL:
            raise NoDynamics(f'{sys.name}: dh is not in the range of omega at {x} (residual {residual:.3e})')
    return field_


def field_function(sys: PhaseSpaceSystem, X) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(X, MultiVectorField):
        components = [sys.compile(X.component((i,))) for i in range(sys.dim)]
        return lambda x: np.array([c(x) for c in components])
    return X


def hamiltonian_field_at(sys: PhaseSpaceSystem, admixture: Sequence[float] = (),
                         rng: Optional[np.random.Generator] = None) -> Callable[[np.ndarray], np.ndarray]:
    """Numeric ``x -> X_h(x)`` for every structure kind.

    ``admixture`` adds ``sum_k c_k u_k`` over the declared kernel vectors and
    is only accepted for presymplectic systems.
    """
    admixture = [float(c) for c in (admixture or ())]
    if any(admixture) and not sys.is_presymplectic:
        raise UsageError('kernel admixture needs a presymplectic system')
    X = hamiltonian_vector_field(sys, rng)
    if isinstance(X, PointwiseField):
        return PointwiseField(sys, admixture=admixture, tol=X.tol) if admixture else X
    return field_function(sys, X)


def poisson_bracket(f: ScalarExpr, g: ScalarExpr, sys: PhaseSpaceSystem,
                    rng: Optional[np.random.Generator] = None) -> Union[ScalarExpr, Callable]:
    """``{f, g} = i_W(df ^ dg)``; a pointwise callable for presymplectic systems."""
    df, dg = differential(f, sys.coordinates), differential(g, sys.coordinates)
    if not sys.is_presymplectic:
        return full_pairing(symbolic_bivector(sys, rng), wedge(df, dg))
    grad_f = [sys.compile(df.component((i,))) for i in range(sys.dim)]
    grad_g = [sys.compile(dg.component((i,))) for i in range(sys.dim)]

    def bracket(x):
        W = bivector_at(sys, x).to_matrix()
        return float(np.array([a(x) for a in grad_f]) @ W @ np.array([b(x) for b in grad_g]))
    return bracket


@dataclass(frozen=True)
class PoissonValidation:
    ok: bool
    residual: float

    def __bool__(self):
        return self.ok


def validate_poisson(W: MultiVectorField, parameters: Optional[Mapping[str, float]] = None,
                     rng: Optional[np.random.Generator] = None, trials: int = 20,
                     tol: float = IDENTITY_TOL) -> PoissonValidation:
    """Jacobi identity as ``[W, W] = 0`` at random points."""
    if W.degree != 2:
        raise UsageError('validate_poisson needs a bivector')
    rng = rng if rng is not None else np.random.default_rng(0)
    jacobiator = schouten_bracket(W, W)
    worst, accepted, rejected = 0.0, 0, 0
    while accepted < trials:
        x = rng.uniform(SAMPLE_LOW, SAMPLE_HIGH, size=W.dim)
        try:
            value = jacobiator.at(x, parameters).max_abs()
        except DomainPointError:
            rejected += 1
            if rejected > 10 * trials:
                raise ResamplingExhausted('bivector undefined almost everywhere')
            continue
        accepted += 1
        worst = max(worst, value)
    ok = worst <= tol
    if not ok:
        logger.info('[W, W] residual %.3e exceeds %.1e', worst, tol)
    return PoissonValidation(ok, worst)


def _jacobian(function, x, step=FD_STEP):
    n = x.size
    J = np.zeros((n, n))
    for m in range(n):
        e = np.zeros(n)
        e[m] = step
        J[:, m] = (function(x + e) - function(x - e)) / (2.0 * step)
    return J


# classification

def _form_potential(sys, alpha):
    """Polynomial antiderivative of a closed polynomial 1-form, or None."""
    for value in alpha.coefficients.values():
        if not is_polynomial(value, sys.coordinates):
            return None
    t = sympy.Symbol('_t', real=True)
    symbols = [sympy.Symbol(name, real=True) for name in sys.coordinates]
    scaled = {s: t * s for s in symbols}
    integrand = sum((s * to_sympy(alpha.component((i,))).xreplace(scaled)
                     for i, s in enumerate(symbols)), sympy.Integer(0))
    potential = sympy.expand(sympy.integrate(sympy.expand(integrand), (t, 0, 1)))
    return from_sympy(potential, sys.parameters)


def _classify_form(sys, omega, K, rng, tol, points):
    alpha = -interior_product(K, omega)
    closed_residual = max_residual(sys, exterior_derivative(alpha), rng, points)
    if closed_residual > tol:
        return FieldClassification(FieldClass.NEITHER, closed_residual)
    potential = _form_potential(sys, alpha)
    if potential is not None:
        check = max_residual(sys, differential(potential, sys.coordinates) - alpha, rng, points)
        if check <= tol:
            return FieldClassification(FieldClass.HAMILTONIAN, closed_residual, potential)
    return FieldClassification(FieldClass.LOCALLY_HAMILTONIAN, closed_residual)


def _classify_degenerate_poisson(sys, K, rng, tol, points):
    K_at = field_function(sys, K)

    def alpha_at(x):
        W = sys.structure_matrix_at(x)
        k = K_at(x)
        alpha, *_ = np.linalg.lstsq(W.T, k, rcond=None)
        residual = np.max(np.abs(W.T @ alpha - k))
        if residual > tol * (1.0 + np.max(np.abs(k))):
            raise NoCorrespondingForm(f'{sys.name}: field is not in the image of W at {x}')
        return alpha

    worst = 0.0
    for x in sample_points(sys, rng, points):
        J = _jacobian(alpha_at, x)
        worst = max(worst, float(np.max(np.abs(J - J.T))))
    kind = FieldClass.LOCALLY_HAMILTONIAN if worst <= max(tol, 1e-6) else FieldClass.NEITHER
    return FieldClassification(kind, worst)


def classify_field(sys: PhaseSpaceSystem, K: MultiVectorField, rng: Optional[np.random.Generator] = None,
                   tol: float = SYMMETRY_TOL, points: int = 20) -> FieldClassification:
    """Classify ``K`` by the 1-form ``alpha = -i_K omega``: exact, closed or neither."""
    rng = rng if rng is not None else np.random.default_rng(0)
    if not sys.is_poisson:
        return _classify_form(sys, sys.structure, K, rng, tol, points)
    try:
        omega = _form_from_bivector(sys, rng)
    except (DegenerateForm, DimensionTooLarge):
        return _classify_degenerate_poisson(sys, K, rng, tol, points)
    return _classify_form(sys, omega, K, rng, tol, points)


# symmetry check

def _pointwise_commutator(sys, E, X):
    E_at = field_function(sys, E)
    dE = [[sys.compile(differentiate(E.component((i,)), name)) for name in sys.coordinates]
          for i in range(sys.dim)]

    def commutator(x):
        J_X = _jacobian(X, x)
        J_E = np.array([[f(x) for f in row] for row in dE])
        return J_X @ E_at(x) - J_E @ X(x)
    return commutator


def check_symmetry(sys: PhaseSpaceSystem, gen: SymmetryGenerator, tol: float = SYMMETRY_TOL,
                   rng: Optional[np.random.Generator] = None, points: int = SAMPLE_POINTS) -> SymmetryVerdict:
    """Classify ``E`` by the commutator ``K = [E, X_h]``."""
    rng = rng if rng is not None else np.random.default_rng(0)
    X_h = hamiltonian_vector_field(sys, rng)
    E = gen.field
    if isinstance(X_h, MultiVectorField):
        K = schouten_bracket(E, X_h)
        residual = max_residual(sys, K, rng, points)
        if residual <= tol:
            return SymmetryVerdict(SymmetryClass.STRICT, residual, witness=K)
        try:
            field_class = classify_field(sys, K, rng, tol)
        except NoCorrespondingForm:
            logger.info('%s: commutator has no corresponding 1-form', sys.name)
            return SymmetryVerdict(SymmetryClass.NOT_A_SYMMETRY, residual, witness=K)
        if field_class.kind == FieldClass.NEITHER:
            return SymmetryVerdict(SymmetryClass.NOT_A_SYMMETRY, residual, witness=K, field_class=field_class)
        return SymmetryVerdict(SymmetryClass.UP_TO_HAMILTONIAN, residual, witness=K, field_class=field_class)

    commutator = _pointwise_commutator(sys, E, X_h)
    raw, projected, kernel_dim = 0.0, 0.0, 0
    for x in sample_points(sys, rng, points):
        k = commutator(x)
        split = kernel_and_pseudoinverse_at(sys, x)
        kernel_dim = max(kernel_dim, len(split.kernel))
        Q = np.array([u.values for u in split.kernel]).reshape(len(split.kernel), sys.dim)
        remainder = k - Q.T @ (Q @ k) if len(split.kernel) else k
        raw = max(raw, float(np.max(np.abs(k))))
        projected = max(projected, float(np.max(np.abs(remainder))))
    if kernel_dim == 0 and raw <= tol:
        return SymmetryVerdict(SymmetryClass.STRICT, raw, kernel_residual=projected)
    if kernel_dim > 0 and projected <= tol:
        return SymmetryVerdict(SymmetryClass.UP_TO_KERNEL, raw, kernel_residual=projected)
    return SymmetryVerdict(SymmetryClass.NOT_A_SYMMETRY, raw, kernel_residual=projected)


def representative_dependence(sys: PhaseSpaceSystem, omega_E: DifferentialForm,
                              rng: Optional[np.random.Generator] = None, points: int = 20) -> float:
    """Largest ``|i_u omega_E|`` over pointwise kernel vectors ``u``.

    Zero means the invariants do not depend on the chosen W representative.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    worst = 0.0
    for x in sample_points(sys, rng, points):
        split = kernel_and_pseudoinverse_at(sys, x)
        Theta = omega_E.at(x, sys.parameters).to_matrix()
        for u in split.kernel:
            worst = max(worst, float(np.max(np.abs(Theta.T @ u.values))))
    return worst
