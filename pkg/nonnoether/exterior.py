"""Exterior algebra of forms and multivector fields on a single chart.

Coefficients are stored sparsely under strictly increasing index tuples.
A k-form ``a`` stands for ``sum_I a_I dz_I1 ^ ... ^ dz_Ik`` and a k-vector
``V`` for ``sum_I V^I d/dz_I1 ^ ... ^ d/dz_Ik``; wedge products carry no
factorial normalization.

Contraction order: ``i_{V ^ U} = i_U o i_V`` and a vector contracts into the
first slot, so ``i_{d/dp ^ d/dq}(dp ^ dq) = 1`` and the full pairing of equal
degrees is ``sum_I V^I a_I``.
"""
import logging
from functools import lru_cache
from itertools import combinations
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ChartMismatch, DegreeError
from .expr import ONE, ZERO, ScalarExpr, add, as_expr, compile_expression, differentiate, mul, neg

logger = logging.getLogger(__name__)

FORM = 'form'
MULTIVECTOR = 'multivector'


def sort_indices(indices: Sequence[int]) -> Tuple[Optional[Tuple[int, ...]], int]:
    """Sort ``indices`` and return ``(sorted, sign of the permutation)``;
    ``(None, 0)`` when an index repeats."""
    items = list(indices)
    if len(set(items)) != len(items):
        return None, 0
    sign = 1
    for i in range(len(items)):
        for j in range(len(items) - 1 - i):
            if items[j] > items[j + 1]:
                items[j], items[j + 1] = items[j + 1], items[j]
                sign = -sign
    return tuple(items), sign


def _merge(first, second):
    if set(first) & set(second):
        return None, 0
    inversions = sum(1 for i in first for j in second if j < i)
    return tuple(sorted(first + second)), (-1) ** inversions


class AlternatingField:
    kind = None

    def __init__(self, chart, degree, coefficients=None):
        self.chart = tuple(chart)
        self.degree = int(degree)
        if self.degree < 0:
            raise DegreeError('degree must be non-negative')
        coeffs = {}
        for key, value in (coefficients or {}).items():
            key = tuple(key)
            if len(key) != self.degree or any(b <= a for a, b in zip(key, key[1:])):
                raise DegreeError(f'index tuple {key} is not strictly increasing of length {self.degree}')
            if key and (key[0] < 0 or key[-1] >= self.dim):
                raise DegreeError(f'index tuple {key} outside the chart')
            value = as_expr(value)
            if not value.is_zero:
                coeffs[key] = value
        if self.degree > self.dim and coeffs:
            raise DegreeError(f'degree {self.degree} exceeds dimension {self.dim}')
        self.coefficients: Dict[Tuple[int, ...], ScalarExpr] = coeffs
        self._compiled = {}

    @property
    def dim(self):
        return len(self.chart)

    @classmethod
    def zero(cls, chart, degree):
        return cls(chart, degree)

    @classmethod
    def scalar(cls, chart, value):
        return cls(chart, 0, {(): as_expr(value)})

    @classmethod
    def from_terms(cls, chart: Sequence[str], degree: int, terms: Iterable):
        """Build from ``(indices, expr)`` pairs; indices may be names or
        positions in any order, repeated entries are summed."""
        chart = tuple(chart)
        position = {name: i for i, name in enumerate(chart)}
        acc: Dict[Tuple[int, ...], list] = {}
        for indices, value in terms:
            idx = []
            for item in indices:
                if isinstance(item, str):
                    if item not in position:
                        raise ChartMismatch(f'{item!r} is not a coordinate of the chart')
                    idx.append(position[item])
                else:
                    idx.append(int(item))
            if len(idx) != degree:
                raise DegreeError(f'term {tuple(indices)} does not have degree {degree}')
            key, sign = sort_indices(idx)
            if key is None:
                continue
            value = as_expr(value)
            acc.setdefault(key, []).append(value if sign > 0 else neg(value))
        return cls(chart, degree, {k: add(*v) for k, v in acc.items()})

    def _new(self, coefficients, degree=None):
        return type(self)(self.chart, self.degree if degree is None else degree, coefficients)

    def component(self, indices: Sequence[int]) -> ScalarExpr:
        key, sign = sort_indices(indices)
        if key is None:
            return ZERO
        value = self.coefficients.get(key, ZERO)
        return value if sign > 0 else neg(value)

    def items(self):
        return self.coefficients.items()

    def as_scalar(self) -> ScalarExpr:
        if self.degree != 0:
            raise DegreeError('only degree-0 objects are scalars')
        return self.coefficients.get((), ZERO)

    @property
    def is_zero(self):
        return not self.coefficients

    def _same(self, other):
        if type(other) is not type(self):
            raise TypeError(f'cannot combine {type(self).__name__} with {type(other).__name__}')
        check_chart(self, other)
        if other.degree != self.degree:
            raise DegreeError(f'degree mismatch: {self.degree} vs {other.degree}')

    def __add__(self, other):
        self._same(other)
        out = dict(self.coefficients)
        for key, value in other.items():
            out[key] = add(out[key], value) if key in out else value
        return self._new(out)

    def __neg__(self):
        return self._new({k: neg(v) for k, v in self.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor) -> 'AlternatingField':
        factor = as_expr(factor)
        return self._new({k: mul(factor, v) for k, v in self.items()})

    def __mul__(self, factor):
        return self.scale(factor)

    __rmul__ = __mul__

    def map(self, fn) -> 'AlternatingField':
        return self._new({k: fn(v) for k, v in self.items()})

    def at(self, x: Sequence[float], parameters: Optional[Mapping[str, float]] = None) -> 'PointTensor':
        key = tuple(sorted((parameters or {}).items()))
        compiled = self._compiled.get(key)
        if compiled is None:
            compiled = [(basis_position(self.dim, self.degree, k),
                         compile_expression(v, self.chart, parameters))
                        for k, v in self.items()]
            self._compiled[key] = compiled
        values = np.zeros(len(basis(self.dim, self.degree)))
        for position, f in compiled:
            values[position] = f(x)
        return PointTensor(self.degree, self.dim, values, kind=self.kind)

    def __repr__(self):
        names = self.chart
        terms = []
        for key, value in sorted(self.items()):
            label = '^'.join(names[i] for i in key) or '1'
            terms.append(f'({value})*{label}')
        return f'{type(self).__name__}[{self.degree}](' + ' + '.join(terms) + ')'


class DifferentialForm(AlternatingField):
    kind = FORM


class MultiVectorField(AlternatingField):
    kind = MULTIVECTOR

    def vector_at(self, x, parameters=None) -> np.ndarray:
        if self.degree != 1:
            raise DegreeError('vector_at needs a degree-1 field')
        return self.at(x, parameters).values.copy()


def check_chart(a: AlternatingField, b: AlternatingField):
    if a.chart != b.chart:
        raise ChartMismatch(f'charts differ: {a.chart} vs {b.chart}')


def basis_form(chart: Sequence[str], name: str) -> DifferentialForm:
    return DifferentialForm.from_terms(chart, 1, [((name,), ONE)])


def basis_vector(chart: Sequence[str], name: str) -> MultiVectorField:
    return MultiVectorField.from_terms(chart, 1, [((name,), ONE)])


def vector_field(chart: Sequence[str], components: Mapping[str, ScalarExpr]) -> MultiVectorField:
    return MultiVectorField.from_terms(chart, 1, [((name,), value) for name, value in components.items()])


def differential(f: ScalarExpr, chart: Sequence[str]) -> DifferentialForm:
    return DifferentialForm(chart, 1, {(i,): differentiate(f, name) for i, name in enumerate(chart)})


def wedge(a: AlternatingField, b: AlternatingField) -> AlternatingField:
    if type(a) is not type(b):
        raise TypeError('wedge needs two forms or two multivector fields')
    check_chart(a, b)
    degree = a.degree + b.degree
    acc: Dict[Tuple[int, ...], list] = {}
    if degree <= a.dim:
        for ka, va in a.items():
            for kb, vb in b.items():
                key, sign = _merge(ka, kb)
                if key is None:
                    continue
                term = mul(va, vb)
                acc.setdefault(key, []).append(term if sign > 0 else neg(term))
    return type(a)(a.chart, degree, {k: add(*v) for k, v in acc.items()})


def exterior_derivative(a: DifferentialForm) -> DifferentialForm:
    if not isinstance(a, DifferentialForm):
        raise TypeError('exterior derivative is defined on forms')
    acc: Dict[Tuple[int, ...], list] = {}
    if a.degree < a.dim:
        for key, value in a.items():
            for m, name in enumerate(a.chart):
                if m in key:
                    continue
                dv = differentiate(value, name)
                if dv.is_zero:
                    continue
                position = sum(1 for i in key if i < m)
                new_key = tuple(sorted(key + (m,)))
                acc.setdefault(new_key, []).append(dv if position % 2 == 0 else neg(dv))
    return DifferentialForm(a.chart, a.degree + 1, {k: add(*v) for k, v in acc.items()})


def _contract_basis(m, a):
    acc: Dict[Tuple[int, ...], list] = {}
    for key, value in a.items():
        if m not in key:
            continue
        s = key.index(m)
        rest = key[:s] + key[s + 1:]
        acc.setdefault(rest, []).append(value if s % 2 == 0 else neg(value))
    return acc


def interior_product(V: MultiVectorField, a: DifferentialForm) -> DifferentialForm:
    """``i_V a``; for ``V = d/dz_I1 ^ ... ^ d/dz_Ik`` the index ``I1`` is contracted first."""
    if not isinstance(V, MultiVectorField) or not isinstance(a, DifferentialForm):
        raise TypeError('interior product contracts a multivector field into a form')
    check_chart(V, a)
    if V.degree > a.degree:
        raise DegreeError(f'cannot contract a {V.degree}-vector into a {a.degree}-form')
    total: Dict[Tuple[int, ...], list] = {}
    for key, coefficient in V.items():
        current = a
        for m in key:
            current = DifferentialForm(a.chart, current.degree - 1,
                                       {k: add(*v) for k, v in _contract_basis(m, current).items()})
            if current.is_zero:
                break
        for k, v in current.items():
            total.setdefault(k, []).append(mul(coefficient, v))
    return DifferentialForm(a.chart, a.degree - V.degree, {k: add(*v) for k, v in total.items()})


def full_pairing(V: MultiVectorField, a: DifferentialForm) -> ScalarExpr:
    check_chart(V, a)
    if V.degree != a.degree:
        raise DegreeError(f'full pairing needs equal degrees, got {V.degree} and {a.degree}')
    return add(*(mul(value, a.coefficients[key]) for key, value in V.items() if key in a.coefficients))


def directional_derivative(X: MultiVectorField, f: ScalarExpr) -> ScalarExpr:
    return add(*(mul(value, differentiate(f, X.chart[key[0]])) for key, value in X.items()))


def lie_derivative_form(X: MultiVectorField, a: DifferentialForm) -> DifferentialForm:
    """Cartan's formula ``L_X = i_X d + d i_X``."""
    if X.degree != 1:
        raise DegreeError('Lie derivative needs a vector field')
    check_chart(X, a)
    if a.degree == 0:
        return DifferentialForm.scalar(a.chart, directional_derivative(X, a.as_scalar()))
    first = interior_product(X, exterior_derivative(a))
    second = exterior_derivative(interior_product(X, a))
    return first + second


def lie_transport_form(X: MultiVectorField, a: DifferentialForm) -> DifferentialForm:
    """Componentwise ``(L_X a)_I = X^m d_m a_I + sum_s a_{I[s->m]} d_{I_s} X^m``."""
    if X.degree != 1:
        raise DegreeError('Lie derivative needs a vector field')
    check_chart(X, a)
    n = a.dim
    X_comp = [X.component((m,)) for m in range(n)]
    out = {}
    for key in basis(n, a.degree):
        terms = [directional_derivative(X, a.component(key))]
        for s, i_s in enumerate(key):
            for m in range(n):
                replaced = key[:s] + (m,) + key[s + 1:]
                coefficient = a.component(replaced)
                if coefficient.is_zero:
                    continue
                terms.append(mul(coefficient, differentiate(X_comp[m], a.chart[i_s])))
        out[key] = add(*terms)
    return DifferentialForm(a.chart, a.degree, out)


def _lie_transport_multivector(X, W):
    n = W.dim
    X_comp = [X.component((m,)) for m in range(n)]
    out = {}
    for key in basis(n, W.degree):
        terms = [directional_derivative(X, W.component(key))]
        for s, i_s in enumerate(key):
            for m in range(n):
                replaced = key[:s] + (m,) + key[s + 1:]
                coefficient = W.component(replaced)
                if coefficient.is_zero:
                    continue
                terms.append(neg(mul(coefficient, differentiate(X_comp[i_s], W.chart[m]))))
        out[key] = add(*terms)
    return MultiVectorField(W.chart, W.degree, out)


def _bivector_bracket(A, B):
    n = A.dim
    out = {}
    for i, j, k in basis(n, 3):
        terms = []
        for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
            for l, name in enumerate(A.chart):
                for P, Q in ((A, B), (B, A)):
                    coefficient = P.component((l, a))
                    if coefficient.is_zero:
                        continue
                    derivative = differentiate(Q.component((b, c)), name)
                    if not derivative.is_zero:
                        terms.append(mul(coefficient, derivative))
        out[(i, j, k)] = add(*terms)
    return MultiVectorField(A.chart, 3, out)


def schouten_bracket(A: MultiVectorField, B: MultiVectorField) -> MultiVectorField:
    """Schouten bracket for the degree pairs (1, k) and (2, 2)."""
    if not isinstance(A, MultiVectorField) or not isinstance(B, MultiVectorField):
        raise TypeError('Schouten bracket acts on multivector fields')
    check_chart(A, B)
    if A.degree == 1:
        if B.degree == 0:
            return MultiVectorField.scalar(A.chart, directional_derivative(A, B.as_scalar()))
        return _lie_transport_multivector(A, B)
    if A.degree == 2 and B.degree == 2:
        return _bivector_bracket(A, B)
    raise DegreeError(f'unsupported Schouten degree pair ({A.degree}, {B.degree})')


def multivector_power(V: MultiVectorField, k: int) -> MultiVectorField:
    if k < 0:
        raise DegreeError('power must be non-negative')
    result = type(V).scalar(V.chart, ONE)
    for _ in range(k):
        result = wedge(result, V)
    return result


def form_power(a: DifferentialForm, k: int) -> DifferentialForm:
    return multivector_power(a, k)


# pointwise dense tensors

@lru_cache(maxsize=None)
def basis(dim: int, degree: int) -> Tuple[Tuple[int, ...], ...]:
    return tuple(combinations(range(dim), degree))


@lru_cache(maxsize=None)
def _positions(dim, degree):
    return {key: i for i, key in enumerate(basis(dim, degree))}


def basis_position(dim: int, degree: int, key: Tuple[int, ...]) -> int:
    return _positions(dim, degree)[key]


@lru_cache(maxsize=None)
def _wedge_table(dim, p, q):
    rows, cols, targets, signs = [], [], [], []
    positions = _positions(dim, p + q)
    for ia, ka in enumerate(basis(dim, p)):
        for ib, kb in enumerate(basis(dim, q)):
            key, sign = _merge(ka, kb)
            if key is None:
                continue
            rows.append(ia)
            cols.append(ib)
            targets.append(positions[key])
            signs.append(sign)
    return (np.array(rows, dtype=int), np.array(cols, dtype=int),
            np.array(targets, dtype=int), np.array(signs, dtype=float))


class PointTensor:
    """Numeric antisymmetric tensor at one point, stored over increasing tuples."""

    def __init__(self, degree, dim, values=None, kind=MULTIVECTOR):
        self.degree = degree
        self.dim = dim
        self.kind = kind
        size = len(basis(dim, degree))
        self.values = np.zeros(size) if values is None else np.asarray(values, dtype=float)
        if self.values.shape != (size,):
            raise DegreeError(f'expected {size} components, got {self.values.shape}')

    @classmethod
    def from_vector(cls, v, kind=MULTIVECTOR):
        v = np.asarray(v, dtype=float)
        return cls(1, len(v), v, kind=kind)

    @classmethod
    def from_matrix(cls, M, kind=MULTIVECTOR):
        M = np.asarray(M, dtype=float)
        n = M.shape[0]
        return cls(2, n, np.array([M[i, j] for i, j in basis(n, 2)]), kind=kind)

    def to_matrix(self) -> np.ndarray:
        if self.degree != 2:
            raise DegreeError('only degree-2 tensors have a matrix')
        M = np.zeros((self.dim, self.dim))
        for (i, j), v in zip(basis(self.dim, 2), self.values):
            M[i, j] = v
            M[j, i] = -v
        return M

    def component(self, indices) -> float:
        key, sign = sort_indices(indices)
        if key is None:
            return 0.0
        return sign * self.values[basis_position(self.dim, self.degree, key)]

    def wedge(self, other: 'PointTensor') -> 'PointTensor':
        if other.dim != self.dim:
            raise ChartMismatch('dimension mismatch')
        degree = self.degree + other.degree
        values = np.zeros(len(basis(self.dim, degree)))
        if values.size:
            rows, cols, targets, signs = _wedge_table(self.dim, self.degree, other.degree)
            if rows.size:
                np.add.at(values, targets, signs * self.values[rows] * other.values[cols])
        return PointTensor(degree, self.dim, values, kind=self.kind)

    def power(self, k: int) -> 'PointTensor':
        result = PointTensor(0, self.dim, np.ones(1), kind=self.kind)
        for _ in range(k):
            result = result.wedge(self)
        return result

    def pair(self, other: 'PointTensor') -> float:
        if other.degree != self.degree or other.dim != self.dim:
            raise DegreeError('pairing needs equal degree and dimension')
        return float(np.dot(self.values, other.values))

    def __add__(self, other):
        return PointTensor(self.degree, self.dim, self.values + other.values, kind=self.kind)

    def __sub__(self, other):
        return PointTensor(self.degree, self.dim, self.values - other.values, kind=self.kind)

    def __mul__(self, factor):
        return PointTensor(self.degree, self.dim, self.values * float(factor), kind=self.kind)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0
