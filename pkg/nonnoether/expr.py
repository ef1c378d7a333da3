"""Symbolic scalar expressions.

Every coefficient of a geometric object is a :class:`ScalarExpr`: an immutable
tree over named coordinates and parameters with exact rational constants and
rational exponents. The printed form uses the same grammar the parser reads::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := ('-' | '+') unary | power
    power := atom ('^' exponent)?
    atom  := NUMBER | IDENT | 'sqrt' '(' expr ')' | '(' expr ')'
    exponent := INT | '(' ['-'|'+'] NUMBER ['/' INT] ')'

Simplification is limited to constant folding and 0/1 elimination; identities
are checked with :func:`probabilistic_equal`.
"""
import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy

from .errors import (
    ComputationError,
    DomainPointError,
    ExpressionSyntaxError,
    ResamplingExhausted,
    UnboundNameError,
    UnknownFunctionError,
    UsageError,
)

logger = logging.getLogger(__name__)

CONST = 'const'
PARAM = 'param'
COORD = 'coord'
NEG = 'neg'
SUM = 'sum'
PROD = 'prod'
QUOT = 'quot'
POW = 'pow'
SQRT = 'sqrt'

SAMPLE_LOW = -2.0
SAMPLE_HIGH = 2.0
RESAMPLE_FACTOR = 10

FUNCTIONS = ('sqrt',)


@dataclass(frozen=True)
class ScalarExpr:
    kind: str
    children: Tuple['ScalarExpr', ...] = ()
    value: Optional[Fraction] = None
    name: Optional[str] = None

    def __str__(self):
        return format_expression(self)

    def __repr__(self):
        return f'ScalarExpr({format_expression(self)!r})'

    @property
    def is_zero(self):
        return self.kind == CONST and self.value == 0

    @property
    def is_one(self):
        return self.kind == CONST and self.value == 1

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)


@dataclass(frozen=True)
class EvalContext:
    coordinates: Mapping[str, float] = field(default_factory=dict)
    parameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name, value in {**self.coordinates, **self.parameters}.items():
            if not math.isfinite(float(value)):
                raise UsageError(f'value of {name!r} is not finite')

    def vector(self, names: Sequence[str]) -> np.ndarray:
        missing = [n for n in names if n not in self.coordinates]
        if missing:
            raise UnboundNameError(missing)
        return np.array([float(self.coordinates[n]) for n in names])


# construction with folding

ZERO = ScalarExpr(CONST, value=Fraction(0))
ONE = ScalarExpr(CONST, value=Fraction(1))


def const(value) -> ScalarExpr:
    if isinstance(value, float):
        if not math.isfinite(value):
            raise UsageError('constants must be finite')
        value = Fraction(repr(value))
    return ScalarExpr(CONST, value=Fraction(value))


def coord(name: str) -> ScalarExpr:
    return ScalarExpr(COORD, name=name)


def param(name: str) -> ScalarExpr:
    return ScalarExpr(PARAM, name=name)


def as_expr(value) -> ScalarExpr:
    if isinstance(value, ScalarExpr):
        return value
    if isinstance(value, (int, float, Fraction)):
        return const(value)
    raise TypeError(f'cannot use {type(value).__name__} as an expression')


def neg(e: ScalarExpr) -> ScalarExpr:
    if e.kind == CONST:
        return const(-e.value)
    if e.kind == NEG:
        return e.children[0]
    return ScalarExpr(NEG, (e,))


def add(*terms: ScalarExpr) -> ScalarExpr:
    flat = []
    total = Fraction(0)
    for t in terms:
        parts = t.children if t.kind == SUM else (t,)
        for p in parts:
            if p.kind == CONST:
                total += p.value
            else:
                flat.append(p)
    if total != 0:
        flat.append(const(total))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return ScalarExpr(SUM, tuple(flat))


def mul(*factors: ScalarExpr) -> ScalarExpr:
    flat = []
    coefficient = Fraction(1)
    for f in factors:
        parts = f.children if f.kind == PROD else (f,)
        for p in parts:
            if p.kind == CONST:
                coefficient *= p.value
            elif p.kind == NEG:
                coefficient = -coefficient
                flat.append(p.children[0])
            else:
                flat.append(p)
    if coefficient == 0:
        return ZERO
    if not flat:
        return const(coefficient)
    if coefficient == -1:
        return neg(mul(*flat))
    if coefficient != 1:
        flat.insert(0, const(coefficient))
    if len(flat) == 1:
        return flat[0]
    return ScalarExpr(PROD, tuple(flat))


def div(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    if b.kind == CONST and b.value != 0:
        return mul(a, const(1 / b.value))
    if a.is_zero and not (b.kind == CONST):
        return ZERO
    return ScalarExpr(QUOT, (a, b))


def power(base: ScalarExpr, exponent) -> ScalarExpr:
    exponent = Fraction(exponent)
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if base.kind == CONST and exponent.denominator == 1:
        if base.value != 0 or exponent > 0:
            return const(base.value ** exponent.numerator)
    if base.is_one:
        return ONE
    return ScalarExpr(POW, (base,), value=exponent)


def sqrt(e: ScalarExpr) -> ScalarExpr:
    if e.kind == CONST and e.value >= 0:
        num = math.isqrt(e.value.numerator)
        den = math.isqrt(e.value.denominator)
        if num * num == e.value.numerator and den * den == e.value.denominator:
            return const(Fraction(num, den))
    return ScalarExpr(SQRT, (e,))


# parsing

_TOKEN = re.compile(r'\s*(?:(?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)'
                    r'|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))')


class _Parser:
    def __init__(self, text, parameters):
        self.text = text
        self.parameters = frozenset(parameters)
        self.tokens = self._tokenize(text)
        self.pos = 0

    @staticmethod
    def _tokenize(text):
        for offset, ch in enumerate(text):
            if ord(ch) > 127:
                raise ExpressionSyntaxError('non-ASCII character', offset)
        tokens = []
        i = 0
        while i < len(text):
            if text[i:].strip() == '':
                break
            m = _TOKEN.match(text, i)
            if not m or m.end() == i:
                start = i + len(text[i:]) - len(text[i:].lstrip())
                raise ExpressionSyntaxError(f'unexpected character {text[start]!r}', start)
            kind = m.lastgroup
            tokens.append((kind, m.group(kind), m.start(kind)))
            i = m.end()
        tokens.append(('end', '', len(text)))
        return tokens

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value):
        kind, text, offset = self.take()
        if text != value or kind == 'end':
            raise ExpressionSyntaxError(f'expected {value!r}', offset)

    def parse(self):
        if self.peek()[0] == 'end':
            raise ExpressionSyntaxError('empty expression', self.peek()[2])
        e = self.expr()
        kind, text, offset = self.peek()
        if kind != 'end':
            raise ExpressionSyntaxError(f'unexpected {text!r}', offset)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ('+', '-') and self.peek()[0] == 'op':
            op = self.take()[1]
            rhs = self.term()
            e = add(e, rhs) if op == '+' else add(e, neg(rhs))
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ('*', '/') and self.peek()[0] == 'op':
            op = self.take()[1]
            rhs = self.unary()
            e = mul(e, rhs) if op == '*' else div(e, rhs)
        return e

    def unary(self):
        kind, text, _ = self.peek()
        if kind == 'op' and text in ('-', '+'):
            self.take()
            inner = self.unary()
            return neg(inner) if text == '-' else inner
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == '^' and self.peek()[0] == 'op':
            self.take()
            return power(base, self.exponent())
        return base

    def exponent(self):
        kind, text, offset = self.take()
        if kind == 'number':
            value = Fraction(text)
            if value.denominator != 1:
                raise ExpressionSyntaxError('non-integer exponent must be parenthesized', offset)
            return value
        if kind == 'op' and text == '(':
            sign = 1
            if self.peek()[1] in ('-', '+') and self.peek()[0] == 'op':
                sign = -1 if self.take()[1] == '-' else 1
            kind, text, offset = self.take()
            if kind != 'number':
                raise ExpressionSyntaxError('exponent must be a rational literal', offset)
            value = Fraction(text)
            if self.peek()[1] == '/':
                self.take()
                kind, text, offset = self.take()
                if kind != 'number' or Fraction(text).denominator != 1 or Fraction(text) == 0:
                    raise ExpressionSyntaxError('exponent denominator must be a non-zero integer', offset)
                value /= Fraction(text)
            self.expect(')')
            return sign * value
        raise ExpressionSyntaxError('exponent must be a rational literal', offset)

    def atom(self):
        kind, text, offset = self.take()
        if kind == 'number':
            return const(Fraction(text))
        if kind == 'ident':
            if self.peek()[1] == '(' and self.peek()[0] == 'op':
                if text not in FUNCTIONS:
                    raise UnknownFunctionError(text, offset)
                self.take()
                inner = self.expr()
                self.expect(')')
                return sqrt(inner)
            return param(text) if text in self.parameters else coord(text)
        if kind == 'op' and text == '(':
            inner = self.expr()
            self.expect(')')
            return inner
        if kind == 'end':
            raise ExpressionSyntaxError('unexpected end of input', offset)
        raise ExpressionSyntaxError(f'unexpected {text!r}', offset)


def parse_expression(text: str, parameters: Iterable[str] = ()) -> ScalarExpr:
    """Parse ``text``; identifiers listed in ``parameters`` become parameters,
    every other identifier is a coordinate."""
    return _Parser(text, parameters).parse()


# printing

_PREC = {SUM: 1, NEG: 2, PROD: 3, QUOT: 3, POW: 5}
_ATOM = 6


def _precedence(e):
    if e.kind == CONST:
        if e.value < 0:
            return _PREC[NEG]
        return _ATOM if e.value.denominator == 1 else _PREC[QUOT]
    return _PREC.get(e.kind, _ATOM)


def _wrap(e, minimum):
    text = format_expression(e)
    return f'({text})' if _precedence(e) < minimum else text


def _format_exponent(value):
    if value.denominator == 1 and value >= 0:
        return str(value.numerator)
    return f'({value})'


def format_expression(e: ScalarExpr) -> str:
    if e.kind == CONST:
        v = e.value
        return str(v.numerator) if v.denominator == 1 else f'{v.numerator}/{v.denominator}'
    if e.kind in (COORD, PARAM):
        return e.name
    if e.kind == NEG:
        return '-' + _wrap(e.children[0], _PREC[PROD])
    if e.kind == SUM:
        parts = [_wrap(e.children[0], _PREC[SUM])]
        for c in e.children[1:]:
            if c.kind == NEG:
                parts.append(' - ' + _wrap(c.children[0], _PREC[PROD]))
            elif c.kind == CONST and c.value < 0:
                parts.append(' - ' + format_expression(const(-c.value)))
            else:
                parts.append(' + ' + _wrap(c, _PREC[SUM] + 1))
        return ''.join(parts)
    if e.kind == PROD:
        return '*'.join(_wrap(c, _PREC[PROD]) for c in e.children)
    if e.kind == QUOT:
        return f'{_wrap(e.children[0], _PREC[QUOT])}/{_wrap(e.children[1], _PREC[QUOT] + 1)}'
    if e.kind == POW:
        return f'{_wrap(e.children[0], _ATOM)}^{_format_exponent(e.value)}'
    if e.kind == SQRT:
        return f'sqrt({format_expression(e.children[0])})'
    raise ValueError(f'unknown node kind {e.kind!r}')


# inspection

def free_names(e: ScalarExpr) -> Tuple[frozenset, frozenset]:
    coords, params = set(), set()
    stack = [e]
    while stack:
        node = stack.pop()
        if node.kind == COORD:
            coords.add(node.name)
        elif node.kind == PARAM:
            params.add(node.name)
        stack.extend(node.children)
    return frozenset(coords), frozenset(params)


# differentiation

def differentiate(e: ScalarExpr, coordinate: str) -> ScalarExpr:
    memo = {}

    def d(node):
        key = id(node)
        if key in memo:
            return memo[key][1]
        result = _derivative(node, coordinate, d)
        memo[key] = (node, result)
        return result

    return d(e)


def _derivative(e, name, d):
    if e.kind in (CONST, PARAM):
        return ZERO
    if e.kind == COORD:
        return ONE if e.name == name else ZERO
    if e.kind == NEG:
        return neg(d(e.children[0]))
    if e.kind == SUM:
        return add(*(d(c) for c in e.children))
    if e.kind == PROD:
        terms = []
        for i, c in enumerate(e.children):
            dc = d(c)
            if not dc.is_zero:
                terms.append(mul(*e.children[:i], dc, *e.children[i + 1:]))
        return add(*terms)
    if e.kind == QUOT:
        a, b = e.children
        da, db = d(a), d(b)
        if db.is_zero:
            return div(da, b)
        return div(add(mul(da, b), neg(mul(a, db))), power(b, 2))
    if e.kind == POW:
        base = e.children[0]
        db = d(base)
        if db.is_zero:
            return ZERO
        return mul(const(e.value), power(base, e.value - 1), db)
    if e.kind == SQRT:
        inner = e.children[0]
        di = d(inner)
        if di.is_zero:
            return ZERO
        return mul(const(Fraction(1, 2)), power(inner, Fraction(-1, 2)), di)
    raise ValueError(f'unknown node kind {e.kind!r}')


# numeric evaluation

def _check(value):
    if not math.isfinite(value):
        raise DomainPointError('non-finite value')
    return value


def _compile(e, index, params):
    kind = e.kind
    if kind == CONST:
        v = float(e.value)
        return lambda x: v
    if kind == COORD:
        if e.name in index:
            i = index[e.name]
            return lambda x: x[i]
        if e.name in params:
            v = float(params[e.name])
            return lambda x: v
        raise UnboundNameError([e.name])
    if kind == PARAM:
        if e.name not in params:
            raise UnboundNameError([e.name])
        v = float(params[e.name])
        return lambda x: v
    fs = [_compile(c, index, params) for c in e.children]
    if kind == NEG:
        f = fs[0]
        return lambda x: -f(x)
    if kind == SUM:
        return lambda x: _check(math.fsum(g(x) for g in fs))
    if kind == PROD:
        def product(x):
            out = 1.0
            for g in fs:
                out *= g(x)
            return _check(out)
        return product
    if kind == QUOT:
        a, b = fs

        def quotient(x):
            den = b(x)
            if den == 0.0:
                raise DomainPointError('division by zero')
            return _check(a(x) / den)
        return quotient
    if kind == POW:
        f = fs[0]
        exponent = e.value
        integral = exponent.denominator == 1
        n = exponent.numerator
        fexp = float(exponent)

        def pw(x):
            base = f(x)
            if base == 0.0 and exponent < 0:
                raise DomainPointError('zero to a negative power')
            if base < 0.0 and not integral:
                raise DomainPointError('negative base with fractional exponent')
            try:
                return _check(base ** n if integral else base ** fexp)
            except OverflowError as exc:
                raise DomainPointError('overflow') from exc
        return pw
    if kind == SQRT:
        f = fs[0]

        def root(x):
            v = f(x)
            if v < 0.0:
                raise DomainPointError('square root of a negative number')
            return math.sqrt(v)
        return root
    raise ValueError(f'unknown node kind {kind!r}')


def compile_expression(e: ScalarExpr, coordinates: Sequence[str],
                       parameters: Optional[Mapping[str, float]] = None) -> Callable[[Sequence[float]], float]:
    """Compile ``e`` into ``f(x)`` where ``x[i]`` is the value of ``coordinates[i]``."""
    index = {name: i for i, name in enumerate(coordinates)}
    return _compile(e, index, dict(parameters or {}))


def evaluate(e: ScalarExpr, ctx: EvalContext) -> float:
    names = list(ctx.coordinates)
    f = compile_expression(e, names, ctx.parameters)
    return f([float(ctx.coordinates[n]) for n in names])


def probabilistic_equal(a: ScalarExpr, b: ScalarExpr, trials: int = 20, tol: float = 1e-9,
                        rng: Optional[np.random.Generator] = None,
                        fixed: Optional[Mapping[str, float]] = None) -> bool:
    """Compare ``a`` and ``b`` at random points of the box [-2, 2]^k.

    Names listed in ``fixed`` keep their value; every other name is sampled.
    Points where either side is undefined are resampled, at most
    ``10 * trials`` times in total.
    """
    if trials < 1 or tol <= 0:
        raise UsageError('trials must be >= 1 and tol > 0')
    rng = rng if rng is not None else np.random.default_rng(0)
    fixed = dict(fixed or {})
    names = set()
    for e in (a, b):
        coords, params = free_names(e)
        names |= coords | params
    names = sorted(names - set(fixed))
    fa = compile_expression(a, names, fixed)
    fb = compile_expression(b, names, fixed)
    accepted = 0
    rejected = 0
    while accepted < trials:
        x = rng.uniform(SAMPLE_LOW, SAMPLE_HIGH, size=len(names))
        try:
            va, vb = fa(x), fb(x)
        except DomainPointError:
            rejected += 1
            if rejected > RESAMPLE_FACTOR * trials:
                raise ResamplingExhausted('expression undefined almost everywhere in the sampling box')
            continue
        accepted += 1
        if abs(va - vb) > tol * (1.0 + max(abs(va), abs(vb))):
            return False
    if rejected:
        logger.debug('probabilistic_equal resampled %d point(s)', rejected)
    return True


# sympy bridge

def to_sympy(e: ScalarExpr):
    if e.kind == CONST:
        return sympy.Rational(e.value.numerator, e.value.denominator)
    if e.kind in (COORD, PARAM):
        return sympy.Symbol(e.name, real=True)
    args = [to_sympy(c) for c in e.children]
    if e.kind == NEG:
        return -args[0]
    if e.kind == SUM:
        return sympy.Add(*args)
    if e.kind == PROD:
        return sympy.Mul(*args)
    if e.kind == QUOT:
        return args[0] / args[1]
    if e.kind == POW:
        return args[0] ** sympy.Rational(e.value.numerator, e.value.denominator)
    if e.kind == SQRT:
        return sympy.sqrt(args[0])
    raise ValueError(f'unknown node kind {e.kind!r}')


def from_sympy(s, parameters: Iterable[str] = ()) -> ScalarExpr:
    parameters = frozenset(parameters)
    if s.is_Rational:
        return const(Fraction(int(s.p), int(s.q)))
    if s.is_Symbol:
        return param(s.name) if s.name in parameters else coord(s.name)
    if s.is_Add:
        return add(*(from_sympy(a, parameters) for a in s.args))
    if s.is_Mul:
        return mul(*(from_sympy(a, parameters) for a in s.args))
    if s.is_Pow and s.exp.is_Rational:
        return power(from_sympy(s.base, parameters), Fraction(int(s.exp.p), int(s.exp.q)))
    raise ComputationError(f'cannot represent {s} as a scalar expression')


def is_polynomial(e: ScalarExpr, coordinates: Sequence[str]) -> bool:
    symbols = [sympy.Symbol(name, real=True) for name in coordinates]
    return bool(to_sympy(e).is_polynomial(*symbols))
