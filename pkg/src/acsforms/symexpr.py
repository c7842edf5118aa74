"""Symbolic real-valued expressions over chart coordinates.

Expressions are immutable trees built from constants, named variables, the
constant ``pi``, n-ary sums and products, quotients, integer powers and the
unary functions ``exp``, ``sin``, ``cos`` and ``sqrt``.  Construction applies
constant folding and the 0/1 unit laws and nothing else, so derivative output
stays predictable.

Identities are checked by :func:`is_zero`, which evaluates at seeded random
points instead of attempting symbolic simplification.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Pi", "Add", "Mul", "Div", "Pow", "Func",
    "ParseError", "UnknownIdentifierError", "EvaluationError",
    "SampleDomain", "CHART_R4", "CHART_KT", "CHART_6D", "CHART_VARIABLES",
    "const", "var", "pi", "exp", "sin", "cos", "sqrt", "as_expr",
    "parse", "to_string", "differentiate", "evaluate", "evaluate_array",
    "is_zero", "variables", "substitute", "is_const_zero",
]

CHART_R4 = ("x1", "x2", "y1", "y2")
CHART_KT = ("x1", "x2", "x3", "x4")
CHART_6D = ("x1", "y1", "x2", "y2", "t1", "t2")
CHART_VARIABLES = frozenset(CHART_R4 + CHART_KT + CHART_6D)

FUNCTIONS = ("sin", "cos", "exp", "sqrt")
_RESERVED = frozenset(FUNCTIONS + ("pi",))


class ParseError(ValueError):
    """Malformed expression text; ``offset`` is the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    pass


class EvaluationError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# nodes


class Expr:
    __slots__ = ("_hash",)

    def _key(self):
        raise NotImplementedError

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __setattr__(self, name, value):
        raise AttributeError("expressions are immutable")

    def __repr__(self):
        return f"Expr({to_string(self)!r})"

    def __str__(self):
        return to_string(self)

    # arithmetic sugar; floats and ints are promoted to constants
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

    def __pow__(self, n):
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise TypeError("only integer powers are supported")
        return power(self, int(n))


def _init(obj, **fields):
    for k, v in fields.items():
        object.__setattr__(obj, k, v)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: float):
        _init(self, value=float(value))

    def _key(self):
        return (self.value,)


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        _init(self, name=name)

    def _key(self):
        return (self.name,)


class Pi(Expr):
    __slots__ = ()

    def _key(self):
        return ()


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple):
        _init(self, terms=tuple(terms))

    def _key(self):
        return self.terms


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple):
        _init(self, factors=tuple(factors))

    def _key(self):
        return self.factors


class Div(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num: Expr, den: Expr):
        _init(self, num=num, den=den)

    def _key(self):
        return (self.num, self.den)


class Pow(Expr):
    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: int):
        _init(self, base=base, exponent=int(exponent))

    def _key(self):
        return (self.base, self.exponent)


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        _init(self, name=name, arg=arg)

    def _key(self):
        return (self.name, self.arg)


ZERO = Const(0.0)
ONE = Const(1.0)
PI = Pi()


def is_const_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0.0


def _is_one(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 1.0


# ---------------------------------------------------------------------------
# folding constructors


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool):
        return Const(float(x))
    if isinstance(x, str):
        return parse(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an expression")


def const(value: float) -> Const:
    return Const(value)


def var(name: str) -> Var:
    if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", name) or name in _RESERVED:
        raise ValueError(f"invalid variable name {name!r}")
    return Var(name)


pi = PI


def add(*terms: Expr) -> Expr:
    flat = []
    c = 0.0
    for t in terms:
        parts = t.terms if isinstance(t, Add) else (t,)
        for p in parts:
            if isinstance(p, Const):
                c += p.value
            else:
                flat.append(p)
    if c != 0.0:
        flat.append(Const(c))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def mul(*factors: Expr) -> Expr:
    flat = []
    c = 1.0
    for f in factors:
        parts = f.factors if isinstance(f, Mul) else (f,)
        for p in parts:
            if isinstance(p, Const):
                c *= p.value
            else:
                flat.append(p)
    if c == 0.0:
        return ZERO
    if c != 1.0:
        flat.insert(0, Const(c))
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return Mul(tuple(flat))


def neg(e: Expr) -> Expr:
    return mul(Const(-1.0), e)


def div(num: Expr, den: Expr) -> Expr:
    if is_const_zero(num):
        return ZERO
    if _is_one(den):
        return num
    if isinstance(num, Const) and isinstance(den, Const) and den.value != 0.0:
        return Const(num.value / den.value)
    return Div(num, den)


def power(base: Expr, n: int) -> Expr:
    if n == 0:
        return ONE
    if n == 1:
        return base
    if n < 0:
        return div(ONE, power(base, -n))
    if isinstance(base, Const):
        return Const(base.value ** n)
    return Pow(base, n)


_NUMPY = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}


def func(name: str, arg: Expr) -> Expr:
    arg = as_expr(arg)
    if isinstance(arg, Const) and not (name == "sqrt" and arg.value < 0):
        return Const(float(_NUMPY[name](arg.value)))
    return Func(name, arg)


def exp(e) -> Expr:
    return func("exp", e)


def sin(e) -> Expr:
    return func("sin", e)


def cos(e) -> Expr:
    return func("cos", e)


def sqrt(e) -> Expr:
    return func("sqrt", e)


# ---------------------------------------------------------------------------
# printing

_PREC_SUM, _PREC_TERM, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4


def _prec(e: Expr) -> int:
    if isinstance(e, Add):
        return _PREC_SUM
    if isinstance(e, (Mul, Div)):
        return _PREC_TERM
    if isinstance(e, Pow):
        return _PREC_POW
    if isinstance(e, Const) and e.value < 0:
        return _PREC_SUM
    return _PREC_ATOM


def _wrap(e: Expr, need: int) -> str:
    s = to_string(e)
    return f"({s})" if _prec(e) < need else s


def to_string(e: Expr) -> str:
    """Canonical text form; ``parse(to_string(e)) == e`` for every tree."""
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Pi):
        return "pi"
    if isinstance(e, Add):
        return " + ".join(_wrap(t, _PREC_TERM) if isinstance(t, Const) else to_string(t)
                          for t in e.terms)
    if isinstance(e, Mul):
        # a Div factor must be parenthesised: a*b/c re-parses as (a*b)/c
        return "*".join(f"({to_string(f)})" if isinstance(f, Div) else _wrap(f, _PREC_TERM)
                        for f in e.factors)
    if isinstance(e, Div):
        return f"{_wrap(e.num, _PREC_TERM)}/{_wrap(e.den, _PREC_POW)}"
    if isinstance(e, Pow):
        return f"{_wrap(e.base, _PREC_ATOM)}^{e.exponent}"
    if isinstance(e, Func):
        return f"{e.name}({to_string(e.arg)})"
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


def _tokenize(text: str):
    def offset(i):
        return len(text[:i].encode("utf-8"))

    pos = 0
    tokens = []
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", offset(pos))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), offset(pos)))
        pos = m.end()
    tokens.append(("end", "", offset(n)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, v, off = self.take()
        if v != value or kind != "op":
            found = "end of input" if kind == "end" else repr(v)
            raise ParseError(f"expected {value!r}, found {found}", off)

    def expr(self) -> Expr:
        acc = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            acc = add(acc, rhs) if op == "+" else add(acc, neg(rhs))
        return acc

    def term(self) -> Expr:
        acc = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.factor()
            acc = mul(acc, rhs) if op == "*" else div(acc, rhs)
        return acc

    def factor(self) -> Expr:
        b = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            kind, v, off = self.take()
            if kind != "num" or not v.isdigit():
                raise ParseError("expected a non-negative integer exponent", off)
            b = power(b, int(v))
        return b

    def base(self) -> Expr:
        kind, v, off = self.take()
        if kind == "num":
            return Const(float(v))
        if kind == "op" and v == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "op" and v == "-":
            b = self.base()
            return Const(-b.value) if isinstance(b, Const) else neg(b)
        if kind == "ident":
            if v in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return func(v, arg)
            if v == "pi":
                return PI
            if self.variables is not None and v not in self.variables:
                raise UnknownIdentifierError(f"unknown identifier {v!r}", off)
            return Var(v)
        found = "end of input" if kind == "end" else repr(v)
        raise ParseError(f"unexpected {found}", off)


def parse(text: str, variables: Iterable[str] | None = CHART_VARIABLES) -> Expr:
    """Parse ``text`` into an expression.

    ``variables`` is the set of admissible identifiers besides ``pi`` and the
    function names; pass ``None`` to accept any identifier.
    """
    p = _Parser(text, None if variables is None else frozenset(variables))
    e = p.expr()
    kind, v, off = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected {v!r}", off)
    return e


# ---------------------------------------------------------------------------
# calculus


@lru_cache(maxsize=200_000)
def differentiate(e: Expr, v: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to variable ``v``."""
    if isinstance(e, (Const, Pi)):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Add):
        return add(*(differentiate(t, v) for t in e.terms))
    if isinstance(e, Mul):
        out = []
        fs = e.factors
        for i, f in enumerate(fs):
            df = differentiate(f, v)
            if is_const_zero(df):
                continue
            out.append(mul(*fs[:i], df, *fs[i + 1:]))
        return add(*out)
    if isinstance(e, Div):
        du = differentiate(e.num, v)
        dw = differentiate(e.den, v)
        if is_const_zero(dw):
            return div(du, e.den)
        return div(add(mul(du, e.den), neg(mul(e.num, dw))), power(e.den, 2))
    if isinstance(e, Pow):
        db = differentiate(e.base, v)
        return mul(Const(e.exponent), power(e.base, e.exponent - 1), db)
    if isinstance(e, Func):
        da = differentiate(e.arg, v)
        if is_const_zero(da):
            return ZERO
        if e.name == "exp":
            return mul(e, da)
        if e.name == "sin":
            return mul(func("cos", e.arg), da)
        if e.name == "cos":
            return neg(mul(func("sin", e.arg), da))
        if e.name == "sqrt":
            return div(da, mul(Const(2.0), e))
    raise TypeError(type(e))


def variables(e: Expr) -> frozenset:
    return _variables(e)


@lru_cache(maxsize=100_000)
def _variables(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, (Const, Pi)):
        return frozenset()
    if isinstance(e, Add):
        return frozenset().union(*(_variables(t) for t in e.terms))
    if isinstance(e, Mul):
        return frozenset().union(*(_variables(f) for f in e.factors))
    if isinstance(e, Div):
        return _variables(e.num) | _variables(e.den)
    if isinstance(e, Pow):
        return _variables(e.base)
    return _variables(e.arg)


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (refolding constants on the way up)."""
    memo: dict = {}

    def go(n: Expr) -> Expr:
        if n in memo:
            return memo[n]
        if isinstance(n, Var):
            r = as_expr(mapping[n.name]) if n.name in mapping else n
        elif isinstance(n, (Const, Pi)):
            r = n
        elif isinstance(n, Add):
            r = add(*(go(t) for t in n.terms))
        elif isinstance(n, Mul):
            r = mul(*(go(f) for f in n.factors))
        elif isinstance(n, Div):
            r = div(go(n.num), go(n.den))
        elif isinstance(n, Pow):
            r = power(go(n.base), n.exponent)
        else:
            r = func(n.name, go(n.arg))
        memo[n] = r
        return r

    return go(e)


# ---------------------------------------------------------------------------
# evaluation


def _eval(e: Expr, env: Mapping[str, np.ndarray], memo: dict, scale: list | None):
    if e in memo:
        return memo[e]
    if isinstance(e, Const):
        r = e.value
    elif isinstance(e, Pi):
        r = math.pi
    elif isinstance(e, Var):
        try:
            r = env[e.name]
        except KeyError:
            raise EvaluationError(f"unbound variable {e.name!r}") from None
    elif isinstance(e, Add):
        r = _eval(e.terms[0], env, memo, scale)
        for t in e.terms[1:]:
            r = r + _eval(t, env, memo, scale)
    elif isinstance(e, Mul):
        r = _eval(e.factors[0], env, memo, scale)
        for f in e.factors[1:]:
            r = r * _eval(f, env, memo, scale)
    elif isinstance(e, Div):
        num = _eval(e.num, env, memo, scale)
        den = _eval(e.den, env, memo, scale)
        if np.any(np.asarray(den) == 0):
            raise EvaluationError(f"division by zero in {to_string(e)}")
        r = num / den
    elif isinstance(e, Pow):
        r = _eval(e.base, env, memo, scale) ** e.exponent
    else:
        a = _eval(e.arg, env, memo, scale)
        if e.name == "sqrt" and np.any(np.asarray(a) < 0):
            raise EvaluationError(f"sqrt of negative argument in {to_string(e)}")
        r = _NUMPY[e.name](a)
    if scale is not None:
        scale[0] = np.maximum(scale[0], np.abs(r))
    memo[e] = r
    return r


def evaluate_array(e: Expr, env: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorised evaluation; ``env`` maps variable names to equal-shape arrays."""
    shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
    with np.errstate(all="ignore"):
        r = _eval(e, env, {}, None)
    return np.broadcast_to(np.asarray(r, dtype=float), shape).copy()


def evaluate(e: Expr, point: Mapping[str, float]) -> float:
    return float(evaluate_array(e, {k: np.float64(v) for k, v in point.items()}))


def _evaluate_with_scale(e: Expr, env):
    shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
    scale = [np.zeros(shape)]
    with np.errstate(all="ignore"):
        r = _eval(e, env, {}, scale)
    return np.broadcast_to(np.asarray(r, dtype=float), shape), scale[0]


@dataclass(frozen=True)
class SampleDomain:
    """Where and how hard :func:`is_zero` looks for a counterexample.

    Variables missing from ``bounds`` are sampled from ``default_bounds``.
    """

    bounds: Mapping[str, tuple] = field(default_factory=dict)
    n_samples: int = 100
    tol: float = 1e-9
    seed: int = 0
    default_bounds: tuple = (-1.0, 1.0)

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        for lo, hi in list(self.bounds.values()) + [self.default_bounds]:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise ValueError(f"invalid interval [{lo}, {hi}]")

    def interval(self, name: str) -> tuple:
        return tuple(self.bounds.get(name, self.default_bounds))

    def points(self, names: Iterable[str]) -> dict:
        rng = np.random.default_rng(self.seed)
        out = {}
        for name in sorted(set(names)):
            lo, hi = self.interval(name)
            out[name] = rng.uniform(lo, hi, self.n_samples)
        return out

    def replace(self, **changes) -> "SampleDomain":
        from dataclasses import replace
        return replace(self, **changes)


DEFAULT_DOMAIN = SampleDomain()


def is_zero(e: Expr, dom: SampleDomain = DEFAULT_DOMAIN) -> bool:
    """Probabilistic zero test.

    True iff ``|e(p)| <= tol * (1 + s(p))`` at every sample point, where
    ``s(p)`` is the largest magnitude of any subexpression at ``p``.
    A False answer is certain.
    """
    if isinstance(e, Const):
        return abs(e.value) <= dom.tol
    env = dom.points(variables(e))
    value, scale = _evaluate_with_scale(e, env)
    return bool(np.all(np.abs(value) <= dom.tol * (1.0 + scale)))
