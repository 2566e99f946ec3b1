"""Arithmetic expressions in ``x`` and ``y`` with exact symbolic derivatives.

Every function of the plane that enters a model (conformal factor, frame
coefficients, prescribed bundle curvature, ...) is carried as a
:class:`ScalarField`.  Fields built from text go through :func:`parse_expr`
and :func:`differentiate`, so their first and second partial derivatives are
exact; fields built from Python callables fall back to central differences.

Grammar (``^`` binds tightest and is right associative, then unary minus,
then ``* /``, then ``+ -``)::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | NAME | NAME '(' sum ')' | '(' sum ')'
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

__all__ = [
    "Expr", "Num", "Var", "Neg", "BinOp", "Call",
    "ExprSyntaxError", "UnknownNameError", "EvaluationError",
    "parse_expr", "differentiate", "to_text", "evaluate", "compile_expr", "compile_exprs",
    "free_variables", "ScalarField",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "tanh")
CONSTANTS = {"pi": math.pi}
DEFAULT_VARIABLES = ("x", "y")


class ExprSyntaxError(ValueError):
    """Malformed expression text.  ``offset`` is a byte offset into the UTF-8 input."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnknownNameError(ExprSyntaxError):
    """An identifier that is neither an allowed variable, ``pi``, nor a known function."""


class EvaluationError(ArithmeticError):
    """Evaluation left the real domain (log of a non-positive number, 0 division, ...)."""


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]


# ---------------------------------------------------------------------------
# Parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", _byte_offset(text, bad))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), _byte_offset(text, start)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(text, len(text))))
    return tokens


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


class _Parser:
    def __init__(self, text: str, variables: tuple[str, ...]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, off = self.take()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", off)

    def parse(self) -> Expr:
        kind, _, off = self.peek()
        if kind == "end":
            raise ExprSyntaxError("empty expression", off)
        e = self.sum()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", off)
        return e

    def sum(self) -> Expr:
        e = self.product()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.product())
        return e

    def product(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Expr:
        kind, text, off = self.take()
        if kind == "num":
            value = float(text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"literal {text} overflows", off)
            return Num(value)
        if kind == "name":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise UnknownNameError(f"unknown function {text!r}", off)
                self.take()
                arg = self.sum()
                self.expect(")")
                return Call(text, arg)
            if text in self.variables:
                return Var(text)
            if text in CONSTANTS:
                return Num(CONSTANTS[text])
            if text in FUNCTIONS:
                raise ExprSyntaxError(f"function {text!r} needs an argument", off)
            raise UnknownNameError(f"unknown variable {text!r}", off)
        if kind == "op" and text == "(":
            e = self.sum()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", off)


def parse_expr(text: str, variables: Iterable[str] = DEFAULT_VARIABLES) -> Expr:
    """Parse ``text`` into an expression tree.

    ``variables`` names the admissible free variables (``x`` and ``y`` by
    default; the sphere module uses ``x, y, z`` and curves use ``t``).
    """
    if not isinstance(text, str):
        raise TypeError("expression must be a string")
    return _Parser(text, tuple(variables)).parse()


# ---------------------------------------------------------------------------
# Printing and evaluation

def to_text(e: Expr) -> str:
    """Fully parenthesised text that parses back to an equivalent tree."""
    if isinstance(e, Num):
        s = repr(float(e.value))
        if s in ("inf", "-inf", "nan"):
            raise EvaluationError(f"cannot print non-finite literal {s}")
        return f"({s})" if e.value < 0 or s.startswith("-") else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Call):
        return f"{e.fn}({to_text(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


def free_variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, (Neg, Call)):
        return free_variables(e.arg)
    return free_variables(e.left) | free_variables(e.right)


def evaluate(e: Expr, env: Mapping[str, float]) -> float:
    """Reference tree-walking evaluator on Python floats."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(env[e.name])
    if isinstance(e, Neg):
        return -evaluate(e.arg, env)
    if isinstance(e, Call):
        u = evaluate(e.arg, env)
        try:
            if e.fn == "log" and u <= 0.0:
                raise EvaluationError(f"log of non-positive value {u}")
            if e.fn == "sqrt" and u < 0.0:
                raise EvaluationError(f"sqrt of negative value {u}")
            r = getattr(math, e.fn)(u)
        except OverflowError as exc:
            raise EvaluationError(f"{e.fn} overflow at {u}") from exc
        return _finite(r)
    u = evaluate(e.left, env)
    v = evaluate(e.right, env)
    op = e.op
    if op == "+":
        return _finite(u + v)
    if op == "-":
        return _finite(u - v)
    if op == "*":
        return _finite(u * v)
    if op == "/":
        if v == 0.0:
            raise EvaluationError("division by zero")
        return _finite(u / v)
    # power
    if u < 0.0 and not float(v).is_integer():
        raise EvaluationError(f"negative base {u} with non-integer exponent {v}")
    if u == 0.0 and v < 0.0:
        raise EvaluationError("zero raised to a negative power")
    try:
        return _finite(math.pow(u, v))
    except OverflowError as exc:
        raise EvaluationError("power overflow") from exc


def _finite(r: float) -> float:
    if not math.isfinite(r):
        raise EvaluationError(f"non-finite result {r}")
    return r


_NP_FUNCS = {
    "sin": np.sin, "cos": np.cos, "exp": np.exp,
    "log": np.log, "sqrt": np.sqrt, "tanh": np.tanh,
}


def _source(e: Expr) -> str:
    if isinstance(e, Num):
        return f"({e.value!r})"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{_source(e.arg)})"
    if isinstance(e, Call):
        return f"_{e.fn}({_source(e.arg)})"
    if e.op == "^":
        if isinstance(e.right, Num) and e.right.value == 2.0:
            a = _source(e.left)
            return f"({a}*{a})"
        return f"_pow({_source(e.left)}, {_source(e.right)})"
    return f"({_source(e.left)} {e.op} {_source(e.right)})"


def compile_expr(e: Expr, variables: tuple[str, ...] = DEFAULT_VARIABLES) -> Callable:
    """Compile to a NumPy function of ``variables`` (scalars or broadcastable arrays).

    Out-of-domain operations raise :class:`EvaluationError` instead of
    returning NaN or inf.
    """
    namespace = {f"_{k}": v for k, v in _NP_FUNCS.items()}
    namespace["_pow"] = np.power
    code = f"lambda {', '.join(variables)}: {_source(e)}"
    raw = eval(code, namespace)  # noqa: S307 - source generated from our own AST
    is_const = not free_variables(e)

    def fn(*args):
        with np.errstate(all="ignore"):
            r = raw(*args)
        if is_const or np.ndim(r) < max(np.ndim(a) for a in args):
            r = np.broadcast_to(r, np.broadcast(*args).shape) + 0.0
        if not np.all(np.isfinite(r)):
            raise EvaluationError(f"expression {to_text(e)} left the real domain")
        return r

    return fn


def _children(e: Expr) -> tuple:
    if isinstance(e, BinOp):
        return (e.left, e.right)
    if isinstance(e, (Neg, Call)):
        return (e.arg,)
    return ()


def _fold(e: Expr) -> Expr:
    """Replace variable-free subtrees by their value (when it is finite)."""
    if isinstance(e, (Num, Var)):
        return e
    if not free_variables(e):
        try:
            return Num(evaluate(e, {}))
        except EvaluationError:
            return e
    if isinstance(e, BinOp):
        left, right = _fold(e.left), _fold(e.right)
        if e.op == "*" and _is(left, 1.0) or e.op == "+" and _is(left, 0.0):
            return right
        if e.op in ("*", "/", "^") and _is(right, 1.0) or e.op in ("+", "-") and _is(right, 0.0):
            return left
        return BinOp(e.op, left, right)
    if isinstance(e, Neg):
        return Neg(_fold(e.arg))
    return Call(e.fn, _fold(e.arg))


def compile_exprs(exprs: Sequence[Expr], variables: tuple[str, ...] = DEFAULT_VARIABLES
                  ) -> Callable:
    """Compile several expressions into one function returning a tuple.

    Cheaper than separate :func:`compile_expr` calls in inner loops: constant
    subtrees are folded, repeated subtrees are computed once, and every
    output is broadcast to the argument shape.
    """
    namespace = {f"_{k}": v for k, v in _NP_FUNCS.items()}
    namespace["_pow"] = np.power
    exprs = [_fold(e) for e in exprs]
    counts: dict = {}

    def count(e):
        if isinstance(e, (Num, Var)):
            return
        counts[e] = counts.get(e, 0) + 1
        if counts[e] == 1:
            for child in _children(e):
                count(child)

    for e in exprs:
        count(e)
    names: dict = {}
    lines: list[str] = []

    def emit(e) -> str:
        if e in names:
            return names[e]
        if isinstance(e, Num):
            return f"({e.value!r})"
        if isinstance(e, Var):
            return e.name
        if isinstance(e, Neg):
            src = f"(-{emit(e.arg)})"
        elif isinstance(e, Call):
            src = f"_{e.fn}({emit(e.arg)})"
        elif e.op == "^" and isinstance(e.right, Num) and e.right.value == 2.0:
            a = emit(e.left)
            src = f"({a}*{a})"
        elif e.op == "^":
            src = f"_pow({emit(e.left)}, {emit(e.right)})"
        else:
            src = f"({emit(e.left)} {e.op} {emit(e.right)})"
        if counts.get(e, 0) > 1:
            name = f"_t{len(names)}"
            lines.append(f"    {name} = {src}")
            names[e] = name
            return name
        return src

    outputs = [emit(e) for e in exprs]
    code = "\n".join([f"def _f({', '.join(variables)}):", *lines,
                      f"    return ({', '.join(outputs)},)"])
    exec(code, namespace)  # noqa: S102 - source generated from our own AST
    raw = namespace["_f"]
    const = [i for i, e in enumerate(exprs) if not free_variables(e)]
    varying = [i for i, e in enumerate(exprs) if free_variables(e)]

    def fn(*args):
        shape = np.broadcast(*args).shape
        with np.errstate(all="ignore"):
            out = list(raw(*args))
        if varying:
            total = out[varying[0]]
            for i in varying[1:]:
                total = total + out[i]
            if not np.isfinite(total).all():
                raise EvaluationError("expression left the real domain")
        for i in const:
            if not math.isfinite(out[i]):
                raise EvaluationError("expression left the real domain")
            out[i] = np.full(shape, float(out[i]))
        for i in varying:
            if np.shape(out[i]) != shape:
                out[i] = np.broadcast_to(out[i], shape) + 0.0
        return tuple(out)

    return fn


# ---------------------------------------------------------------------------
# Symbolic differentiation with constant folding and 0/1 identities

def _num(v: float) -> Num:
    return Num(float(v))


def _is(e: Expr, v: float) -> bool:
    return isinstance(e, Num) and e.value == v


def _add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value + b.value)
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return BinOp("+", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value - b.value)
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return _neg(b)
    return BinOp("-", a, b)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return _num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value * b.value)
    if _is(a, 0.0) or _is(b, 0.0):
        return Num(0.0)
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return _neg(b)
    if _is(b, -1.0):
        return _neg(a)
    return BinOp("*", a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0) and not _is(b, 0.0):
        return Num(0.0)
    if _is(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0.0:
        return _num(a.value / b.value)
    return BinOp("/", a, b)


def _pow(a: Expr, b: Expr) -> Expr:
    if _is(b, 1.0):
        return a
    if _is(b, 0.0):
        return Num(1.0)
    return BinOp("^", a, b)


def differentiate(e: Expr, var: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to variable ``var``."""
    if isinstance(e, Num):
        return Num(0.0)
    if isinstance(e, Var):
        return Num(1.0 if e.name == var else 0.0)
    if isinstance(e, Neg):
        return _neg(differentiate(e.arg, var))
    if isinstance(e, Call):
        u = e.arg
        du = differentiate(u, var)
        if _is(du, 0.0):
            return Num(0.0)
        if e.fn == "sin":
            outer = Call("cos", u)
        elif e.fn == "cos":
            outer = _neg(Call("sin", u))
        elif e.fn == "exp":
            outer = e
        elif e.fn == "log":
            return _div(du, u)
        elif e.fn == "sqrt":
            return _div(du, _mul(Num(2.0), e))
        elif e.fn == "tanh":
            outer = _sub(Num(1.0), _pow(e, Num(2.0)))
        else:
            raise TypeError(f"unknown function {e.fn}")
        return _mul(outer, du)
    if not isinstance(e, BinOp):
        raise TypeError(f"not an expression node: {e!r}")
    u, v = e.left, e.right
    du, dv = differentiate(u, var), differentiate(v, var)
    if e.op == "+":
        return _add(du, dv)
    if e.op == "-":
        return _sub(du, dv)
    if e.op == "*":
        return _add(_mul(du, v), _mul(u, dv))
    if e.op == "/":
        if _is(dv, 0.0):
            return _div(du, v)
        return _div(_sub(_mul(du, v), _mul(u, dv)), _pow(v, Num(2.0)))
    # power
    if _is(dv, 0.0):
        if _is(du, 0.0):
            return Num(0.0)
        if isinstance(v, Num):
            reduced = _num(v.value - 1.0)
        else:
            reduced = _sub(v, Num(1.0))
        return _mul(_mul(v, _pow(u, reduced)), du)
    if _is(du, 0.0):
        return _mul(_mul(e, Call("log", u)), dv)
    return _mul(e, _add(_mul(dv, Call("log", u)), _div(_mul(v, du), u)))


# ---------------------------------------------------------------------------
# Scalar fields on the plane

ArrayLike = Union[float, np.ndarray]
_FD_REL = 1e-5


def fd_step(x: ArrayLike, y: ArrayLike) -> ArrayLike:
    """Default central-difference step, scaled by the size of the point."""
    return _FD_REL * (1.0 + np.hypot(x, y))


class ScalarField:
    """A real function of ``(x, y)`` together with its first partial derivatives.

    All callables accept floats or broadcastable NumPy arrays.  ``hessian``
    (returning ``(f_xx, f_xy, f_yy)``) is optional; without it second
    derivatives come from central differences of the exact gradient.

    Fields compose with ``+ - * /`` and unary minus; the gradient of the
    result is propagated exactly by the sum/product/quotient rules, and so is
    the Hessian when both operands carry one.
    """

    __slots__ = ("_value", "_dx", "_dy", "_hessian", "label", "expr")

    def __init__(self, value: Callable, d_dx: Callable, d_dy: Callable,
                 hessian: Callable | None = None, *, label: str = "",
                 expr: Expr | None = None):
        self._value = value
        self._dx = d_dx
        self._dy = d_dy
        self._hessian = hessian
        self.label = label
        self.expr = expr

    def __setattr__(self, name, value):
        if hasattr(self, "expr"):
            raise AttributeError("ScalarField is immutable")
        object.__setattr__(self, name, value)

    def __repr__(self) -> str:
        return f"ScalarField({self.label or '<native>'})"

    # -- evaluation ---------------------------------------------------------
    def __call__(self, x: ArrayLike, y: ArrayLike) -> ArrayLike:
        return self._value(x, y)

    def d_dx(self, x: ArrayLike, y: ArrayLike) -> ArrayLike:
        return self._dx(x, y)

    def d_dy(self, x: ArrayLike, y: ArrayLike) -> ArrayLike:
        return self._dy(x, y)

    def grad(self, x: ArrayLike, y: ArrayLike) -> tuple[ArrayLike, ArrayLike]:
        return self._dx(x, y), self._dy(x, y)

    @property
    def has_exact_hessian(self) -> bool:
        return self._hessian is not None

    def hessian(self, x: ArrayLike, y: ArrayLike, h: ArrayLike | None = None):
        """``(f_xx, f_xy, f_yy)``; exact when available, else FD of the gradient."""
        if self._hessian is not None and h is None:
            return self._hessian(x, y)
        if h is None:
            h = fd_step(x, y)
        fxx = (self._dx(x + h, y) - self._dx(x - h, y)) / (2 * h)
        fyy = (self._dy(x, y + h) - self._dy(x, y - h)) / (2 * h)
        fxy = 0.5 * ((self._dx(x, y + h) - self._dx(x, y - h)) / (2 * h)
                     + (self._dy(x + h, y) - self._dy(x - h, y)) / (2 * h))
        return fxx, fxy, fyy

    # -- constructors -------------------------------------------------------
    @classmethod
    def from_expr(cls, e: Expr | str, label: str | None = None) -> "ScalarField":
        if isinstance(e, str):
            label = e if label is None else label
            e = parse_expr(e)
        bad = free_variables(e) - set(DEFAULT_VARIABLES)
        if bad:
            raise UnknownNameError(f"field depends on {sorted(bad)}", 0)
        ex = differentiate(e, "x")
        ey = differentiate(e, "y")
        exx = differentiate(ex, "x")
        exy = differentiate(ex, "y")
        eyy = differentiate(ey, "y")
        f, fx, fy = compile_expr(e), compile_expr(ex), compile_expr(ey)
        fxx, fxy, fyy = compile_expr(exx), compile_expr(exy), compile_expr(eyy)
        return cls(f, fx, fy, lambda x, y: (fxx(x, y), fxy(x, y), fyy(x, y)),
                   label=label if label is not None else to_text(e), expr=e)

    @classmethod
    def constant(cls, c: float) -> "ScalarField":
        return cls.from_expr(Num(float(c)), label=repr(float(c)))

    @classmethod
    def coordinate(cls, name: str) -> "ScalarField":
        return cls.from_expr(Var(name), label=name)

    @classmethod
    def from_function(cls, f: Callable, label: str = "") -> "ScalarField":
        """Wrap a native function; derivatives by central differences of ``f``."""

        def dx(x, y):
            h = fd_step(x, y)
            return (f(x + h, y) - f(x - h, y)) / (2 * h)

        def dy(x, y):
            h = fd_step(x, y)
            return (f(x, y + h) - f(x, y - h)) / (2 * h)

        return cls(f, dx, dy, label=label)

    def partial(self, var: str) -> "ScalarField":
        """The field ``df/dvar`` as a field in its own right."""
        if var not in ("x", "y"):
            raise ValueError(f"var must be 'x' or 'y', got {var!r}")
        if self.expr is not None:
            return ScalarField.from_expr(differentiate(self.expr, var),
                                         label=f"d({self.label})/d{var}")
        f = self
        if var == "x":
            return ScalarField(f._dx, lambda x, y: f.hessian(x, y)[0],
                               lambda x, y: f.hessian(x, y)[1], label=f"d({f.label})/dx")
        return ScalarField(f._dy, lambda x, y: f.hessian(x, y)[1],
                           lambda x, y: f.hessian(x, y)[2], label=f"d({f.label})/dy")

    # -- algebra ------------------------------------------------------------
    @staticmethod
    def _lift(other) -> "ScalarField":
        if isinstance(other, ScalarField):
            return other
        if isinstance(other, (int, float)):
            return ScalarField.constant(float(other))
        return NotImplemented

    def __neg__(self) -> "ScalarField":
        h = None
        if self._hessian is not None:
            def h(x, y, _h=self._hessian):
                a, b, c = _h(x, y)
                return -a, -b, -c
        return ScalarField(lambda x, y: -self._value(x, y),
                           lambda x, y: -self._dx(x, y),
                           lambda x, y: -self._dy(x, y), h,
                           label=f"-({self.label})")

    def __add__(self, other) -> "ScalarField":
        o = self._lift(other)
        if o is NotImplemented:
            return o
        f, g = self, o
        h = None
        if f._hessian is not None and g._hessian is not None:
            def h(x, y):
                a = f._hessian(x, y)
                b = g._hessian(x, y)
                return a[0] + b[0], a[1] + b[1], a[2] + b[2]
        return ScalarField(lambda x, y: f(x, y) + g(x, y),
                           lambda x, y: f._dx(x, y) + g._dx(x, y),
                           lambda x, y: f._dy(x, y) + g._dy(x, y), h,
                           label=f"({f.label})+({g.label})")

    __radd__ = __add__

    def __sub__(self, other) -> "ScalarField":
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other) -> "ScalarField":
        return (-self) + other

    def __mul__(self, other) -> "ScalarField":
        o = self._lift(other)
        if o is NotImplemented:
            return o
        f, g = self, o
        h = None
        if f._hessian is not None and g._hessian is not None:
            def h(x, y):
                fv, gv = f(x, y), g(x, y)
                fx, fy = f.grad(x, y)
                gx, gy = g.grad(x, y)
                a = f._hessian(x, y)
                b = g._hessian(x, y)
                return (a[0] * gv + 2 * fx * gx + fv * b[0],
                        a[1] * gv + fx * gy + fy * gx + fv * b[1],
                        a[2] * gv + 2 * fy * gy + fv * b[2])
        return ScalarField(lambda x, y: f(x, y) * g(x, y),
                           lambda x, y: f._dx(x, y) * g(x, y) + f(x, y) * g._dx(x, y),
                           lambda x, y: f._dy(x, y) * g(x, y) + f(x, y) * g._dy(x, y), h,
                           label=f"({f.label})*({g.label})")

    __rmul__ = __mul__

    def reciprocal(self) -> "ScalarField":
        f = self

        def value(x, y):
            v = f(x, y)
            if np.any(v == 0):
                raise EvaluationError("division by zero in field quotient")
            return 1.0 / v

        h = None
        if f._hessian is not None:
            def h(x, y):
                v = f(x, y)
                fx, fy = f.grad(x, y)
                a = f._hessian(x, y)
                v2, v3 = v * v, v * v * v
                return (2 * fx * fx / v3 - a[0] / v2,
                        2 * fx * fy / v3 - a[1] / v2,
                        2 * fy * fy / v3 - a[2] / v2)
        return ScalarField(value,
                           lambda x, y: -f._dx(x, y) / f(x, y) ** 2,
                           lambda x, y: -f._dy(x, y) / f(x, y) ** 2, h,
                           label=f"1/({f.label})")

    def __truediv__(self, other) -> "ScalarField":
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self * o.reciprocal()

    def __rtruediv__(self, other) -> "ScalarField":
        return self.reciprocal() * other
